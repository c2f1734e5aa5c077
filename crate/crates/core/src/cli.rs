//! The `bustime` command line.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data or
//! validation error. Progress goes to stderr through `log`; data goes to
//! files only.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use thiserror::Error;

use crate::alignment::{deviation_stats, read_aligned, write_aligned, AnchorSet, Scheme};
use crate::bench::{emit_tables, run_bench, BenchPlan, EmitOptions};
use crate::evalsim::{accuracy, read_records, time_predict, write_records, AccuracyMode};
use crate::ingest::{group_journeys, parse_gps, parse_gtfs, Direction, RoutePair};
use crate::models::{self, AdditiveConfig, LstmConfig, ModelConfig, ModelKind, Predictor, TrainedModel, TrainingSet};
use crate::pipeline::{align_corpus, build_corpora};
use crate::segmentation::{read_trips, segment_all, write_rejects, write_trip_index, write_trips, SegmentationConfig};
use crate::synth::{generate, write_all, SpeedModel, SynthConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "bustime", version, about = "Bus arrival-time prediction from GPS traces", args_override_self = true)]
pub struct Cli {
    /// File of `key=value` lines supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Seed for every random choice the subcommand makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic route, GPS feed and ground truth.
    Synth(SynthArgs),
    /// Segment a raw GPS feed into complete trips.
    Preprocess(PreprocessArgs),
    /// Align trips to stop anchors and 100 m distance marks.
    Align(AlignArgs),
    /// Train one model on the earliest aligned trips.
    Train(TrainArgs),
    /// Replay held-out trips through a trained model.
    Predict(PredictArgs),
    /// Score replay records.
    Evaluate(EvaluateArgs),
    /// Run the scaling benchmark end to end.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub trips: usize,
    #[arg(long, default_value_t = 59)]
    pub stops: usize,
    #[arg(long, default_value_t = 19_000.0)]
    pub route_length: f64,
    #[arg(long, default_value_t = 600.0)]
    pub headway: f64,
    #[arg(long, default_value_t = 20)]
    pub fleet: usize,
    /// GPS noise standard deviation, meters.
    #[arg(long, default_value_t = 10.0)]
    pub gps_noise: f64,
    #[arg(long, default_value_t = 30.0)]
    pub sample_period: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stay_points: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noisy_points: f64,
    #[arg(long, default_value_t = 0.0)]
    pub missing_segments: f64,
    #[arg(long, default_value_t = 0.0)]
    pub invalid_trips: f64,
    /// Drive every trip at this fixed speed (m/s) with no variation.
    #[arg(long)]
    pub constant_speed: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SegmentationArgs {
    #[arg(long, default_value_t = 900.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 30)]
    pub probe: usize,
    #[arg(long, default_value_t = 300.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// Seconds added to UTC to get local time of day.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub utc_offset: f64,
}

impl SegmentationArgs {
    fn config(&self) -> Result<SegmentationConfig, CliError> {
        let cfg = SegmentationConfig {
            gap_split_s: self.gap,
            direction_probe_points: self.probe,
            endpoint_radius_m: self.radius,
            min_completeness_fraction: self.fraction,
            utc_offset_s: self.utc_offset,
        };
        cfg.validate().map_err(CliError::Usage)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub gtfs: PathBuf,
    #[arg(long)]
    pub gps: PathBuf,
    /// Route to keep; optional when the GTFS feed has a single route.
    #[arg(long)]
    pub route: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub gtfs: PathBuf,
    /// Directory holding `trips.csv` and `trips_index.csv`.
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub route: Option<String>,
    #[arg(long, default_value = "outbound")]
    pub direction: Direction,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    pub knn_k: usize,
    /// Kernel bandwidth in seconds squared; the median heuristic when absent.
    #[arg(long)]
    pub kr_bandwidth: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub bam_knots: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub bam_lambda: f64,
    #[arg(long, default_value_t = 32)]
    pub lstm_hidden: usize,
    #[arg(long, default_value_t = 300)]
    pub lstm_epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub aligned: PathBuf,
    #[arg(long)]
    pub anchors: PathBuf,
    #[arg(long)]
    pub model: ModelKind,
    /// Fraction of rows, from the top, used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: ModelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub aligned: PathBuf,
    /// Rows after this fraction are replayed; 0 replays every row.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value = "per_estimate")]
    pub mode: AccuracyMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Plan file of `key=value` lines; the default plan when absent.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Start from the desk-scale plan instead of the full one.
    #[arg(long)]
    pub reduced: bool,
    #[arg(long, requires = "gps")]
    pub gtfs: Option<PathBuf>,
    #[arg(long, requires = "gtfs")]
    pub gps: Option<PathBuf>,
    #[arg(long)]
    pub route: Option<String>,
    /// Trips to synthesize when no feed is given (both directions together).
    #[arg(long, default_value_t = 1200)]
    pub synth_trips: usize,
    #[arg(long, default_value = "outbound")]
    pub direction: Direction,
    #[arg(long)]
    pub out: PathBuf,
    /// Leave timing tables and columns out of the outputs.
    #[arg(long)]
    pub no_timings: bool,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
}

/// Subcommand names, for locating where config-file flags go.
const SUBCOMMANDS: [&str; 7] = ["synth", "preprocess", "align", "train", "predict", "evaluate", "bench"];

/// Inserts `--key value` pairs from the `--config` file right after the
/// subcommand name, so flags given on the command line override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<Option<&str>> = args.iter().map(|a| a.to_str()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        match a {
            Some("--config") => path = strs.get(i + 1).copied().flatten().map(PathBuf::from),
            Some(s) if s.starts_with("--config=") => path = Some(PathBuf::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    let Some(path) = path else { return Ok(args) };
    let Some(sub_at) = strs.iter().position(|a| a.is_some_and(|s| SUBCOMMANDS.contains(&s))) else { return Ok(args) };
    let sub = strs[sub_at].unwrap();
    let text = fs::read_to_string(&path).map_err(|e| data(&path, e))?;
    let cmd = Cli::command();
    let subcmd = cmd.find_subcommand(sub).expect("known subcommand");
    let mut injected: Vec<OsString> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| data(&path, format!("line {}: expected key=value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim();
        let arg = subcmd.get_arguments().chain(cmd.get_arguments()).find(|a| a.get_long() == Some(key.as_str()));
        let is_switch = arg.is_some_and(|a| !a.get_action().takes_values());
        if is_switch {
            match value {
                "true" | "1" | "yes" => injected.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => return Err(data(&path, format!("line {}: {key} takes true or false, got {other:?}", n + 1))),
            }
        } else {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        }
    }
    let mut out = args[..=sub_at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub_at + 1..]);
    Ok(out)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).try_init();
    log::info!("resolved configuration: {cli:?}");
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Preprocess(a) => preprocess(a),
        Command::Align(a) => align(a),
        Command::Train(a) => train(a, cli.seed),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a, cli.seed),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| data(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| data(path, e))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| data(dir, e))
}

fn fraction(name: &str, v: f64, lo_inclusive: bool) -> Result<(), CliError> {
    let ok = if lo_inclusive { (0.0..1.0).contains(&v) } else { v > 0.0 && v <= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} {v} is out of range")))
    }
}

fn synth(a: &SynthArgs, seed: Option<u64>) -> Result<(), CliError> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        seed: seed.unwrap_or(defaults.seed),
        stops: a.stops,
        route_length: a.route_length,
        trips: a.trips,
        headway: a.headway,
        fleet: a.fleet,
        speed: a.constant_speed.map_or(defaults.speed.clone(), SpeedModel::constant),
        gps_noise_sigma: a.gps_noise,
        sample_period: a.sample_period,
        stay_points: a.stay_points,
        noisy_points: a.noisy_points,
        missing_segments: a.missing_segments,
        invalid_trips: a.invalid_trips,
        ..defaults
    };
    log::info!("synth config: {cfg:?}");
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    write_all(&out, &a.out).map_err(|e| CliError::Data(e.to_string()))?;
    log::info!("wrote {} GPS records for {} trips to {}", out.gps.len(), out.truth.trips.len(), a.out.display());
    Ok(())
}

fn load_routes(gtfs: &Path, route: Option<&str>) -> Result<RoutePair, CliError> {
    let routes = parse_gtfs(gtfs).map_err(|e| CliError::Data(e.to_string()))?;
    let id = match route {
        Some(r) => r.to_string(),
        None => {
            let mut ids: Vec<&str> = routes.iter().map(|r| r.route_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            match ids.as_slice() {
                [one] => one.to_string(),
                _ => return Err(CliError::Usage(format!("{} has {} routes; pick one with --route", gtfs.display(), ids.len()))),
            }
        }
    };
    RoutePair::select(&routes, &id).map_err(|e| data(gtfs, e))
}

fn preprocess(a: &PreprocessArgs) -> Result<(), CliError> {
    let cfg = a.segmentation.config()?;
    let routes = load_routes(&a.gtfs, a.route.as_deref())?;
    let parsed = parse_gps(&a.gps).map_err(|e| CliError::Data(e.to_string()))?;
    log::info!("{}: {} rows, {} dropped", a.gps.display(), parsed.total_rows, parsed.dropped);
    let line = &routes.outbound.route_id;
    let records: Vec<_> = parsed.records.into_iter().filter(|r| &r.line_id == line).collect();
    let outcome = segment_all(&group_journeys(&records), &routes, &cfg);
    out_dir(&a.out)?;
    let p = a.out.join("trips.csv");
    write_trips(&outcome.trips, create(&p)?).map_err(|e| data(&p, e))?;
    let p = a.out.join("trips_index.csv");
    write_trip_index(&outcome.trips, create(&p)?).map_err(|e| data(&p, e))?;
    let p = a.out.join("rejects.csv");
    write_rejects(&outcome.rejects, create(&p)?).map_err(|e| data(&p, e))?;
    let p = a.out.join("reject_summary.csv");
    outcome.tally.write_csv(create(&p)?).map_err(|e| data(&p, e))?;
    log::info!("{} trips kept, {} fragments rejected", outcome.trips.len(), outcome.rejects.len());
    Ok(())
}

fn align(a: &AlignArgs) -> Result<(), CliError> {
    let routes = load_routes(&a.gtfs, a.route.as_deref())?;
    let points = a.trips.join("trips.csv");
    let index = a.trips.join("trips_index.csv");
    let trips = read_trips(open(&points)?, open(&index)?).map_err(|e| data(&points, e))?;
    let route = routes.get(a.direction);
    out_dir(&a.out)?;
    for scheme in Scheme::ALL {
        let corpus = align_corpus(&trips, route, scheme);
        for f in &corpus.failures {
            log::warn!("{scheme}: {f}");
        }
        let name = scheme.short_name();
        let p = a.out.join(format!("aligned_{name}.csv"));
        write_aligned(&corpus.trips, corpus.anchors.len(), create(&p)?).map_err(|e| data(&p, e))?;
        let p = a.out.join(format!("anchors_{name}.csv"));
        corpus.anchors.write_csv(create(&p)?).map_err(|e| data(&p, e))?;
        log::info!("{scheme}: {} anchors, {} trips aligned, {} failed", corpus.anchors.len(), corpus.trips.len(), corpus.failures.len());
        if scheme == Scheme::StopBased {
            let p = a.out.join("deviation_stats.csv");
            match deviation_stats(&corpus.deviations) {
                Ok(s) => s.write_csv(create(&p)?).map_err(|e| data(&p, e))?,
                Err(e) => log::warn!("no deviation statistics: {e}"),
            }
        }
    }
    Ok(())
}

fn split_at(len: usize, fraction: f64) -> usize {
    (len as f64 * fraction).round() as usize
}

fn train(a: &TrainArgs, seed: Option<u64>) -> Result<(), CliError> {
    fraction("split", a.split, false)?;
    let trips = read_aligned(open(&a.aligned)?).map_err(|e| data(&a.aligned, e))?;
    let anchors = AnchorSet::read_csv(open(&a.anchors)?).map_err(|e| data(&a.anchors, e))?;
    let k = split_at(trips.len(), a.split);
    let ts = TrainingSet::new(anchors.distances(), trips[..k].to_vec()).map_err(|e| data(&a.aligned, e))?;
    let p = &a.params;
    let cfg = ModelConfig {
        knn_k: p.knn_k,
        kr_bandwidth: p.kr_bandwidth,
        additive: AdditiveConfig { knots: p.bam_knots, lambda: p.bam_lambda },
        lstm: LstmConfig { hidden: p.lstm_hidden, epochs: p.lstm_epochs, learning_rate: p.learning_rate, seed: seed.unwrap_or(0) },
    };
    log::info!("training {} on {} of {} trips with {cfg:?}", a.model, k, trips.len());
    let start = std::time::Instant::now();
    let model = models::train(a.model, &ts, &cfg).map_err(|e| data(&a.aligned, e))?;
    log::info!("trained in {:.3} s", start.elapsed().as_secs_f64());
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    model.save(&a.out).map_err(|e| data(&a.out, e))
}

fn predict(a: &PredictArgs) -> Result<(), CliError> {
    fraction("split", a.split, true)?;
    let model = TrainedModel::load(&a.model).map_err(|e| CliError::Data(e.to_string()))?;
    let trips = read_aligned(open(&a.aligned)?).map_err(|e| data(&a.aligned, e))?;
    let test = &trips[split_at(trips.len(), a.split)..];
    if let Some(t) = test.iter().find(|t| t.times.len() != model.anchor_count()) {
        return Err(data(&a.aligned, format!("trip {} has {} anchors, model expects {}", t.trip_id, t.times.len(), model.anchor_count())));
    }
    let (records, secs) = time_predict(&model, test).map_err(|e| data(&a.aligned, e))?;
    log::info!("{} estimates for {} trips in {secs:.4} s", records.len(), test.len());
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    write_records(&records, create(&a.out)?).map_err(|e| data(&a.out, e))
}

fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let records = read_records(open(&a.records)?).map_err(|e| data(&a.records, e))?;
    let report = accuracy(&records, a.mode).map_err(|e| data(&a.records, e))?;
    log::info!("MAE {:.3} s, RMSE {:.3} s, MAPE {:.3} % over {} estimates", report.mae, report.rmse, report.mape, report.estimate_count);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    report.write_csv(a.mode, create(&a.out)?).map_err(|e| data(&a.out, e))
}

fn bench(a: &BenchArgs, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = a.segmentation.config()?;
    let mut plan = if a.reduced { BenchPlan::reduced() } else { BenchPlan::default() };
    if let Some(p) = &a.plan {
        let text = fs::read_to_string(p).map_err(|e| data(p, e))?;
        let mut overrides = plan.clone();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| data(p, format!("line {}: expected key=value", i + 1)))?;
            overrides.set(k.trim(), v.trim()).map_err(|e| data(p, format!("line {}: {e}", i + 1)))?;
        }
        plan = overrides;
    }
    if let Some(s) = seed {
        plan.seed = s;
    }
    plan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    log::info!("bench plan: {plan:?}");
    let (gps, routes) = match (&a.gtfs, &a.gps) {
        (Some(gtfs), Some(gps)) => {
            let routes = load_routes(gtfs, a.route.as_deref())?;
            let parsed = parse_gps(gps).map_err(|e| CliError::Data(e.to_string()))?;
            let line = routes.outbound.route_id.clone();
            (parsed.records.into_iter().filter(|r| r.line_id == line).collect(), routes)
        }
        _ => {
            let scfg = SynthConfig { trips: a.synth_trips, seed: plan.seed, ..SynthConfig::default() };
            let out = generate(&scfg).map_err(|e| CliError::Usage(e.to_string()))?;
            log::info!("synthesized {} trips", a.synth_trips);
            (out.gps, out.routes)
        }
    };
    let corpora = build_corpora(&gps, &routes, a.direction, &cfg);
    log::info!(
        "{} trips segmented; aligned {} stop-based and {} distance-based",
        corpora.segmentation.trips.len(),
        corpora.stop.trips.len(),
        corpora.distance.trips.len()
    );
    let report = run_bench(&plan, &[&corpora.stop, &corpora.distance]).map_err(|e| CliError::Data(e.to_string()))?;
    let written = emit_tables(&report, &a.out, EmitOptions { timings: !a.no_timings }).map_err(|e| CliError::Data(e.to_string()))?;
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_lines_become_leading_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        fs::write(&p, "# defaults\ntrips = 40\nno_timings=true\nreduced=false\n").unwrap();
        let got = expand_config(args(&["bustime", "--config", p.to_str().unwrap(), "bench", "--trips", "7"])).unwrap();
        let want = args(&["bustime", "--config", p.to_str().unwrap(), "bench", "--trips", "40", "--no-timings", "--trips", "7"]);
        assert_eq!(got, want);
    }

    #[test]
    fn explicit_flags_beat_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        fs::write(&p, "trips=40\nstops=12\n").unwrap();
        let a = expand_config(args(&["bustime", "synth", "--config", p.to_str().unwrap(), "--out", "x", "--trips", "7"])).unwrap();
        let cli = Cli::try_parse_from(a).unwrap();
        match cli.command {
            Command::Synth(s) => assert_eq!((s.trips, s.stops), (7, 12)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(args(&["bustime", "synth", "--bogus"])), 1);
        assert_eq!(main_with_args(args(&["bustime"])), 1);
        assert_eq!(main_with_args(args(&["bustime", "--help"])), 0);
        assert_eq!(main_with_args(args(&["bustime", "evaluate", "--records", "/nonexistent/r.csv", "--out", "/tmp/x.csv"])), 2);
        assert_eq!(main_with_args(args(&["bustime", "--config", "/nonexistent/c.conf", "synth", "--out", "x"])), 2);
    }
}
