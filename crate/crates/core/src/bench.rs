//! Scaling experiment: growing chronological groups, an 80/20 split inside
//! each, every model under every anchor scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use thiserror::Error;

use crate::alignment::{AlignedTrip, Scheme};
use crate::evalsim::{accuracy, simulate_parallel, time_predict, time_train, AccuracyMode, AccuracyReport};
use crate::models::{self, AdditiveConfig, LstmConfig, ModelConfig, ModelKind, OracleModel, TrainedModel};
use crate::pipeline::AlignedCorpus;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("plan line {line}: {reason}")]
    Plan { line: usize, reason: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no corpus for scheme {0}")]
    MissingCorpus(Scheme),
    #[error("nothing to emit: report is empty")]
    EmptyReport,
    #[error("cannot write {path}: {source}")]
    UnwritableDirectory { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSize {
    First(usize),
    /// The whole corpus.
    Full,
}

impl fmt::Display for GroupSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSize::First(n) => write!(f, "{n}"),
            GroupSize::Full => f.write_str("full"),
        }
    }
}

impl FromStr for GroupSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "full" | "all" => Ok(GroupSize::Full),
            x => x.parse::<usize>().ok().filter(|&n| n > 0).map(GroupSize::First).ok_or_else(|| format!("bad group size {x:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub groups: Vec<GroupSize>,
    pub split: f64,
    pub models: Vec<ModelKind>,
    pub schemes: Vec<Scheme>,
    pub knn_k: usize,
    pub kr_bandwidth: Option<f64>,
    pub bam: AdditiveConfig,
    pub lstm_hidden: usize,
    /// Groups the LSTM runs at, with the epoch count for each.
    pub lstm_groups: BTreeMap<GroupSize, usize>,
    pub seed: u64,
    /// Run groups concurrently; timings are then not comparable.
    pub parallel: bool,
}

impl Default for BenchPlan {
    fn default() -> Self {
        let mut groups: Vec<GroupSize> = (1..=8).map(|k| GroupSize::First(500 * k)).collect();
        groups.push(GroupSize::Full);
        Self {
            groups,
            split: 0.8,
            models: ModelKind::PREDICTORS.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            knn_k: 10,
            kr_bandwidth: None,
            bam: AdditiveConfig::default(),
            lstm_hidden: 32,
            lstm_groups: BTreeMap::from([(GroupSize::First(1000), 600), (GroupSize::First(3000), 300)]),
            seed: 0,
            parallel: false,
        }
    }
}

impl BenchPlan {
    /// A desk-scale plan that still exercises every model and scheme.
    pub fn reduced() -> Self {
        Self {
            groups: vec![GroupSize::First(100), GroupSize::First(200), GroupSize::Full],
            lstm_hidden: 8,
            lstm_groups: BTreeMap::from([(GroupSize::First(200), 30)]),
            ..Self::default()
        }
    }

    /// Parses `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut plan = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| BenchError::Plan { line: i + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            plan.set(key.trim(), value.trim()).map_err(err)?;
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad number {v:?}"))
        }
        fn list<T: FromStr<Err = String>>(v: &str) -> Result<Vec<T>, String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(T::from_str).collect()
        }
        match key {
            "groups" => self.groups = list(value)?,
            "split" => self.split = num(value)?,
            "models" => self.models = list(value)?,
            "schemes" => self.schemes = list(value)?,
            "knn_k" => self.knn_k = num(value)?,
            "kr_bandwidth" => self.kr_bandwidth = if value == "auto" { None } else { Some(num(value)?) },
            "bam_knots" => self.bam.knots = num(value)?,
            "bam_lambda" => self.bam.lambda = num(value)?,
            "lstm_hidden" => self.lstm_hidden = num(value)?,
            "lstm_groups" => {
                self.lstm_groups = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|item| {
                        let (g, e) = item.split_once(':').ok_or_else(|| format!("expected group:epochs, got {item:?}"))?;
                        Ok((g.parse()?, num(e)?))
                    })
                    .collect::<Result<_, String>>()?
            }
            "seed" => self.seed = num(value)?,
            "parallel" => self.parallel = num(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidPlan(m.to_string()));
        if self.groups.is_empty() || self.models.is_empty() || self.schemes.is_empty() {
            return bad("groups, models and schemes must be non-empty");
        }
        if self.groups.windows(2).any(|w| w[0] >= w[1]) {
            return bad("group sizes must be strictly increasing");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad("split must lie strictly between 0 and 1");
        }
        Ok(())
    }

    fn model_config(&self, epochs: usize) -> ModelConfig {
        ModelConfig {
            knn_k: self.knn_k,
            kr_bandwidth: self.kr_bandwidth,
            additive: self.bam,
            lstm: LstmConfig { hidden: self.lstm_hidden, epochs, seed: self.seed, ..LstmConfig::default() },
        }
    }

    /// The `(group, model, scheme)` cells this plan attempts, in run order.
    pub fn cells(&self) -> Vec<(GroupSize, ModelKind, Scheme)> {
        let mut out = Vec::new();
        for &g in &self.groups {
            for &m in &self.models {
                if m == ModelKind::Lstm && !self.lstm_groups.contains_key(&g) {
                    continue;
                }
                for &s in &self.schemes {
                    out.push((g, m, s));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub group: GroupSize,
    /// Trips actually used after clamping to the corpus size.
    pub effective: usize,
    pub model: ModelKind,
    pub scheme: Scheme,
    pub train_n: usize,
    pub test_n: usize,
    pub status: CellStatus,
    pub train_s: f64,
    pub predict_s: f64,
    pub accuracy: Option<AccuracyReport>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

fn split_point(size: usize, fraction: f64) -> usize {
    (size as f64 * fraction).round() as usize
}

fn run_cell(plan: &BenchPlan, group: GroupSize, kind: ModelKind, corpus: &AlignedCorpus, timed: bool) -> BenchRow {
    let total = corpus.trips.len();
    let effective = match group {
        GroupSize::First(n) => n.min(total),
        GroupSize::Full => total,
    };
    let train_n = split_point(effective, plan.split);
    let test_n = effective - train_n;
    let mut row = BenchRow {
        group,
        effective,
        model: kind,
        scheme: corpus.scheme(),
        train_n,
        test_n,
        status: CellStatus::Ok,
        train_s: 0.0,
        predict_s: 0.0,
        accuracy: None,
    };
    if train_n == 0 || test_n == 0 {
        row.status = CellStatus::Failed(format!("group of {effective} trips leaves an empty train or test split"));
        return row;
    }
    let (train, test): (&[AlignedTrip], &[AlignedTrip]) = (&corpus.trips[..train_n], &corpus.trips[train_n..effective]);
    let epochs = plan.lstm_groups.get(&group).copied().unwrap_or(0);
    let cfg = plan.model_config(epochs);
    let result = (|| -> Result<(f64, f64, AccuracyReport), String> {
        let ts = corpus.training_set(train).map_err(|e| e.to_string())?;
        let (model, train_s) = if kind == ModelKind::Oracle {
            let truth = corpus.training_set(test).map_err(|e| e.to_string())?;
            time_train(|| Ok::<_, String>(TrainedModel::Oracle(OracleModel::new(&truth))))?
        } else {
            time_train(|| models::train(kind, &ts, &cfg)).map_err(|e| e.to_string())?
        };
        let (records, predict_s) = if timed {
            time_predict(&model, test).map_err(|e| e.to_string())?
        } else {
            (simulate_parallel(&model, test, 1).map_err(|e| e.to_string())?, 0.0)
        };
        let acc = accuracy(&records, AccuracyMode::PerEstimate).map_err(|e| e.to_string())?;
        Ok((train_s, predict_s, acc))
    })();
    match result {
        Ok((t, p, a)) => {
            row.train_s = t;
            row.predict_s = p;
            row.accuracy = Some(a);
        }
        Err(e) => row.status = CellStatus::Failed(e),
    }
    row
}

/// Runs every cell of `plan`. Corpora must be in departure order; one per
/// scheme named in the plan. Cell failures are recorded, not returned.
pub fn run_bench(plan: &BenchPlan, corpora: &[&AlignedCorpus]) -> Result<BenchReport, BenchError> {
    plan.validate()?;
    for &s in &plan.schemes {
        if !corpora.iter().any(|c| c.scheme() == s) {
            return Err(BenchError::MissingCorpus(s));
        }
    }
    let corpus = |s: Scheme| *corpora.iter().find(|c| c.scheme() == s).unwrap();
    let cells = plan.cells();
    let run_group = |g: GroupSize| -> Vec<BenchRow> {
        cells
            .iter()
            .filter(|c| c.0 == g)
            .map(|&(g, m, s)| {
                log::info!("bench cell group={g} model={m} scheme={s}");
                run_cell(plan, g, m, corpus(s), !plan.parallel)
            })
            .collect()
    };
    let rows = if plan.parallel {
        thread::scope(|scope| {
            let handles: Vec<_> = plan.groups.iter().map(|&g| scope.spawn(move || run_group(g))).collect();
            handles.into_iter().flat_map(|h| h.join().expect("bench worker panicked")).collect()
        })
    } else {
        plan.groups.iter().flat_map(|&g| run_group(g)).collect()
    };
    Ok(BenchReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TrainTime,
    PredictTime,
    Mae,
    Rmse,
    Mape,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::TrainTime, Metric::PredictTime, Metric::Mae, Metric::Rmse, Metric::Mape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TrainTime => "train_time",
            Metric::PredictTime => "predict_time",
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
            Metric::Mape => "mape",
        }
    }

    pub fn is_timing(self) -> bool {
        matches!(self, Metric::TrainTime | Metric::PredictTime)
    }

    fn value(self, row: &BenchRow) -> Option<f64> {
        let a = row.accuracy?;
        Some(match self {
            Metric::TrainTime => row.train_s,
            Metric::PredictTime => row.predict_s,
            Metric::Mae => a.mae,
            Metric::Rmse => a.rmse,
            Metric::Mape => a.mape,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    /// Write timing tables and timing values; off for byte-for-byte comparisons.
    pub timings: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self { timings: true }
    }
}

fn cell_text(row: Option<&BenchRow>, metric: Metric) -> String {
    match row {
        None => "-".into(),
        Some(r) if r.status != CellStatus::Ok => "ERR".into(),
        Some(r) => metric.value(r).map_or("ERR".into(), |v| format!("{v:.4}")),
    }
}

/// Writes one wide table per metric (`<metric>.csv`, cells `stop/distance`),
/// `long.csv` and `report.csv` into `dir`. Returns the paths written.
pub fn emit_tables(report: &BenchReport, dir: &Path, opts: EmitOptions) -> Result<Vec<PathBuf>, BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let werr = |path: &Path| {
        let path = path.to_path_buf();
        move |e: csv::Error| BenchError::UnwritableDirectory { path, source: e.into() }
    };
    fs::create_dir_all(dir).map_err(|source| BenchError::UnwritableDirectory { path: dir.to_path_buf(), source })?;
    let mut groups: Vec<(GroupSize, usize)> = Vec::new();
    let mut models: Vec<ModelKind> = Vec::new();
    for r in &report.rows {
        if !groups.iter().any(|g| g.0 == r.group) {
            groups.push((r.group, r.effective));
        }
        if !models.contains(&r.model) {
            models.push(r.model);
        }
    }
    let find = |g: GroupSize, m: ModelKind, s: Scheme| report.rows.iter().find(|r| r.group == g && r.model == m && r.scheme == s);
    let mut written = Vec::new();
    for metric in Metric::ALL.into_iter().filter(|m| opts.timings || !m.is_timing()) {
        let path = dir.join(format!("{}.csv", metric.name()));
        let mut w = csv::Writer::from_path(&path).map_err(werr(&path))?;
        let mut header = vec!["group".to_string(), "trips".to_string()];
        header.extend(models.iter().map(|m| format!("{m} (stop/distance)")));
        w.write_record(&header).map_err(werr(&path))?;
        for &(g, eff) in &groups {
            let mut rec = vec![g.to_string(), eff.to_string()];
            for &m in &models {
                let stop = cell_text(find(g, m, Scheme::StopBased), metric);
                let dist = cell_text(find(g, m, Scheme::DistanceBased), metric);
                rec.push(format!("{stop}/{dist}"));
            }
            w.write_record(&rec).map_err(werr(&path))?;
        }
        w.flush().map_err(|e| BenchError::UnwritableDirectory { path: path.clone(), source: e })?;
        written.push(path);
    }

    let path = dir.join("long.csv");
    let mut w = csv::Writer::from_path(&path).map_err(werr(&path))?;
    w.write_record(["group", "trips", "model", "scheme", "metric", "value", "status"]).map_err(werr(&path))?;
    for r in &report.rows {
        for metric in Metric::ALL.into_iter().filter(|m| opts.timings || !m.is_timing()) {
            let (value, status) = match &r.status {
                CellStatus::Ok => (metric.value(r).map_or(String::new(), |v| v.to_string()), "ok".to_string()),
                CellStatus::Failed(e) => (String::new(), e.clone()),
            };
            w.write_record([r.group.to_string(), r.effective.to_string(), r.model.to_string(), r.scheme.to_string(), metric.name().into(), value, status])
                .map_err(werr(&path))?;
        }
    }
    w.flush().map_err(|e| BenchError::UnwritableDirectory { path: path.clone(), source: e })?;
    written.push(path);

    let path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&path).map_err(werr(&path))?;
    w.write_record(["group", "trips", "model", "scheme", "train_n", "test_n", "status", "train_s", "predict_s", "mae", "rmse", "mape", "estimates"])
        .map_err(werr(&path))?;
    for r in &report.rows {
        let status = match &r.status {
            CellStatus::Ok => "ok".to_string(),
            CellStatus::Failed(e) => e.clone(),
        };
        let timing = |v: f64| if opts.timings && r.accuracy.is_some() { v.to_string() } else { String::new() };
        let acc = |f: fn(&AccuracyReport) -> String| r.accuracy.as_ref().map_or(String::new(), f);
        w.write_record([
            r.group.to_string(),
            r.effective.to_string(),
            r.model.to_string(),
            r.scheme.to_string(),
            r.train_n.to_string(),
            r.test_n.to_string(),
            status,
            timing(r.train_s),
            timing(r.predict_s),
            acc(|a| a.mae.to_string()),
            acc(|a| a.rmse.to_string()),
            acc(|a| a.mape.to_string()),
            acc(|a| a.estimate_count.to_string()),
        ])
        .map_err(werr(&path))?;
    }
    w.flush().map_err(|e| BenchError::UnwritableDirectory { path: path.clone(), source: e })?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{Anchor, AnchorSet};

    fn corpus(scheme: Scheme, m: usize, n: usize) -> AlignedCorpus {
        let anchors = AnchorSet {
            scheme,
            anchors: (0..n).map(|i| Anchor { anchor_id: i.to_string(), position: None, cumulative_distance: i as f64 * 100.0 }).collect(),
        };
        let trips = (0..m)
            .map(|j| AlignedTrip {
                trip_id: format!("t{j}"),
                departure_epoch: Some(1000.0 * j as f64),
                departure_time_of_day: (1000.0 * j as f64) % 86_400.0,
                times: (0..n).map(|i| i as f64 * (20.0 + (j % 7) as f64)).collect(),
            })
            .collect();
        AlignedCorpus { anchors, trips, failures: vec![], deviations: vec![] }
    }

    #[test]
    fn plan_parsing() {
        let p = BenchPlan::parse("# demo\ngroups = 10, 20, full\nmodels=delay,knn\nschemes=stop\nlstm_groups=20:5\nseed=3\nparallel=true\n").unwrap();
        assert_eq!(p.groups, vec![GroupSize::First(10), GroupSize::First(20), GroupSize::Full]);
        assert_eq!(p.models, vec![ModelKind::Delay, ModelKind::Knn]);
        assert_eq!(p.schemes, vec![Scheme::StopBased]);
        assert_eq!(p.lstm_groups[&GroupSize::First(20)], 5);
        assert!(p.parallel);
        assert!(matches!(BenchPlan::parse("groups=20,10"), Err(BenchError::InvalidPlan(_))));
        assert!(matches!(BenchPlan::parse("x\n"), Err(BenchError::Plan { line: 1, .. })));
        assert!(matches!(BenchPlan::parse("bogus=1"), Err(BenchError::Plan { .. })));
    }

    #[test]
    fn default_plan_cell_count() {
        let p = BenchPlan::default();
        assert_eq!(p.cells().len(), 9 * 4 * 2 + 2 * 2);
    }

    #[test]
    fn delay_only_split_arithmetic() {
        let plan = BenchPlan { groups: vec![GroupSize::First(10), GroupSize::First(20)], models: vec![ModelKind::Delay], ..BenchPlan::default() };
        let (s, d) = (corpus(Scheme::StopBased, 25, 5), corpus(Scheme::DistanceBased, 25, 9));
        let r = run_bench(&plan, &[&s, &d]).unwrap();
        assert_eq!(r.rows.len(), 4);
        let g20 = r.rows.iter().find(|x| x.group == GroupSize::First(20)).unwrap();
        assert_eq!((g20.train_n, g20.test_n), (16, 4));
        assert!(r.rows.iter().all(|x| x.status == CellStatus::Ok));
    }

    #[test]
    fn oversize_group_is_clamped_and_failures_recorded() {
        let plan = BenchPlan {
            groups: vec![GroupSize::First(1), GroupSize::First(100)],
            models: vec![ModelKind::Knn],
            schemes: vec![Scheme::StopBased],
            ..BenchPlan::default()
        };
        let s = corpus(Scheme::StopBased, 30, 5);
        let r = run_bench(&plan, &[&s]).unwrap();
        assert!(matches!(r.rows[0].status, CellStatus::Failed(_)));
        assert_eq!(r.rows[1].effective, 30);
        assert_eq!(r.rows[1].status, CellStatus::Ok);
        assert!(matches!(run_bench(&BenchPlan::default(), &[&s]), Err(BenchError::MissingCorpus(Scheme::DistanceBased))));
    }

    #[test]
    fn oracle_cells_are_zero() {
        let plan = BenchPlan { groups: vec![GroupSize::Full], models: vec![ModelKind::Oracle], ..BenchPlan::default() };
        let (s, d) = (corpus(Scheme::StopBased, 20, 5), corpus(Scheme::DistanceBased, 20, 9));
        for row in run_bench(&plan, &[&s, &d]).unwrap().rows {
            let a = row.accuracy.unwrap();
            assert_eq!((a.mae, a.rmse, a.mape), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn chronological_split() {
        let s = corpus(Scheme::StopBased, 25, 5);
        for size in [10usize, 20, 25] {
            let k = split_point(size, 0.8);
            let train_max = s.trips[..k].iter().map(|t| t.departure_epoch.unwrap()).fold(f64::MIN, f64::max);
            let test_min = s.trips[k..size].iter().map(|t| t.departure_epoch.unwrap()).fold(f64::MAX, f64::min);
            assert!(train_max < test_min);
        }
    }

    #[test]
    fn emitted_tables() {
        let plan = BenchPlan { groups: vec![GroupSize::First(20)], models: vec![ModelKind::Delay, ModelKind::Knn], knn_k: 3, ..BenchPlan::default() };
        let (s, d) = (corpus(Scheme::StopBased, 25, 5), corpus(Scheme::DistanceBased, 25, 9));
        let r = run_bench(&plan, &[&s, &d]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = EmitOptions { timings: false };
        emit_tables(&r, dir.path(), opts).unwrap();
        let mae = fs::read_to_string(dir.path().join("mae.csv")).unwrap();
        let lines: Vec<&str> = mae.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "group,trips,delay (stop/distance),knn (stop/distance)");
        assert_eq!(lines[1].split(',').count(), 4);
        assert!(!dir.path().join("train_time.csv").exists());

        let first: Vec<Vec<u8>> = ["mae.csv", "rmse.csv", "mape.csv", "long.csv", "report.csv"].iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        emit_tables(&r, dir.path(), opts).unwrap();
        let again: Vec<Vec<u8>> = ["mae.csv", "rmse.csv", "mape.csv", "long.csv", "report.csv"].iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        assert_eq!(first, again);

        // every filled half-cell of the wide tables is one long row
        let long_rows = fs::read_to_string(dir.path().join("long.csv")).unwrap().lines().count() - 1;
        let mut cells = 0;
        for f in ["mae.csv", "rmse.csv", "mape.csv"] {
            for line in fs::read_to_string(dir.path().join(f)).unwrap().lines().skip(1) {
                cells += line.split(',').skip(2).flat_map(|c| c.split('/')).filter(|h| *h != "-").count();
            }
        }
        assert_eq!(long_rows, cells);
        assert!(matches!(emit_tables(&BenchReport::default(), dir.path(), opts), Err(BenchError::EmptyReport)));
    }
}
