//! Real-time replay of test trips and the accuracy/timing measurements.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::str::FromStr;
use std::thread;
use std::time::Instant;

use thiserror::Error;

use crate::alignment::AlignedTrip;
use crate::models::{ModelError, Predictor, Query};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no estimate records to score")]
    EmptyRecords,
    #[error("trip {trip} has {got} anchors but the model expects {expected}")]
    AnchorMismatch { trip: String, got: usize, expected: usize },
    #[error("trip {trip} at anchor {anchor}: {source}")]
    Model { trip: String, anchor: usize, source: ModelError },
}

/// One estimate issued at anchor `from_anchor` for `target_anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub trip_j: usize,
    pub from_anchor: usize,
    pub target_anchor: usize,
    pub predicted: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccuracyMode {
    /// Every estimate of the replay counts.
    #[default]
    PerEstimate,
    /// Only estimates issued at departure (anchor 0).
    FirstQueryOnly,
}

impl FromStr for AccuracyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per_estimate" | "per-estimate" => Ok(Self::PerEstimate),
            "first_query_only" | "first-query-only" => Ok(Self::FirstQueryOnly),
            _ => Err(format!("unknown accuracy mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub estimate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    pub train_wall: f64,
    pub predict_wall_total: f64,
}

fn replay_trip(model: &dyn Predictor, j: usize, trip: &AlignedTrip, out: &mut Vec<EstimateRecord>) -> Result<(), EvalError> {
    let n = model.anchor_count();
    if trip.times.len() != n {
        return Err(EvalError::AnchorMismatch { trip: trip.trip_id.clone(), got: trip.times.len(), expected: n });
    }
    for c in 0..n - 1 {
        let p = model
            .predict(&Query::from_trip(trip, c))
            .map_err(|source| EvalError::Model { trip: trip.trip_id.clone(), anchor: c, source })?;
        for (k, predicted) in p.estimates.into_iter().enumerate() {
            let i = c + 1 + k;
            out.push(EstimateRecord { trip_j: j, from_anchor: c, target_anchor: i, predicted, actual: trip.times[i] });
        }
    }
    Ok(())
}

/// Replays every trip anchor by anchor; `n(n-1)/2` records per trip.
pub fn simulate(model: &dyn Predictor, trips: &[AlignedTrip]) -> Result<Vec<EstimateRecord>, EvalError> {
    let n = model.anchor_count();
    let mut out = Vec::with_capacity(trips.len() * n * (n - 1) / 2);
    for (j, t) in trips.iter().enumerate() {
        replay_trip(model, j, t, &mut out)?;
    }
    Ok(out)
}

/// [`simulate`] with trips fanned out over `workers` threads. Output order
/// matches the sequential version.
pub fn simulate_parallel(model: &dyn Predictor, trips: &[AlignedTrip], workers: usize) -> Result<Vec<EstimateRecord>, EvalError> {
    let workers = workers.max(1);
    if workers == 1 || trips.len() < 2 {
        return simulate(model, trips);
    }
    let chunk = trips.len().div_ceil(workers);
    let parts: Vec<Result<Vec<EstimateRecord>, EvalError>> = thread::scope(|s| {
        let handles: Vec<_> = trips
            .chunks(chunk)
            .enumerate()
            .map(|(w, part)| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for (k, t) in part.iter().enumerate() {
                        replay_trip(model, w * chunk + k, t, &mut out)?;
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// MAE and MAPE are plain means. RMSE takes the root of the squared error
/// sum within each `(trip, from_anchor)` group, adds the roots, and divides
/// by the number of records.
pub fn accuracy(records: &[EstimateRecord], mode: AccuracyMode) -> Result<AccuracyReport, EvalError> {
    let mut count = 0usize;
    let (mut abs, mut pct) = (0.0, 0.0);
    let mut groups: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for r in records {
        if mode == AccuracyMode::FirstQueryOnly && r.from_anchor != 0 {
            continue;
        }
        let e = r.predicted - r.actual;
        abs += e.abs();
        pct += e.abs() / r.actual;
        *groups.entry((r.trip_j, r.from_anchor)).or_insert(0.0) += e * e;
        count += 1;
    }
    let roots: f64 = groups.values().map(|s| s.sqrt()).sum();
    if count == 0 {
        return Err(EvalError::EmptyRecords);
    }
    let m = count as f64;
    Ok(AccuracyReport { mae: abs / m, rmse: roots / m, mape: pct / m * 100.0, estimate_count: count })
}

/// Runs `f` once under the wall clock.
pub fn time_train<T, E>(f: impl FnOnce() -> Result<T, E>) -> Result<(T, f64), E> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Untimed warm-up replay followed by a timed single-threaded replay.
pub fn time_predict(model: &dyn Predictor, trips: &[AlignedTrip]) -> Result<(Vec<EstimateRecord>, f64), EvalError> {
    simulate(model, trips)?;
    let start = Instant::now();
    let records = simulate(model, trips)?;
    Ok((records, start.elapsed().as_secs_f64()))
}

pub const RECORDS_HEADER: &str = "trip_j,from_anchor,target_anchor,predicted,actual";

pub fn write_records<W: Write>(records: &[EstimateRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{},{}", r.trip_j, r.from_anchor, r.target_anchor, r.predicted, r.actual)?;
    }
    Ok(())
}

/// Reads a file written by [`write_records`].
pub fn read_records<R: io::BufRead>(r: R) -> io::Result<Vec<EstimateRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let err = |m: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {m}", i + 1));
        if i == 0 {
            if line.trim() != RECORDS_HEADER {
                return Err(err(format!("expected header {RECORDS_HEADER:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 columns, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let rec = EstimateRecord { trip_j: int(f[0])?, from_anchor: int(f[1])?, target_anchor: int(f[2])?, predicted: num(f[3])?, actual: num(f[4])? };
        if rec.target_anchor <= rec.from_anchor || !(rec.actual > 0.0) {
            return Err(err("target must follow the current anchor and actual time must be positive".into()));
        }
        out.push(rec);
    }
    Ok(out)
}

impl AccuracyReport {
    pub fn write_csv<W: Write>(&self, mode: AccuracyMode, mut w: W) -> io::Result<()> {
        let mode = match mode {
            AccuracyMode::PerEstimate => "per_estimate",
            AccuracyMode::FirstQueryOnly => "first_query_only",
        };
        writeln!(w, "mode,mae,rmse,mape,estimate_count")?;
        writeln!(w, "{mode},{},{},{},{}", self.mae, self.rmse, self.mape, self.estimate_count)
    }
}
