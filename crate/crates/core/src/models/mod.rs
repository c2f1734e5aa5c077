//! Arrival-time predictors.
//!
//! Every model is trained on a [`TrainingSet`] of aligned trips sharing one
//! anchor set and answers a [`Query`]: the departure time of day and the
//! travel times observed up to the current anchor `c`. The answer is the
//! estimated travel time at every later anchor.

use std::fmt;

use thiserror::Error;

use crate::alignment::AlignedTrip;

pub mod additive;
pub mod baseline;
pub mod delay;
pub mod kernel;
pub mod knn;
pub mod lstm;
pub mod persist;

pub use additive::{AdditiveConfig, AdditiveModel};
pub use baseline::{ConstantModel, OracleModel};
pub use delay::{DelayModel, MeanProfile};
pub use kernel::KernelModel;
pub use knn::KnnModel;
pub use lstm::{LstmConfig, LstmModel};
pub use persist::TrainedModel;

/// Minimum spacing enforced between consecutive estimates, seconds.
pub const MIN_STEP_S: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("k = {k} exceeds the {trips} training trips")]
    KTooLarge { k: usize, trips: usize },
    #[error("additive fit is singular; too little or degenerate data")]
    SingularFit,
    #[error("LSTM loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Delay,
    Knn,
    Kr,
    Bam,
    Lstm,
    /// Looks up the true future of a known trip; a zero-error reference.
    Oracle,
    /// Training-mean travel time everywhere; a floor for sanity checks.
    Constant,
}

impl ModelKind {
    pub const PREDICTORS: [ModelKind; 5] = [ModelKind::Delay, ModelKind::Knn, ModelKind::Kr, ModelKind::Bam, ModelKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Delay => "delay",
            ModelKind::Knn => "knn",
            ModelKind::Kr => "kr",
            ModelKind::Bam => "bam",
            ModelKind::Lstm => "lstm",
            ModelKind::Oracle => "oracle",
            ModelKind::Constant => "constant",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "delay" => ModelKind::Delay,
            "knn" | "k-nn" => ModelKind::Knn,
            "kr" | "kernel" => ModelKind::Kr,
            "bam" | "additive" => ModelKind::Bam,
            "lstm" | "rnn-lstm" => ModelKind::Lstm,
            "oracle" => ModelKind::Oracle,
            "constant" => ModelKind::Constant,
            other => return Err(format!("unknown model {other:?}")),
        })
    }
}

/// Aligned trips over one anchor set.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    /// Cumulative distance of every anchor, meters.
    pub anchor_distances: Vec<f64>,
    pub trips: Vec<AlignedTrip>,
}

impl TrainingSet {
    pub fn new(anchor_distances: Vec<f64>, trips: Vec<AlignedTrip>) -> Result<Self, ModelError> {
        let n = anchor_distances.len();
        if n < 2 {
            return Err(ModelError::InvalidTrainingSet(format!("need at least 2 anchors, got {n}")));
        }
        if trips.is_empty() {
            return Err(ModelError::InvalidTrainingSet("no trips".into()));
        }
        if let Some(t) = trips.iter().find(|t| t.times.len() != n) {
            return Err(ModelError::InvalidTrainingSet(format!("trip {} has {} times, expected {n}", t.trip_id, t.times.len())));
        }
        Ok(Self { anchor_distances, trips })
    }

    pub fn anchor_count(&self) -> usize {
        self.anchor_distances.len()
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }
}

/// What is known when a bus reaches anchor `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub departure_time_of_day: f64,
    /// `observed[i]` is the travel time to anchor `i`, for `i <= c`.
    pub observed: Vec<f64>,
    /// Set when replaying a known trip; only reference models look at it.
    pub trip_id: Option<String>,
}

impl Query {
    pub fn new(departure_time_of_day: f64, observed: Vec<f64>) -> Self {
        Self { departure_time_of_day, observed, trip_id: None }
    }

    /// Query for a known trip stopped at anchor `c`.
    pub fn from_trip(trip: &AlignedTrip, c: usize) -> Self {
        Self { departure_time_of_day: trip.departure_time_of_day, observed: trip.times[..=c].to_vec(), trip_id: Some(trip.trip_id.clone()) }
    }

    pub fn current_index(&self) -> usize {
        self.observed.len() - 1
    }

    pub fn current_time(&self) -> f64 {
        *self.observed.last().unwrap()
    }

    pub fn check(&self, anchor_count: usize) -> Result<(), ModelError> {
        let Some(&first) = self.observed.first() else {
            return Err(ModelError::InvalidQuery("empty observed prefix".into()));
        };
        if first != 0.0 {
            return Err(ModelError::InvalidQuery("observed[0] must be 0".into()));
        }
        if self.observed.len() + 1 > anchor_count {
            return Err(ModelError::InvalidQuery(format!("current index {} leaves nothing to predict of {anchor_count}", self.observed.len() - 1)));
        }
        if self.observed.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ModelError::InvalidQuery("observed times not strictly increasing".into()));
        }
        Ok(())
    }
}

/// Estimates for anchors `c+1..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub estimates: Vec<f64>,
}

/// Raises estimates so each is at least [`MIN_STEP_S`] above its predecessor,
/// starting from the observed time at the current anchor. NaN is raised too.
pub fn clamp_increasing(current: f64, estimates: &mut [f64]) {
    let mut prev = current;
    for e in estimates.iter_mut() {
        if !(*e >= prev + MIN_STEP_S) {
            *e = prev + MIN_STEP_S;
        }
        prev = *e;
    }
}

pub trait Predictor: Send + Sync {
    fn kind(&self) -> ModelKind;
    fn anchor_count(&self) -> usize;
    fn predict(&self, q: &Query) -> Result<Prediction, ModelError>;
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub knn_k: usize,
    /// `None` selects the median heuristic.
    pub kr_bandwidth: Option<f64>,
    pub additive: AdditiveConfig,
    pub lstm: LstmConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { knn_k: 10, kr_bandwidth: None, additive: AdditiveConfig::default(), lstm: LstmConfig::default() }
    }
}

/// Trains `kind` on `ts`. The oracle is built from `ts` itself.
pub fn train(kind: ModelKind, ts: &TrainingSet, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    Ok(match kind {
        ModelKind::Delay => TrainedModel::Delay(DelayModel::train(ts)),
        ModelKind::Knn => TrainedModel::Knn(KnnModel::train(ts, cfg.knn_k)?),
        ModelKind::Kr => TrainedModel::Kr(KernelModel::train(ts, cfg.kr_bandwidth)?),
        ModelKind::Bam => TrainedModel::Bam(AdditiveModel::train(ts, &cfg.additive)?),
        ModelKind::Lstm => TrainedModel::Lstm(LstmModel::train(ts, &cfg.lstm)?.0),
        ModelKind::Oracle => TrainedModel::Oracle(OracleModel::new(ts)),
        ModelKind::Constant => TrainedModel::Constant(ConstantModel::train(ts)),
    })
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn trip(id: &str, tod: f64, times: Vec<f64>) -> AlignedTrip {
        AlignedTrip { trip_id: id.into(), departure_epoch: None, departure_time_of_day: tod, times }
    }

    /// `m` random trips over `n` anchors 300 m apart.
    pub fn random_set(seed: u64, m: usize, n: usize) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trips = (0..m)
            .map(|j| {
                let mut t = vec![0.0];
                for _ in 1..n {
                    let last = *t.last().unwrap();
                    t.push(last + rng.random_range(30.0..90.0));
                }
                trip(&format!("t{j}"), rng.random_range(20_000.0..80_000.0), t)
            })
            .collect();
        TrainingSet::new((0..n).map(|i| i as f64 * 300.0).collect(), trips).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_rules() {
        let mut e = vec![105.0, 104.0, f64::NAN, 300.0];
        clamp_increasing(110.0, &mut e);
        assert_eq!(e, vec![111.0, 112.0, 113.0, 300.0]);
    }

    #[test]
    fn query_checks() {
        assert!(Query::new(0.0, vec![0.0, 10.0]).check(3).is_ok());
        assert!(Query::new(0.0, vec![0.0, 10.0, 20.0]).check(3).is_err());
        assert!(Query::new(0.0, vec![1.0]).check(3).is_err());
        assert!(Query::new(0.0, vec![0.0, 0.0]).check(4).is_err());
        assert!(Query::new(0.0, vec![]).check(4).is_err());
    }

    #[test]
    fn training_set_checks() {
        use test_util::trip;
        assert!(TrainingSet::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(TrainingSet::new(vec![0.0, 1.0], vec![trip("a", 0.0, vec![0.0, 1.0, 2.0])]).is_err());
        assert!(TrainingSet::new(vec![0.0, 1.0], vec![trip("a", 0.0, vec![0.0, 1.0])]).is_ok());
    }

    #[test]
    fn kind_names_parse() {
        for k in ModelKind::PREDICTORS.iter().chain(&[ModelKind::Oracle, ModelKind::Constant]) {
            assert_eq!(k.name().parse::<ModelKind>(), Ok(*k));
        }
    }
}
