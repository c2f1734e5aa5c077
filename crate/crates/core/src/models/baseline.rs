//! Reference pseudo-models that bracket the real ones.

use super::{clamp_increasing, ModelError, ModelKind, Prediction, Predictor, Query, TrainingSet};

/// Returns the true future of the known trip named by the query, or failing
/// that the first one matching its departure time and observed prefix.
/// Estimates are not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleModel {
    pub(crate) ids: Vec<String>,
    pub(crate) tods: Vec<f64>,
    pub(crate) times: Vec<Vec<f64>>,
}

impl OracleModel {
    pub fn new(ts: &TrainingSet) -> Self {
        Self {
            ids: ts.trips.iter().map(|t| t.trip_id.clone()).collect(),
            tods: ts.trips.iter().map(|t| t.departure_time_of_day).collect(), times: ts.trips.iter().map(|t| t.times.clone()).collect(),
        }
    }
}

impl Predictor for OracleModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Oracle
    }

    fn anchor_count(&self) -> usize {
        self.times[0].len()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        q.check(self.anchor_count())?;
        let c = q.current_index();
        let by_id = q.trip_id.as_ref().and_then(|id| self.ids.iter().position(|x| x == id));
        by_id
            .or_else(|| (0..self.times.len()).find(|&j| self.tods[j] == q.departure_time_of_day && self.times[j][..=c] == q.observed[..]))
            .map(|j| Prediction { estimates: self.times[j][c + 1..].to_vec() })
            .ok_or_else(|| ModelError::InvalidQuery("oracle has no trip matching the query".into()))
    }
}

/// Predicts the mean final travel time at every remaining anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantModel {
    pub value: f64,
    pub(crate) anchors: usize,
}

impl ConstantModel {
    pub fn train(ts: &TrainingSet) -> Self {
        let n = ts.anchor_count();
        let value = ts.trips.iter().map(|t| t.times[n - 1]).sum::<f64>() / ts.len() as f64;
        Self { value, anchors: n }
    }
}

impl Predictor for ConstantModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Constant
    }

    fn anchor_count(&self) -> usize {
        self.anchors
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        q.check(self.anchors)?;
        let mut estimates = vec![self.value; self.anchors - 1 - q.current_index()];
        clamp_increasing(q.current_time(), &mut estimates);
        Ok(Prediction { estimates })
    }
}
