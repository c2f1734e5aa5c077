//! Mean travel-time profile shifted by the bus's current delay.

use super::{clamp_increasing, ModelKind, Prediction, Predictor, Query, ModelError, TrainingSet};

/// `mu[i]`: mean travel time to anchor `i` over the training trips.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProfile {
    pub mu: Vec<f64>,
}

impl MeanProfile {
    pub fn from_set(ts: &TrainingSet) -> Self {
        let n = ts.anchor_count();
        let mut mu = vec![0.0; n];
        for t in &ts.trips {
            for (m, x) in mu.iter_mut().zip(&t.times) {
                *m += x;
            }
        }
        let m = ts.len() as f64;
        mu.iter_mut().for_each(|x| *x /= m);
        Self { mu }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    pub profile: MeanProfile,
}

impl DelayModel {
    pub fn train(ts: &TrainingSet) -> Self {
        Self { profile: MeanProfile::from_set(ts) }
    }
}

impl Predictor for DelayModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Delay
    }

    fn anchor_count(&self) -> usize {
        self.profile.mu.len()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        q.check(self.anchor_count())?;
        let c = q.current_index();
        let mu = &self.profile.mu;
        let delay = q.current_time() - mu[c];
        let mut estimates: Vec<f64> = mu[c + 1..].iter().map(|m| m + delay).collect();
        clamp_increasing(q.current_time(), &mut estimates);
        Ok(Prediction { estimates })
    }
}
