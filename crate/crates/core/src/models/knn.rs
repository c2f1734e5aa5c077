//! k nearest historical trajectories by observed-prefix distance.

use super::{clamp_increasing, ModelError, ModelKind, Prediction, Predictor, Query, TrainingSet};

/// Storage-only model: training keeps the trips.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub(crate) times: Vec<Vec<f64>>,
}

/// Squared Euclidean distance between `observed` and each trip's prefix.
pub(crate) fn prefix_sq_distances(times: &[Vec<f64>], observed: &[f64]) -> Vec<f64> {
    let c = observed.len();
    times
        .iter()
        .map(|t| {
            let mut s = 0.0;
            for (a, b) in observed.iter().zip(&t[..c]) {
                let d = a - b;
                s += d * d;
            }
            s
        })
        .collect()
}

/// Indices of the `k` smallest distances, closest first; ties by index.
pub(crate) fn k_closest(dist: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    let cmp = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

impl KnnModel {
    pub fn train(ts: &TrainingSet, k: usize) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidParameter("k must be at least 1".into()));
        }
        if k > ts.len() {
            return Err(ModelError::KTooLarge { k, trips: ts.len() });
        }
        Ok(Self { k, times: ts.trips.iter().map(|t| t.times.clone()).collect() })
    }

    pub fn trip_count(&self) -> usize {
        self.times.len()
    }
}

impl Predictor for KnnModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Knn
    }

    fn anchor_count(&self) -> usize {
        self.times[0].len()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        let n = self.anchor_count();
        q.check(n)?;
        let c = q.current_index();
        let now = q.current_time();
        let dist = prefix_sq_distances(&self.times, &q.observed);
        let mut estimates = vec![0.0; n - 1 - c];
        for j in k_closest(&dist, self.k) {
            let t = &self.times[j];
            for (e, ti) in estimates.iter_mut().zip(&t[c + 1..]) {
                *e += (ti - t[c]) + now;
            }
        }
        let k = self.k as f64;
        estimates.iter_mut().for_each(|e| *e /= k);
        clamp_increasing(now, &mut estimates);
        Ok(Prediction { estimates })
    }
}
