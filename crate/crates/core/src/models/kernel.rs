//! Gaussian-weighted average over all historical trajectories.

use super::knn::{k_closest, prefix_sq_distances};
use super::{clamp_increasing, ModelError, ModelKind, Prediction, Predictor, Query, TrainingSet};

/// Trips used when estimating the default bandwidth.
pub const BANDWIDTH_SAMPLE: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    /// Bandwidth on the squared-distance scale, seconds².
    pub bandwidth: f64,
    pub(crate) times: Vec<Vec<f64>>,
}

/// Median of pairwise squared prefix distances at `c = n/2`, over at most
/// [`BANDWIDTH_SAMPLE`] evenly strided trips. Falls back to the mean of the
/// nonzero distances, then to 1, when the median is zero.
pub fn median_heuristic(ts: &TrainingSet) -> f64 {
    let c = ts.anchor_count() / 2;
    let m = ts.len();
    let picked: Vec<&[f64]> = if m <= BANDWIDTH_SAMPLE {
        ts.trips.iter().map(|t| &t.times[..=c]).collect()
    } else {
        (0..BANDWIDTH_SAMPLE).map(|k| &ts.trips[k * m / BANDWIDTH_SAMPLE].times[..=c]).collect()
    };
    let mut d = Vec::with_capacity(picked.len() * picked.len().saturating_sub(1) / 2);
    for a in 0..picked.len() {
        for b in a + 1..picked.len() {
            d.push(picked[a].iter().zip(picked[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 1 { d[mid] } else { 0.5 * (d[mid - 1] + d[mid]) };
    if med > 0.0 {
        return med;
    }
    let nz: Vec<f64> = d.into_iter().filter(|&x| x > 0.0).collect();
    if nz.is_empty() {
        1.0
    } else {
        nz.iter().sum::<f64>() / nz.len() as f64
    }
}

impl KernelModel {
    pub fn train(ts: &TrainingSet, bandwidth: Option<f64>) -> Result<Self, ModelError> {
        let h = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(ModelError::InvalidParameter(format!("bandwidth must be positive, got {h}"))),
            None => median_heuristic(ts),
        };
        Ok(Self { bandwidth: h, times: ts.trips.iter().map(|t| t.times.clone()).collect() })
    }
}

impl Predictor for KernelModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Kr
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
        // shifting by the minimum leaves the normalized weights unchanged and
        // keeps the nearest trip's weight at exactly 1
        let dmin = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = dist.iter().map(|d| (-(d - dmin) / self.bandwidth).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut estimates = vec![0.0; n - 1 - c];
        if total.is_finite() && total > 0.0 {
            for (t, &wj) in self.times.iter().zip(&w) {
                if wj == 0.0 {
                    continue;
                }
                for (e, ti) in estimates.iter_mut().zip(&t[c + 1..]) {
                    *e += wj * (ti - t[c] + now);
                }
            }
            estimates.iter_mut().for_each(|e| *e /= total);
        } else {
            let t = &self.times[k_closest(&dist, 1)[0]];
            for (e, ti) in estimates.iter_mut().zip(&t[c + 1..]) {
                *e = ti - t[c] + now;
            }
        }
        clamp_increasing(now, &mut estimates);
        Ok(Prediction { estimates })
    }
}
