//! Additive model: intercept plus cubic B-spline terms in departure time
//! of day and cumulative distance, fitted by ridge-penalized least squares.

use super::{clamp_increasing, ModelError, ModelKind, Prediction, Predictor, Query, TrainingSet};

const DEGREE: usize = 3;
/// Pivots below this fraction of the largest diagonal entry count as singular.
const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveConfig {
    /// Uniform interior knots per spline term.
    pub knots: usize,
    /// Ridge penalty on spline coefficients; the intercept is unpenalized.
    pub lambda: f64,
}

impl Default for AdditiveConfig {
    fn default() -> Self {
        Self { knots: 10, lambda: 1e-3 }
    }
}

/// Clamped cubic B-spline basis on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub lo: f64,
    pub hi: f64,
    knots: Vec<f64>,
}

impl SplineBasis {
    /// A degenerate range is widened by one unit so the basis stays defined.
    pub fn new(lo: f64, hi: f64, interior: usize) -> Self {
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let mut knots = vec![lo; DEGREE + 1];
        for k in 1..=interior {
            knots.push(lo + (hi - lo) * k as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(hi, DEGREE + 1));
        Self { lo, hi, knots }
    }

    pub fn size(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    /// Index of the first nonzero function and the `DEGREE + 1` nonzero values
    /// at `x`, which is clamped to the range.
    pub fn eval(&self, x: f64) -> (usize, [f64; DEGREE + 1]) {
        let u = &self.knots;
        let x = x.clamp(self.lo, self.hi);
        let n = self.size() - 1;
        let span = if x >= u[n + 1] {
            n
        } else {
            let (mut low, mut high) = (DEGREE, n + 1);
            let mut mid = (low + high) / 2;
            while x < u[mid] || x >= u[mid + 1] {
                if x < u[mid] {
                    high = mid;
                } else {
                    low = mid;
                }
                mid = (low + high) / 2;
            }
            mid
        };
        let mut out = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        out[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            out[j] = saved;
        }
        (span - DEGREE, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveModel {
    pub config: AdditiveConfig,
    pub tod_basis: SplineBasis,
    pub dist_basis: SplineBasis,
    /// `[intercept, tod coefficients.., distance coefficients..]`.
    pub beta: Vec<f64>,
    pub anchor_distances: Vec<f64>,
}

/// In-place Cholesky solve of the symmetric system `a x = b`.
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, p: usize) -> Result<Vec<f64>, ModelError> {
    let max_diag = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > PIVOT_TOL * max_diag) {
            return Err(ModelError::SingularFit);
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * p + k] * b[k];
        }
        b[i] = s / a[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= a[k * p + i] * b[k];
        }
        b[i] = s / a[i * p + i];
    }
    Ok(b)
}

impl AdditiveModel {
    pub fn train(ts: &TrainingSet, cfg: &AdditiveConfig) -> Result<Self, ModelError> {
        if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("lambda must be non-negative, got {}", cfg.lambda)));
        }
        let n = ts.anchor_count();
        let (tlo, thi) = ts
            .trips
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t.departure_time_of_day), b.max(t.departure_time_of_day)));
        let dist = &ts.anchor_distances;
        let tod_basis = SplineBasis::new(tlo, thi, cfg.knots);
        let dist_basis = SplineBasis::new(dist[1], dist[n - 1], cfg.knots);
        let (k1, k2) = (tod_basis.size(), dist_basis.size());
        let p = 1 + k1 + k2;

        let dist_rows: Vec<_> = dist[1..].iter().map(|&d| dist_basis.eval(d)).collect();
        let mut xtx = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        let mut idx = [0usize; 1 + 2 * (DEGREE + 1)];
        let mut val = [0.0; 1 + 2 * (DEGREE + 1)];
        for t in &ts.trips {
            let (s1, b1) = tod_basis.eval(t.departure_time_of_day);
            for (i, &(s2, b2)) in dist_rows.iter().enumerate() {
                let y = t.times[i + 1];
                idx[0] = 0;
                val[0] = 1.0;
                for r in 0..=DEGREE {
                    idx[1 + r] = 1 + s1 + r;
                    val[1 + r] = b1[r];
                    idx[2 + DEGREE + r] = 1 + k1 + s2 + r;
                    val[2 + DEGREE + r] = b2[r];
                }
                for a in 0..idx.len() {
                    xty[idx[a]] += val[a] * y;
                    for b in 0..idx.len() {
                        xtx[idx[a] * p + idx[b]] += val[a] * val[b];
                    }
                }
            }
        }
        for j in 1..p {
            xtx[j * p + j] += cfg.lambda;
        }
        let beta = cholesky_solve(xtx, xty, p)?;
        Ok(Self { config: *cfg, tod_basis, dist_basis, beta, anchor_distances: dist.clone() })
    }

    /// Fitted travel time before clamping.
    pub fn surface(&self, tod: f64, distance: f64) -> f64 {
        let k1 = self.tod_basis.size();
        let (s1, b1) = self.tod_basis.eval(tod);
        let (s2, b2) = self.dist_basis.eval(distance);
        let mut y = self.beta[0];
        for r in 0..=DEGREE {
            y += self.beta[1 + s1 + r] * b1[r] + self.beta[1 + k1 + s2 + r] * b2[r];
        }
        y
    }
}

impl Predictor for AdditiveModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Bam
    }

    fn anchor_count(&self) -> usize {
        self.anchor_distances.len()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        q.check(self.anchor_count())?;
        let c = q.current_index();
        let mut estimates: Vec<f64> = self.anchor_distances[c + 1..].iter().map(|&d| self.surface(q.departure_time_of_day, d)).collect();
        clamp_increasing(q.current_time(), &mut estimates);
        Ok(Prediction { estimates })
    }
}
