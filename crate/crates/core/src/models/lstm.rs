//! Single-layer LSTM over anchors with a linear readout.
//!
//! Step `i` sees `(tod, t_i, d_i, d_{i+1})`, each min-max scaled, and emits the
//! scaled `t_{i+1}`. Training is full-batch Adam on the mean squared error.
//! Prediction teacher-forces the observed prefix and then feeds its own
//! outputs back in.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{clamp_increasing, ModelError, ModelKind, Prediction, Predictor, Query, TrainingSet};

pub const INPUTS: usize = 4;
const INIT_SCALE: f64 = 0.08;
const GRAD_CHUNKS: usize = 8;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self { hidden: 32, epochs: 300, learning_rate: 0.01, seed: 0 }
    }
}

/// Affine map of one feature onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub lo: f64,
    pub hi: f64,
}

impl MinMax {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        Self { lo, hi: if hi > lo { hi } else { lo + 1.0 } }
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn unscale(&self, y: f64) -> f64 {
        self.lo + y * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub hidden: usize,
    /// Flat `[W (4H x (4+H), rows i,f,g,o), b (4H), w_out (H), b_out]`.
    pub params: Vec<f64>,
    pub tod_scale: MinMax,
    pub time_scale: MinMax,
    pub dist_scale: MinMax,
    pub anchor_distances: Vec<f64>,
}

pub fn param_count(hidden: usize) -> usize {
    4 * hidden * (INPUTS + hidden) + 4 * hidden + hidden + 1
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct View<'a> {
    h: usize,
    w: &'a [f64],
    b: &'a [f64],
    w_out: &'a [f64],
    b_out: f64,
}

/// Outputs of one cell step, written into caller-owned slices.
struct StepOut<'b> {
    gates: &'b mut [f64],
    c: &'b mut [f64],
    tanh_c: &'b mut [f64],
    h: &'b mut [f64],
}

impl<'a> View<'a> {
    fn new(p: &'a [f64], h: usize) -> Self {
        let nw = 4 * h * (INPUTS + h);
        Self { h, w: &p[..nw], b: &p[nw..nw + 4 * h], w_out: &p[nw + 4 * h..nw + 5 * h], b_out: p[nw + 5 * h] }
    }

    /// One cell step; returns the scaled readout.
    fn step(&self, x: &[f64; INPUTS], h_prev: &[f64], c_prev: &[f64], out: StepOut<'_>) -> f64 {
        let hd = self.h;
        let cols = INPUTS + hd;
        for (r, g) in out.gates.iter_mut().enumerate() {
            let row = &self.w[r * cols..(r + 1) * cols];
            let mut s = self.b[r];
            for k in 0..INPUTS {
                s += row[k] * x[k];
            }
            for (w, h) in row[INPUTS..].iter().zip(h_prev) {
                s += w * h;
            }
            *g = if r / hd == 2 { s.tanh() } else { sigmoid(s) };
        }
        let gates = &*out.gates;
        let mut y = self.b_out;
        for k in 0..hd {
            out.c[k] = gates[hd + k] * c_prev[k] + gates[k] * gates[2 * hd + k];
            out.tanh_c[k] = out.c[k].tanh();
            out.h[k] = gates[3 * hd + k] * out.tanh_c[k];
            y += self.w_out[k] * out.h[k];
        }
        y
    }
}

/// Recurrent state for inference, with scratch space for one step.
struct Runner<'a> {
    v: View<'a>,
    h: Vec<f64>,
    c: Vec<f64>,
    next_h: Vec<f64>,
    next_c: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl<'a> Runner<'a> {
    fn new(p: &'a [f64], hd: usize) -> Self {
        let z = vec![0.0; hd];
        Self { v: View::new(p, hd), h: z.clone(), c: z.clone(), next_h: z.clone(), next_c: z.clone(), gates: vec![0.0; 4 * hd], tanh_c: z }
    }

    fn advance(&mut self, x: &[f64; INPUTS]) -> f64 {
        let out = StepOut { gates: &mut self.gates, c: &mut self.next_c, tanh_c: &mut self.tanh_c, h: &mut self.next_h };
        let y = self.v.step(x, &self.h, &self.c, out);
        std::mem::swap(&mut self.h, &mut self.next_h);
        std::mem::swap(&mut self.c, &mut self.next_c);
        y
    }
}

/// Scaled inputs and targets for one trip.
struct Sequence {
    xs: Vec<[f64; INPUTS]>,
    ys: Vec<f64>,
}

/// Forward and backward pass over one sequence; adds into `grad` and
/// returns the sum of squared errors.
fn sequence_grad(p: &[f64], hd: usize, seq: &Sequence, grad: &mut [f64]) -> f64 {
    let v = View::new(p, hd);
    let cols = INPUTS + hd;
    let nw = 4 * hd * cols;
    let steps = seq.xs.len();
    // row t + 1 of h and c is the state after step t; row 0 is the zero state
    let mut gates = vec![0.0; steps * 4 * hd];
    let mut tanh_c = vec![0.0; steps * hd];
    let mut hs = vec![0.0; (steps + 1) * hd];
    let mut cs = vec![0.0; (steps + 1) * hd];
    let mut outs = Vec::with_capacity(steps);
    for (t, x) in seq.xs.iter().enumerate() {
        let (h_done, h_rest) = hs.split_at_mut((t + 1) * hd);
        let (c_done, c_rest) = cs.split_at_mut((t + 1) * hd);
        let out = StepOut {
            gates: &mut gates[t * 4 * hd..(t + 1) * 4 * hd],
            c: &mut c_rest[..hd],
            tanh_c: &mut tanh_c[t * hd..(t + 1) * hd],
            h: &mut h_rest[..hd],
        };
        outs.push(v.step(x, &h_done[t * hd..], &c_done[t * hd..], out));
    }
    let mut sse = 0.0;
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    for t in (0..steps).rev() {
        let g = &gates[t * 4 * hd..(t + 1) * 4 * hd];
        let tc = &tanh_c[t * hd..(t + 1) * hd];
        let h_now = &hs[(t + 1) * hd..(t + 2) * hd];
        let h_prev = &hs[t * hd..(t + 1) * hd];
        let c_prev = &cs[t * hd..(t + 1) * hd];
        let e = outs[t] - seq.ys[t];
        sse += e * e;
        let dy = 2.0 * e;
        grad[nw + 5 * hd] += dy;
        for k in 0..hd {
            grad[nw + 4 * hd + k] += dy * h_now[k];
            let dh = dy * v.w_out[k] + dh_next[k];
            let (gi, gf, gg, go) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
            let dc = dh * go * (1.0 - tc[k] * tc[k]) + dc_next[k];
            dz[k] = dc * gg * gi * (1.0 - gi);
            dz[hd + k] = dc * c_prev[k] * gf * (1.0 - gf);
            dz[2 * hd + k] = dc * gi * (1.0 - gg * gg);
            dz[3 * hd + k] = dh * tc[k] * go * (1.0 - go);
            dc_next[k] = dc * gf;
        }
        dh_next.iter_mut().for_each(|x| *x = 0.0);
        let x = &seq.xs[t];
        for (r, &d) in dz.iter().enumerate() {
            grad[nw + r] += d;
            let row = r * cols;
            for k in 0..INPUTS {
                grad[row + k] += d * x[k];
            }
            let gw = &mut grad[row + INPUTS..row + cols];
            let w = &v.w[row + INPUTS..row + cols];
            for k in 0..hd {
                gw[k] += d * h_prev[k];
                dh_next[k] += d * w[k];
            }
        }
    }
    sse
}

impl LstmModel {
    /// Scalers fitted on `ts` and seeded uniform weights.
    pub fn init(ts: &TrainingSet, cfg: &LstmConfig) -> Result<Self, ModelError> {
        if cfg.hidden == 0 {
            return Err(ModelError::InvalidParameter("hidden size must be at least 1".into()));
        }
        if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("learning rate must be positive, got {}", cfg.learning_rate)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = (0..param_count(cfg.hidden)).map(|_| rng.random_range(-INIT_SCALE..INIT_SCALE)).collect();
        Ok(Self {
            hidden: cfg.hidden,
            params,
            tod_scale: MinMax::fit(ts.trips.iter().map(|t| t.departure_time_of_day)),
            time_scale: MinMax::fit(ts.trips.iter().flat_map(|t| t.times.iter().copied())),
            dist_scale: MinMax::fit(ts.anchor_distances.iter().copied()),
            anchor_distances: ts.anchor_distances.clone(),
        })
    }

    /// Returns the trained model and the loss before each epoch followed by
    /// the final loss.
    pub fn train(ts: &TrainingSet, cfg: &LstmConfig) -> Result<(Self, Vec<f64>), ModelError> {
        let mut model = Self::init(ts, cfg)?;
        let seqs = model.sequences(ts);
        let np = model.params.len();
        let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
        let mut history = Vec::with_capacity(cfg.epochs + 1);
        for epoch in 0..cfg.epochs {
            let (loss, g) = model.batch_gradient(&seqs);
            if !loss.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
            history.push(loss);
            let step = (epoch + 1) as i32;
            let (c1, c2) = (1.0 - BETA1.powi(step), 1.0 - BETA2.powi(step));
            for k in 0..np {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                model.params[k] -= cfg.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
            }
        }
        let (last, _) = model.batch_gradient(&seqs);
        if !last.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch: cfg.epochs });
        }
        history.push(last);
        Ok((model, history))
    }

    fn input(&self, tod: f64, t: f64, i: usize) -> [f64; INPUTS] {
        let d = &self.anchor_distances;
        [self.tod_scale.scale(tod), self.time_scale.scale(t), self.dist_scale.scale(d[i]), self.dist_scale.scale(d[i + 1])]
    }

    fn sequences(&self, ts: &TrainingSet) -> Vec<Sequence> {
        let n = self.anchor_distances.len();
        ts.trips
            .iter()
            .map(|t| Sequence {
                xs: (0..n - 1).map(|i| self.input(t.departure_time_of_day, t.times[i], i)).collect(),
                ys: t.times[1..].iter().map(|&y| self.time_scale.scale(y)).collect(),
            })
            .collect()
    }

    /// Mean loss and gradient. Chunk partials are summed in a fixed order so
    /// the result does not depend on thread scheduling.
    fn batch_gradient(&self, seqs: &[Sequence]) -> (f64, Vec<f64>) {
        let np = self.params.len();
        let chunk = seqs.len().div_ceil(GRAD_CHUNKS).max(1);
        let partials: Vec<(f64, Vec<f64>)> = thread::scope(|s| {
            let handles: Vec<_> = seqs
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        let mut g = vec![0.0; np];
                        let sse = part.iter().map(|q| sequence_grad(&self.params, self.hidden, q, &mut g)).sum::<f64>();
                        (sse, g)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("gradient worker panicked")).collect()
        });
        let count: usize = seqs.iter().map(|q| q.ys.len()).sum();
        let mut grad = vec![0.0; np];
        let mut sse = 0.0;
        for (l, g) in partials {
            sse += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / count as f64;
        grad.iter_mut().for_each(|x| *x *= inv);
        (sse * inv, grad)
    }

    /// Mean squared error on `ts` (scaled units) and its gradient with
    /// respect to [`LstmModel::params`].
    pub fn loss_and_gradient(&self, ts: &TrainingSet) -> (f64, Vec<f64>) {
        self.batch_gradient(&self.sequences(ts))
    }

    /// One-step predictions `t_1..t_{n-1}` fed with the trip's true times.
    pub fn teacher_forced(&self, tod: f64, times: &[f64]) -> Vec<f64> {
        let mut run = Runner::new(&self.params, self.hidden);
        (0..times.len() - 1).map(|i| self.time_scale.unscale(run.advance(&self.input(tod, times[i], i)))).collect()
    }

    /// Estimates for anchors after the current one, before clamping.
    pub fn rollout(&self, q: &Query) -> Vec<f64> {
        let n = self.anchor_distances.len();
        let cur = q.current_index();
        let mut run = Runner::new(&self.params, self.hidden);
        let mut fed = 0.0;
        let mut out = Vec::with_capacity(n - 1 - cur);
        for i in 0..n - 1 {
            let t = if i <= cur { q.observed[i] } else { fed };
            fed = self.time_scale.unscale(run.advance(&self.input(q.departure_time_of_day, t, i)));
            if i >= cur {
                out.push(fed);
            }
        }
        out
    }
}

impl Predictor for LstmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Lstm
    }

    fn anchor_count(&self) -> usize {
        self.anchor_distances.len()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        q.check(self.anchor_count())?;
        let mut estimates = self.rollout(q);
        clamp_increasing(q.current_time(), &mut estimates);
        Ok(Prediction { estimates })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_util::{random_set, trip};

    fn toy() -> TrainingSet {
        TrainingSet::new(
            vec![0.0, 400.0, 900.0, 1300.0],
            vec![trip("a", 30_000.0, vec![0.0, 70.0, 150.0, 230.0]), trip("b", 60_000.0, vec![0.0, 90.0, 200.0, 260.0])],
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ts = toy();
        let cfg = LstmConfig { hidden: 3, epochs: 0, learning_rate: 0.01, seed: 7 };
        let mut m = LstmModel::init(&ts, &cfg).unwrap();
        // larger weights than the default init so every gate is exercised
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        m.params.iter_mut().for_each(|p| *p = rng.random_range(-0.8..0.8));
        let (_, g) = m.loss_and_gradient(&ts);
        let step = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..m.params.len() {
            let orig = m.params[k];
            m.params[k] = orig + step;
            let up = m.loss_and_gradient(&ts).0;
            m.params[k] = orig - step;
            let down = m.loss_and_gradient(&ts).0;
            m.params[k] = orig;
            let fd = (up - down) / (2.0 * step);
            let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn zero_epochs_keep_initialization() {
        let ts = toy();
        let cfg = LstmConfig { hidden: 4, epochs: 0, ..LstmConfig::default() };
        let (m, hist) = LstmModel::train(&ts, &cfg).unwrap();
        assert_eq!(m, LstmModel::init(&ts, &cfg).unwrap());
        assert_eq!(hist.len(), 1);
    }

    #[test]
    fn training_reduces_loss() {
        let ts = random_set(3, 40, 8);
        let cfg = LstmConfig { hidden: 8, epochs: 200, ..LstmConfig::default() };
        let (_, hist) = LstmModel::train(&ts, &cfg).unwrap();
        assert_eq!(hist.len(), 201);
        assert!(hist[200] < hist[0], "{} !< {}", hist[200], hist[0]);
    }

    #[test]
    fn training_is_deterministic() {
        let ts = random_set(4, 30, 5);
        let cfg = LstmConfig { hidden: 5, epochs: 20, ..LstmConfig::default() };
        assert_eq!(LstmModel::train(&ts, &cfg).unwrap(), LstmModel::train(&ts, &cfg).unwrap());
    }

    #[test]
    fn single_step_matches_hand_cell() {
        let ts = TrainingSet::new(vec![0.0, 1000.0], vec![trip("a", 0.0, vec![0.0, 100.0]), trip("b", 100.0, vec![0.0, 200.0])]).unwrap();
        let mut m = LstmModel::init(&ts, &LstmConfig { hidden: 1, ..LstmConfig::default() }).unwrap();
        // W rows i,f,g,o over [tod, t, d, d_next, h]; then b (4), w_out, b_out
        m.params = vec![
            0.1, 0.2, 0.3, 0.4, 0.5, //
            -0.1, 0.0, 0.2, 0.1, 0.3, //
            0.3, -0.2, 0.1, 0.5, 0.2, //
            0.2, 0.1, -0.3, 0.2, 0.1, //
            0.05, -0.05, 0.1, 0.0, //
            1.5, 0.2,
        ];
        let q = Query::new(50.0, vec![0.0]);
        // scaled input: tod 0.5, t 0, d 0, d_next 1; zero state
        let x = [0.5, 0.0, 0.0, 1.0];
        let pre = |w: [f64; 4], b: f64| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
        let i = sigmoid(pre([0.1, 0.2, 0.3, 0.4], 0.05));
        let g = pre([0.3, -0.2, 0.1, 0.5], 0.1).tanh();
        let o = sigmoid(pre([0.2, 0.1, -0.3, 0.2], 0.0));
        let h = o * (i * g).tanh();
        let want = 0.0 + (1.5 * h + 0.2) * 200.0;
        let got = m.rollout(&q);
        assert_eq!(got.len(), 1);
        assert!((got[0] - want).abs() < 1e-12, "{} vs {want}", got[0]);
    }

    #[test]
    fn zero_weights_give_constant_readout() {
        let ts = random_set(5, 4, 6);
        let mut m = LstmModel::init(&ts, &LstmConfig { hidden: 4, ..LstmConfig::default() }).unwrap();
        m.params.iter_mut().for_each(|p| *p = 0.0);
        let raw = m.rollout(&Query::new(40_000.0, vec![0.0, 50.0]));
        assert_eq!(raw.len(), 4);
        assert!(raw.iter().all(|&r| r == m.time_scale.unscale(0.0)));
        let p = m.predict(&Query::new(40_000.0, vec![0.0, 50.0])).unwrap();
        assert_eq!(p.estimates, vec![51.0, 52.0, 53.0, 54.0]);
    }

    #[test]
    fn rollout_agrees_with_teacher_forcing_on_prefix() {
        let ts = random_set(6, 10, 7);
        let (m, _) = LstmModel::train(&ts, &LstmConfig { hidden: 6, epochs: 10, ..LstmConfig::default() }).unwrap();
        let t = &ts.trips[2];
        let tf = m.teacher_forced(t.departure_time_of_day, &t.times);
        for c in 0..6 {
            let r = m.rollout(&Query::from_trip(t, c));
            assert_eq!(r[0], tf[c]);
        }
    }
}
