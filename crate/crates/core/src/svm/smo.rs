//! Binary soft-margin SVM trained with sequential minimal optimization.
//!
//! Each sweep scans the training set for KKT violators in index order and
//! pairs every violator with the partner of largest `|E_i - E_j|` among the
//! points it conflicts with, falling back to the other conflicting points
//! when that pair makes no progress. Violations are judged without reference
//! to a running bias, and the bias is fixed once at the end. The full Gram
//! matrix is precomputed, so each accepted step updates the gradient cache in
//! `O(n)`.

use serde::{Deserialize, Serialize};

use super::kernel::{gram_matrix, KernelSpec};
use crate::error::{Error, Result};
use crate::math::check_dim;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    /// Consecutive sweeps without an accepted step before giving up.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::default(),
            c: 10.0,
            tol: 1e-3,
            max_passes: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    pub sign: i8,
}

impl BinarySvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            check_dim(d, x.len())?;
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((sv, a), &y)| a * f64::from(y) * self.kernel.eval_unchecked(x, sv))
            .sum::<f64>()
            + self.bias)
    }

    /// `sgn(0)` is `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.decision(x)?;
        Ok(Prediction {
            score,
            sign: if score >= 0.0 { 1 } else { -1 },
        })
    }
}

pub fn predict_binary(model: &BinarySvmModel, x: &[f64]) -> Result<Prediction> {
    model.predict(x)
}

/// Solver internals exposed for verification.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoTrace {
    /// Multiplier of every training point, including zeros.
    pub alphas: Vec<f64>,
    /// Dual objective after each accepted pair update (first entry: start).
    pub objective: Vec<f64>,
    pub sweeps: usize,
}

pub fn train_binary(data: &[(Vec<f64>, i8)], params: &SvmParams) -> Result<BinarySvmModel> {
    train_binary_traced(data, params).map(|(m, _)| m)
}

pub fn train_binary_traced(
    data: &[(Vec<f64>, i8)],
    params: &SvmParams,
) -> Result<(BinarySvmModel, SmoTrace)> {
    let xs: Vec<&[f64]> = data.iter().map(|(x, _)| x.as_slice()).collect();
    let ys: Vec<i8> = data.iter().map(|(_, y)| *y).collect();
    solve(&xs, &ys, params)
}

/// `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(gram: &[f64], ys: &[i8], alphas: &[f64]) -> f64 {
    let n = ys.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * f64::from(ys[i]) * f64::from(ys[j]) * gram[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub(crate) fn solve(xs: &[&[f64]], ys: &[i8], params: &SvmParams) -> Result<(BinarySvmModel, SmoTrace)> {
    params.kernel.validate()?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter("C must be positive".into()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    let dim = xs[0].len();
    for x in xs {
        check_dim(dim, x.len())?;
    }
    if ys.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidParameter("labels must be +1 or -1".into()));
    }
    if !(ys.contains(&1) && ys.contains(&-1)) {
        return Err(Error::SingleClassData);
    }

    let mut smo = Smo::new(gram_matrix(&params.kernel, xs), ys, params);
    smo.run(params.max_passes);
    smo.finalize_bias();
    let converged = smo.kkt_satisfied();

    let keep: Vec<usize> = (0..xs.len()).filter(|&i| smo.alpha[i] > 0.0).collect();
    let model = BinarySvmModel {
        support_vectors: keep.iter().map(|&i| xs[i].to_vec()).collect(),
        alphas: keep.iter().map(|&i| smo.alpha[i]).collect(),
        labels: keep.iter().map(|&i| ys[i]).collect(),
        bias: smo.b,
        kernel: params.kernel,
        c: params.c,
        converged,
    };
    let trace = SmoTrace {
        alphas: smo.alpha,
        objective: smo.objective,
        sweeps: smo.sweeps,
    };
    Ok((model, trace))
}

struct Smo {
    n: usize,
    k: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// `sum_j alpha_j y_j K_ij`, i.e. the decision value without bias.
    g: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    /// Steps whose effect on any decision value is below this are rejected.
    min_effect: f64,
    objective: Vec<f64>,
    sweeps: usize,
}

/// Hard cap on sweeps, whatever the progress.
const MAX_SWEEPS: usize = 20_000;

impl Smo {
    fn new(k: Vec<f64>, ys: &[i8], params: &SvmParams) -> Self {
        let n = ys.len();
        Self {
            n,
            k,
            y: ys.iter().map(|&y| f64::from(y)).collect(),
            alpha: vec![0.0; n],
            g: vec![0.0; n],
            b: 0.0,
            c: params.c,
            tol: params.tol,
            min_effect: 1e-6 * params.tol,
            objective: vec![0.0],
            sweeps: 0,
        }
    }

    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    /// Prediction error up to the (common) bias term.
    fn error(&self, i: usize) -> f64 {
        self.g[i] - self.y[i]
    }

    /// The bias that would put point `i` exactly on its margin.
    fn margin_bias(&self, i: usize) -> f64 {
        self.y[i] - self.g[i]
    }

    /// Points whose KKT condition bounds the bias from below.
    fn bounds_below(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > 0.0
        }
    }

    fn bounds_above(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] > 0.0
        } else {
            self.alpha[i] < self.c
        }
    }

    /// `(max lower bound, argmax, min upper bound, argmin)` on the bias.
    fn bias_window(&self) -> (f64, usize, f64, usize) {
        let (mut lo, mut lo_i, mut hi, mut hi_i) = (f64::NEG_INFINITY, 0, f64::INFINITY, 0);
        for i in 0..self.n {
            let v = self.margin_bias(i);
            if self.bounds_below(i) && v > lo {
                lo = v;
                lo_i = i;
            }
            if self.bounds_above(i) && v < hi {
                hi = v;
                hi_i = i;
            }
        }
        (lo, lo_i, hi, hi_i)
    }

    /// A KKT violator is a point whose margin bias cannot be reconciled with
    /// some other point's within `2 tol`. Returns the partner that maximizes
    /// `|E_i - E_j|` among the points it conflicts with.
    fn partner(&self, i: usize, window: (f64, usize, f64, usize)) -> Option<usize> {
        let (lo, lo_i, hi, hi_i) = window;
        let v = self.margin_bias(i);
        let gap_up = if self.bounds_below(i) { v - hi } else { f64::NEG_INFINITY };
        let gap_down = if self.bounds_above(i) { lo - v } else { f64::NEG_INFINITY };
        let limit = 2.0 * self.tol;
        if gap_up.max(gap_down) <= limit {
            return None;
        }
        Some(if gap_up >= gap_down { hi_i } else { lo_i })
    }

    fn run(&mut self, max_passes: usize) {
        let mut idle = 0;
        while idle < max_passes && self.sweeps < MAX_SWEEPS {
            let mut changed = 0;
            let mut violators = 0;
            for i in 0..self.n {
                let window = self.bias_window();
                let Some(j) = self.partner(i, window) else {
                    continue;
                };
                violators += 1;
                if self.take_step(j, i) || self.fallback(i) {
                    changed += 1;
                }
            }
            self.sweeps += 1;
            if violators == 0 {
                break;
            }
            if changed == 0 {
                idle += 1;
            } else {
                idle = 0;
            }
        }
    }

    /// Tries every other point that conflicts with `i`, scanning from `i + 1`.
    fn fallback(&mut self, i: usize) -> bool {
        let limit = 2.0 * self.tol;
        for off in 1..self.n {
            let j = (i + off) % self.n;
            let (vi, vj) = (self.margin_bias(i), self.margin_bias(j));
            let conflict = (self.bounds_below(i) && self.bounds_above(j) && vi - vj > limit)
                || (self.bounds_above(i) && self.bounds_below(j) && vj - vi > limit);
            if conflict && self.take_step(j, i) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.error(i1), self.error(i2));
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k12, k22) = (self.kij(i1, i1), self.kij(i1, i2), self.kij(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // flat or convex direction: pick the better end point
            let gain = |t: f64| {
                let d2 = t - a2;
                let d1 = -s * d2;
                d1 + d2
                    - (d1 * y1 * self.g[i1] + d2 * y2 * self.g[i2])
                    - 0.5 * (d1 * d1 * k11 + d2 * d2 * k22 + 2.0 * d1 * d2 * y1 * y2 * k12)
            };
            let (gl, gh) = (gain(lo), gain(hi));
            if gl > gh && gl > 0.0 {
                lo
            } else if gh > gl && gh > 0.0 {
                hi
            } else {
                a2
            }
        };
        // snap to the box so bound membership is exact
        if a2_new < 1e-12 * c {
            a2_new = 0.0;
        } else if a2_new > c * (1.0 - 1e-12) {
            a2_new = c;
        }
        let d2 = a2_new - a2;
        let kscale = k11.abs().max(k22.abs()).max(k12.abs()).max(f64::MIN_POSITIVE);
        if d2.abs() * kscale < self.min_effect {
            return false;
        }
        let mut a1_new = a1 - s * d2;
        if a1_new < 1e-12 * c {
            a1_new = 0.0;
        } else if a1_new > c * (1.0 - 1e-12) {
            a1_new = c;
        }
        let d1 = a1_new - a1;

        let n = self.n;
        for i in 0..n {
            self.g[i] += y1 * d1 * self.k[i * n + i1] + y2 * d2 * self.k[i * n + i2];
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.objective.push(self.current_objective());
        true
    }

    fn current_objective(&self) -> f64 {
        let sum: f64 = self.alpha.iter().sum();
        let quad: f64 = (0..self.n).map(|i| self.alpha[i] * self.y[i] * self.g[i]).sum();
        sum - 0.5 * quad
    }

    /// Midpoint of the interval of biases allowed by the KKT conditions.
    fn finalize_bias(&mut self) {
        let (lo, _, hi, _) = self.bias_window();
        self.b = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        };
    }

    fn kkt_satisfied(&self) -> bool {
        let (lo, _, hi, _) = self.bias_window();
        lo - hi <= 2.0 * self.tol
    }
}
