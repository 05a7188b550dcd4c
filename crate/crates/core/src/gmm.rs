//! Diagonal-covariance Gaussian mixtures trained by expectation maximization.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::math::{check_dim, log_sum_exp};
use crate::signal::FaultClass;

pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_COMPONENTS: usize = 3;
const KMEANS_ITERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmParams {
    pub n_components: usize,
    pub max_iters: usize,
    /// Stop once the mean per-point log-likelihood improves by less than this.
    pub tol: f64,
    pub seed: u64,
    pub variance_floor: f64,
}

impl Default for EmParams {
    fn default() -> Self {
        Self {
            n_components: DEFAULT_COMPONENTS,
            max_iters: 200,
            tol: 1e-6,
            seed: 0,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmReport {
    /// Dataset log-likelihood before each M-step.
    pub loglik: Vec<f64>,
    pub converged: bool,
}

pub fn gaussian_logpdf(x: &[f64], mean: &[f64], variances: &[f64]) -> Result<f64> {
    check_dim(mean.len(), x.len())?;
    check_dim(mean.len(), variances.len())?;
    if variances.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("variances must be positive".into()));
    }
    Ok(logpdf(x, mean, variances))
}

fn logpdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
        let d = xi - mi;
        acc += (2.0 * PI * vi).ln() + d * d / vi;
    }
    -0.5 * acc
}

impl GaussianMixtureModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// `ln w_m + ln N(x; mu_m, sigma_m)` for every component.
    fn joint_logs(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.means)
                .zip(&self.variances)
                .map(|((w, m), v)| w.ln() + logpdf(x, m, v)),
        );
    }

    pub fn loglik(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.loglik_unchecked(x))
    }

    pub(crate) fn loglik_unchecked(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.weights.len());
        self.joint_logs(x, &mut buf);
        log_sum_exp(&buf)
    }

    /// Posterior component probabilities for `x`; sums to one.
    pub fn responsibilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut buf = Vec::new();
        self.joint_logs(x, &mut buf);
        let total = log_sum_exp(&buf);
        Ok(buf.iter().map(|l| (l - total).exp()).collect())
    }
}

pub fn mixture_loglik(model: &GaussianMixtureModel, x: &[f64]) -> Result<f64> {
    model.loglik(x)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded farthest-point seeding followed by Lloyd iterations. Returns the
/// cluster index of every point. Clusters may come out empty when the data
/// holds fewer distinct points than `k`.
pub(crate) fn kmeans<P: AsRef<[f64]>>(data: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.len();
    let first = rng.random_range(0..n);
    let mut centers = vec![data[first].as_ref().to_vec()];
    let mut nearest: Vec<f64> = data.iter().map(|p| sq_dist(p.as_ref(), &centers[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        let c = data[far].as_ref().to_vec();
        for (d, p) in nearest.iter_mut().zip(data) {
            *d = d.min(sq_dist(p.as_ref(), &c));
        }
        centers.push(c);
    }

    let dim = centers[0].len();
    let mut assign = vec![0; n];
    for _ in 0..KMEANS_ITERS {
        for (a, p) in assign.iter_mut().zip(data) {
            let p = p.as_ref();
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            *a = best;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(data) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    assign
}

fn mean_and_var<P: AsRef<[f64]>>(points: &[&P], dim: usize, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for p in points {
        for ((s, v), m) in var.iter_mut().zip(p.as_ref()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s = (*s / n).max(floor));
    (mean, var)
}

/// k-means followed by one hard M-step. Empty clusters take the pooled
/// statistics with a weight of one pseudo-point.
pub(crate) fn init_mixture<P: AsRef<[f64]>>(
    data: &[P],
    m: usize,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> GaussianMixtureModel {
    let dim = data[0].as_ref().len();
    let assign = kmeans(data, m, rng);
    let all: Vec<&P> = data.iter().collect();
    let (pooled_mean, pooled_var) = mean_and_var(&all, dim, floor);
    let mut weights = Vec::with_capacity(m);
    let mut means = Vec::with_capacity(m);
    let mut variances = Vec::with_capacity(m);
    for j in 0..m {
        let members: Vec<&P> = data.iter().zip(&assign).filter(|(_, &a)| a == j).map(|(p, _)| p).collect();
        if members.is_empty() {
            weights.push(1.0);
            means.push(pooled_mean.clone());
            variances.push(pooled_var.clone());
        } else {
            let (mu, var) = mean_and_var(&members, dim, floor);
            weights.push(members.len() as f64);
            means.push(mu);
            variances.push(var);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GaussianMixtureModel {
        weights,
        means,
        variances,
    }
}

/// Sufficient statistics for a weighted M-step: per component the total
/// responsibility and first/second weighted moments.
#[derive(Debug, Clone)]
pub(crate) struct MixtureStats {
    pub(crate) occupancy: Vec<f64>,
    pub(crate) sum: Vec<Vec<f64>>,
    pub(crate) sum_sq: Vec<Vec<f64>>,
}

impl MixtureStats {
    pub(crate) fn new(m: usize, dim: usize) -> Self {
        Self {
            occupancy: vec![0.0; m],
            sum: vec![vec![0.0; dim]; m],
            sum_sq: vec![vec![0.0; dim]; m],
        }
    }

    pub(crate) fn add(&mut self, component: usize, weight: f64, x: &[f64]) {
        self.occupancy[component] += weight;
        for ((s, q), v) in self.sum[component].iter_mut().zip(&mut self.sum_sq[component]).zip(x) {
            *s += weight * v;
            *q += weight * v * v;
        }
    }

    /// Re-estimates `model` in place. Components with no occupancy keep their
    /// Gaussian and receive weight zero.
    pub(crate) fn apply(&self, model: &mut GaussianMixtureModel, floor: f64) {
        let total: f64 = self.occupancy.iter().sum();
        if total <= 0.0 {
            return;
        }
        for j in 0..model.weights.len() {
            let occ = self.occupancy[j];
            model.weights[j] = occ / total;
            if occ <= 1e-300 {
                continue;
            }
            for d in 0..model.means[j].len() {
                let mu = self.sum[j][d] / occ;
                let var = self.sum_sq[j][d] / occ - mu * mu;
                model.means[j][d] = mu;
                model.variances[j][d] = var.max(floor);
            }
        }
    }
}

fn validate_points<P: AsRef<[f64]>>(data: &[P]) -> Result<usize> {
    let dim = data.first().ok_or(Error::EmptyInput)?.as_ref().len();
    if dim == 0 {
        return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
    }
    for p in data {
        check_dim(dim, p.as_ref().len())?;
    }
    Ok(dim)
}

pub fn train_em<P: AsRef<[f64]> + Sync>(data: &[P], params: &EmParams) -> Result<(GaussianMixtureModel, EmReport)> {
    let m = params.n_components;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one component".into()));
    }
    if data.len() < m {
        return Err(Error::TooFewPoints {
            needed: m,
            got: data.len(),
        });
    }
    let dim = validate_points(data)?;
    let first = data[0].as_ref();
    if data.iter().all(|p| p.as_ref() == first) {
        return Err(Error::DegenerateData);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = init_mixture(data, m, params.variance_floor, &mut rng);
    let n = data.len() as f64;
    let mut history = Vec::new();
    let mut converged = false;
    let mut buf = Vec::with_capacity(m);
    for _ in 0..params.max_iters {
        let mut stats = MixtureStats::new(m, dim);
        let mut total = 0.0;
        for p in data {
            let x = p.as_ref();
            model.joint_logs(x, &mut buf);
            let l = log_sum_exp(&buf);
            total += l;
            for (j, lj) in buf.iter().enumerate() {
                stats.add(j, (lj - l).exp(), x);
            }
        }
        if let Some(&prev) = history.last() {
            if (total - prev) / n < params.tol {
                history.push(total);
                converged = true;
                break;
            }
        }
        history.push(total);
        stats.apply(&mut model, params.variance_floor);
    }
    Ok((
        model,
        EmReport {
            loglik: history,
            converged,
        },
    ))
}

/// One mixture per fault class, ordered by class ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmClassifier {
    pub per_class: Vec<(FaultClass, GaussianMixtureModel)>,
}

impl GmmClassifier {
    pub fn dim(&self) -> usize {
        self.per_class.first().map_or(0, |(_, m)| m.dim())
    }

    /// Scores a segment by summing the per-vector log-likelihoods under each
    /// class model.
    pub fn classify<P: AsRef<[f64]>>(&self, xs: &[P]) -> Result<Decision> {
        if xs.is_empty() || self.per_class.is_empty() {
            return Err(Error::EmptyObservation);
        }
        for x in xs {
            check_dim(self.dim(), x.as_ref().len())?;
        }
        let scores = self
            .per_class
            .iter()
            .map(|(c, model)| (*c, xs.iter().map(|x| model.loglik_unchecked(x.as_ref())).sum()))
            .collect();
        Ok(Decision::highest(scores))
    }
}

pub fn classify<P: AsRef<[f64]>>(classifier: &GmmClassifier, xs: &[P]) -> Result<Decision> {
    classifier.classify(xs)
}

/// Trains one mixture per class on that class's pooled vectors.
pub fn train_classifier<P: AsRef<[f64]> + Sync>(
    per_class: &[(FaultClass, Vec<P>)],
    params: &EmParams,
) -> Result<GmmClassifier> {
    let mut models = per_class
        .par_iter()
        .map(|(c, data)| {
            let (model, report) = train_em(data, params)?;
            if !report.converged {
                log::warn!("GMM for class {c} hit the iteration limit");
            }
            Ok((*c, model))
        })
        .collect::<Result<Vec<_>>>()?;
    models.sort_by_key(|(c, _)| *c);
    Ok(GmmClassifier { per_class: models })
}
