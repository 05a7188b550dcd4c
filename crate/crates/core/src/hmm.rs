//! Hidden Markov models with per-state diagonal Gaussian-mixture emissions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::gmm::{init_mixture, kmeans, EmReport, GaussianMixtureModel, MixtureStats, VARIANCE_FLOOR};
use crate::math::check_dim;
use crate::signal::FaultClass;

pub const DEFAULT_STATES: usize = 2;
pub const DEFAULT_MIXTURES: usize = 10;
const INIT_JITTER: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub pi: Vec<f64>,
    /// Row-stochastic transition matrix, `a[i][j] = P(j | i)`.
    pub a: Vec<Vec<f64>>,
    pub emissions: Vec<GaussianMixtureModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub n_states: usize,
    pub n_mixtures: usize,
    pub max_iters: usize,
    /// Stop once the mean per-frame log-likelihood improves by less than this.
    pub tol: f64,
    pub seed: u64,
    pub variance_floor: f64,
}

impl Default for HmmParams {
    fn default() -> Self {
        Self {
            n_states: DEFAULT_STATES,
            n_mixtures: DEFAULT_MIXTURES,
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub path: Vec<usize>,
    pub log_prob: f64,
}

/// Emission log-densities shifted by their per-frame maximum.
struct Emissions {
    /// `exp(log b_j(o_t) - shift_t)`, row-major `t * n + j`.
    scaled: Vec<f64>,
    shift: Vec<f64>,
}

/// Scaled forward pass: `alpha[t]` sums to one, `scale[t] > 0` unless the
/// sequence is impossible under the model.
struct Forward {
    alpha: Vec<f64>,
    scale: Vec<f64>,
    loglik: f64,
}

impl HmmModel {
    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn dim(&self) -> usize {
        self.emissions.first().map_or(0, GaussianMixtureModel::dim)
    }

    fn check_obs<P: AsRef<[f64]>>(&self, obs: &[P]) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::EmptySequence);
        }
        for o in obs {
            check_dim(self.dim(), o.as_ref().len())?;
        }
        Ok(())
    }

    fn log_emissions<P: AsRef<[f64]>>(&self, obs: &[P]) -> Vec<f64> {
        obs.iter()
            .flat_map(|o| self.emissions.iter().map(move |e| e.loglik_unchecked(o.as_ref())))
            .collect()
    }

    fn emissions<P: AsRef<[f64]>>(&self, obs: &[P]) -> Emissions {
        let n = self.n_states();
        let mut scaled = self.log_emissions(obs);
        let mut shift = Vec::with_capacity(obs.len());
        for row in scaled.chunks_mut(n) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let m = if m.is_finite() { m } else { 0.0 };
            row.iter_mut().for_each(|v| *v = (*v - m).exp());
            shift.push(m);
        }
        Emissions { scaled, shift }
    }

    fn forward(&self, em: &Emissions) -> Forward {
        let n = self.n_states();
        let t_len = em.shift.len();
        let mut alpha = vec![0.0; t_len * n];
        let mut scale = vec![0.0; t_len];
        let mut loglik = 0.0;
        for t in 0..t_len {
            let b = &em.scaled[t * n..(t + 1) * n];
            for j in 0..n {
                let prior = if t == 0 {
                    self.pi[j]
                } else {
                    (0..n).map(|i| alpha[(t - 1) * n + i] * self.a[i][j]).sum()
                };
                alpha[t * n + j] = prior * b[j];
            }
            let c: f64 = alpha[t * n..(t + 1) * n].iter().sum();
            scale[t] = c;
            if c <= 0.0 {
                return Forward {
                    alpha,
                    scale,
                    loglik: f64::NEG_INFINITY,
                };
            }
            alpha[t * n..(t + 1) * n].iter_mut().for_each(|v| *v /= c);
            loglik += c.ln() + em.shift[t];
        }
        Forward { alpha, scale, loglik }
    }

    /// `ln P(O | model)`.
    pub fn loglik<P: AsRef<[f64]>>(&self, obs: &[P]) -> Result<f64> {
        self.check_obs(obs)?;
        Ok(self.forward(&self.emissions(obs)).loglik)
    }

    /// Most probable state path. Among equally probable paths the one with the
    /// lower state at the first differing step is returned.
    pub fn viterbi<P: AsRef<[f64]>>(&self, obs: &[P]) -> Result<ViterbiPath> {
        self.check_obs(obs)?;
        let n = self.n_states();
        let t_len = obs.len();
        let log_b = self.log_emissions(obs);
        let log_a: Vec<Vec<f64>> = self.a.iter().map(|r| r.iter().map(|v| v.ln()).collect()).collect();
        // best[t][i]: best log-probability of frames t.. given state i at t
        let mut best = vec![0.0; t_len * n];
        best[(t_len - 1) * n..].copy_from_slice(&log_b[(t_len - 1) * n..]);
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                let tail = (0..n)
                    .map(|j| log_a[i][j] + best[(t + 1) * n + j])
                    .fold(f64::NEG_INFINITY, f64::max);
                best[t * n + i] = log_b[t * n + i] + tail;
            }
        }
        let pick = |scores: Vec<f64>| crate::math::argmax(&scores);
        let mut path = Vec::with_capacity(t_len);
        let mut state = pick((0..n).map(|i| self.pi[i].ln() + best[i]).collect());
        path.push(state);
        for t in 1..t_len {
            state = pick((0..n).map(|j| log_a[state][j] + best[t * n + j]).collect());
            path.push(state);
        }
        let mut log_prob = self.pi[path[0]].ln() + log_b[path[0]];
        for t in 1..t_len {
            log_prob += log_a[path[t - 1]][path[t]] + log_b[t * n + path[t]];
        }
        Ok(ViterbiPath { path, log_prob })
    }
}

pub fn forward_loglik<P: AsRef<[f64]>>(model: &HmmModel, obs: &[P]) -> Result<f64> {
    model.loglik(obs)
}

pub fn viterbi<P: AsRef<[f64]>>(model: &HmmModel, obs: &[P]) -> Result<ViterbiPath> {
    model.viterbi(obs)
}

fn jittered_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| 1.0 + INIT_JITTER * rng.random_range(-1.0..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn initial_model<P: AsRef<[f64]>>(frames: &[P], params: &HmmParams, rng: &mut ChaCha8Rng) -> HmmModel {
    let n = params.n_states;
    let groups = kmeans(frames, n, rng);
    let emissions = (0..n)
        .map(|s| {
            let members: Vec<&[f64]> = frames
                .iter()
                .zip(&groups)
                .filter(|(_, &g)| g == s)
                .map(|(f, _)| f.as_ref())
                .collect();
            if members.is_empty() {
                init_mixture(frames, params.n_mixtures, params.variance_floor, rng)
            } else {
                init_mixture(&members, params.n_mixtures, params.variance_floor, rng)
            }
        })
        .collect();
    HmmModel {
        pi: jittered_simplex(n, rng),
        a: (0..n).map(|_| jittered_simplex(n, rng)).collect(),
        emissions,
    }
}

struct Accumulator {
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    from: Vec<f64>,
    mixtures: Vec<MixtureStats>,
    loglik: f64,
}

impl Accumulator {
    fn new(n: usize, m: usize, dim: usize) -> Self {
        Self {
            pi: vec![0.0; n],
            trans: vec![vec![0.0; n]; n],
            from: vec![0.0; n],
            mixtures: (0..n).map(|_| MixtureStats::new(m, dim)).collect(),
            loglik: 0.0,
        }
    }

    fn add_sequence<P: AsRef<[f64]>>(&mut self, model: &HmmModel, obs: &[P]) {
        let n = model.n_states();
        let t_len = obs.len();
        let em = model.emissions(obs);
        let fw = model.forward(&em);
        if !fw.loglik.is_finite() {
            log::warn!("skipping an observation sequence with zero likelihood");
            return;
        }
        self.loglik += fw.loglik;
        let mut beta = vec![1.0; t_len * n];
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                beta[t * n + i] = (0..n)
                    .map(|j| model.a[i][j] * em.scaled[(t + 1) * n + j] * beta[(t + 1) * n + j])
                    .sum::<f64>()
                    / fw.scale[t + 1];
            }
        }
        let mut gamma = vec![0.0; n];
        for t in 0..t_len {
            for i in 0..n {
                gamma[i] = fw.alpha[t * n + i] * beta[t * n + i];
            }
            let g: f64 = gamma.iter().sum();
            gamma.iter_mut().for_each(|v| *v /= g);
            if t == 0 {
                self.pi.iter_mut().zip(&gamma).for_each(|(p, g)| *p += g);
            }
            if t + 1 < t_len {
                let mut xi_total = 0.0;
                let mut xi = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let v = fw.alpha[t * n + i]
                            * model.a[i][j]
                            * em.scaled[(t + 1) * n + j]
                            * beta[(t + 1) * n + j];
                        xi[i * n + j] = v;
                        xi_total += v;
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let v = xi[i * n + j] / xi_total;
                        self.trans[i][j] += v;
                        self.from[i] += v;
                    }
                }
            }
            let x = obs[t].as_ref();
            for (j, &gj) in gamma.iter().enumerate() {
                if gj == 0.0 {
                    continue;
                }
                let resp = model.emissions[j].responsibilities(x).expect("dimension checked");
                for (k, r) in resp.into_iter().enumerate() {
                    self.mixtures[j].add(k, gj * r, x);
                }
            }
        }
    }

    fn apply(&self, model: &mut HmmModel, floor: f64) {
        let n = model.n_states();
        let total: f64 = self.pi.iter().sum();
        if total > 0.0 {
            model.pi = self.pi.iter().map(|p| p / total).collect();
        }
        for i in 0..n {
            if self.from[i] > 0.0 {
                model.a[i] = self.trans[i].iter().map(|v| v / self.from[i]).collect();
            }
        }
        for (stats, emission) in self.mixtures.iter().zip(&mut model.emissions) {
            stats.apply(emission, floor);
        }
    }
}

/// Baum-Welch re-estimation over a set of observation sequences.
pub fn train_baum_welch<S: AsRef<[Vec<f64>]> + Sync>(
    sequences: &[S],
    params: &HmmParams,
) -> Result<(HmmModel, EmReport)> {
    if params.n_states == 0 || params.n_mixtures == 0 {
        return Err(Error::InvalidParameter("need at least one state and one mixture".into()));
    }
    let frames: Vec<&[f64]> = sequences
        .iter()
        .flat_map(|s| s.as_ref().iter().map(Vec::as_slice))
        .collect();
    let needed = params.n_states * params.n_mixtures;
    if sequences.is_empty() || frames.len() < needed {
        return Err(Error::TooFewObservations {
            needed,
            got: frames.len(),
        });
    }
    let dim = frames[0].len();
    if dim == 0 {
        return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
    }
    for f in &frames {
        check_dim(dim, f.len())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = initial_model(&frames, params, &mut rng);
    let total_frames = frames.len() as f64;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..params.max_iters {
        let mut acc = Accumulator::new(params.n_states, params.n_mixtures, dim);
        for s in sequences {
            if !s.as_ref().is_empty() {
                acc.add_sequence(&model, s.as_ref());
            }
        }
        if let Some(&prev) = history.last() {
            if (acc.loglik - prev) / total_frames < params.tol {
                history.push(acc.loglik);
                converged = true;
                break;
            }
        }
        history.push(acc.loglik);
        acc.apply(&mut model, params.variance_floor);
    }
    Ok((
        model,
        EmReport {
            loglik: history,
            converged,
        },
    ))
}

/// One HMM per fault class, ordered by class ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmBank {
    pub per_class: Vec<(FaultClass, HmmModel)>,
}

impl HmmBank {
    pub fn dim(&self) -> usize {
        self.per_class.first().map_or(0, |(_, m)| m.dim())
    }

    pub fn classify<P: AsRef<[f64]>>(&self, obs: &[P]) -> Result<Decision> {
        if self.per_class.is_empty() {
            return Err(Error::EmptyObservation);
        }
        let scores = self
            .per_class
            .iter()
            .map(|(c, m)| m.loglik(obs).map(|l| (*c, l)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Decision::highest(scores))
    }
}

pub fn classify<P: AsRef<[f64]>>(bank: &HmmBank, obs: &[P]) -> Result<Decision> {
    bank.classify(obs)
}

pub fn train_bank<S: AsRef<[Vec<f64>]> + Sync>(
    per_class: &[(FaultClass, Vec<S>)],
    params: &HmmParams,
) -> Result<HmmBank> {
    let mut models = per_class
        .par_iter()
        .map(|(c, seqs)| {
            let (model, report) = train_baum_welch(seqs, params)?;
            if !report.converged {
                log::warn!("HMM for class {c} hit the iteration limit");
            }
            Ok((*c, model))
        })
        .collect::<Result<Vec<_>>>()?;
    models.sort_by_key(|(c, _)| *c);
    Ok(HmmBank { per_class: models })
}
