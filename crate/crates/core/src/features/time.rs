//! Time-domain features: box-counting fractal dimension, the multi-scale
//! fractal dimension (fractogram) and kurtosis.
//!
//! Box counting runs on the graph of the signal after an affine map of the
//! amplitudes onto `[0, len - 1]`, so one amplitude unit equals one sample
//! step and a box of side `eps` is square. Columns are `eps` samples wide and
//! include the first sample of the next column, so the connecting line
//! between columns is covered.

use crate::error::{Error, Result};

/// Slack applied before `ceil` so the affine normalization's rounding error
/// cannot flip an exact integer ratio to the next box.
const CEIL_SLACK: f64 = 1e-9;

/// Box sides (in samples) used for one dimension estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionGrid {
    resolutions: Vec<usize>,
}

impl ResolutionGrid {
    pub fn new(resolutions: Vec<usize>) -> Result<Self> {
        if resolutions.len() < 2 {
            return Err(Error::InvalidParameter(
                "a resolution grid needs at least two box sizes".into(),
            ));
        }
        if resolutions[0] == 0 || resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "box sizes must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { resolutions })
    }

    /// `{eps_min, 2 eps_min, ..., k eps_min}`.
    pub fn linear(eps_min: usize, k: usize) -> Result<Self> {
        Self::new((1..=k).map(|j| j * eps_min).collect())
    }

    pub fn eps_min(&self) -> usize {
        self.resolutions[0]
    }

    pub fn eps_max(&self) -> usize {
        *self.resolutions.last().unwrap()
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.resolutions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfdVector {
    pub values: Vec<f64>,
}

impl MfdVector {
    pub fn k(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KurtosisValue {
    pub value: f64,
}

fn normalize(samples: &[f64]) -> Vec<f64> {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi <= lo {
        return vec![0.0; samples.len()];
    }
    let scale = (samples.len() - 1) as f64 / (hi - lo);
    samples.iter().map(|&x| (x - lo) * scale).collect()
}

fn count_normalized(norm: &[f64], eps: usize) -> usize {
    let n = norm.len();
    let side = eps as f64;
    (0..n)
        .step_by(eps)
        .map(|start| {
            let end = (start + eps + 1).min(n);
            let (lo, hi) = norm[start..end]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            (((hi - lo + 1.0) / side) - CEIL_SLACK).ceil().max(1.0) as usize
        })
        .sum()
}

/// `N(eps)`: number of `eps x eps` boxes covering the normalized signal graph.
pub fn box_count(samples: &[f64], eps: usize) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if eps == 0 {
        return Err(Error::InvalidParameter("box size must be at least 1".into()));
    }
    Ok(count_normalized(&normalize(samples), eps))
}

/// Least-squares slope of `ln N(eps)` against `ln(1/eps)`, written in the
/// uncentred closed form.
fn log_log_slope(resolutions: &[usize], counts: &[usize]) -> Result<f64> {
    let j = resolutions.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (&eps, &n) in resolutions.iter().zip(counts) {
        let x = (1.0 / eps as f64).ln();
        let y = (n as f64).ln();
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    let denom = j * sxx - sx * sx;
    if denom.abs() <= 1e-12 * (j * sxx).max(1.0) {
        return Err(Error::DegenerateRegression);
    }
    Ok((j * sxy - sx * sy) / denom)
}

/// Global box-counting dimension over a resolution grid.
pub fn box_counting_dimension(samples: &[f64], grid: &ResolutionGrid) -> Result<f64> {
    let needed = 2 * grid.eps_max();
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let norm = normalize(samples);
    let counts: Vec<usize> = grid
        .resolutions()
        .iter()
        .map(|&eps| count_normalized(&norm, eps))
        .collect();
    log_log_slope(grid.resolutions(), &counts)
}

/// Multi-scale fractal dimension `{D^1, ..., D^K}`.
///
/// `D^k` regresses over the box sides `{eps_min, ..., k eps_min}`. `D^1` has
/// only one box side, so it falls back to the two-point slope between
/// `eps_min` and `2 eps_min`.
pub fn mfd(samples: &[f64], k: usize, eps_min: usize) -> Result<MfdVector> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    if eps_min == 0 {
        return Err(Error::InvalidParameter("eps_min must be at least 1".into()));
    }
    let top = k.max(2);
    let needed = 2 * top * eps_min;
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let norm = normalize(samples);
    let resolutions: Vec<usize> = (1..=top).map(|j| j * eps_min).collect();
    let counts: Vec<usize> = resolutions
        .iter()
        .map(|&eps| count_normalized(&norm, eps))
        .collect();
    let values = (1..=k)
        .map(|scale| {
            let upto = scale.max(2);
            log_log_slope(&resolutions[..upto], &counts[..upto])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MfdVector { values })
}

/// Population kurtosis `m4 / m2^2` (not excess kurtosis).
pub fn kurtosis(samples: &[f64]) -> Result<KurtosisValue> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d = x - mean;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    let scale = samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m2 <= (1e-12 * scale).powi(2) || m2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(KurtosisValue {
        value: m4 / (m2 * m2),
    })
}
