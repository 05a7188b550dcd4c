//! Mel-frequency cepstral coefficients.
//!
//! Per frame: RMS-normalized Hamming window, zero-padded FFT scaled by
//! `1/fft_size`, power spectrum, triangular mel filterbank energies,
//! `log10`, and an unnormalized DCT-II.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{frame_samples, Segment, DEFAULT_FRAMES_PER_SEGMENT};

/// Floor applied to filterbank energies before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Hamming window scaled so its RMS is one. Needs `n >= 3`: the two-point
/// window is identically zero.
pub fn hamming_window(n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidLength(n));
    }
    let denom = (n - 1) as f64;
    let mut w: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / denom).cos())
        .collect();
    let ms = w.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let beta = 1.0 / ms.sqrt();
    for x in &mut w {
        *x *= beta;
    }
    Ok(w)
}

/// `|Y(m)|^2` for `m = 0..=fft_size/2` of the windowed, zero-padded frame.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    if !fft_size.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "fft_size {fft_size} is not a power of two"
        )));
    }
    if frame.len() > fft_size {
        return Err(Error::FrameTooLong {
            frame_len: frame.len(),
            fft_size,
        });
    }
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    if frame.len() >= 2 {
        let w = hamming_window(frame.len())?;
        for ((b, x), w) in buf.iter_mut().zip(frame).zip(&w) {
            b.re = x * w;
        }
    } else if let Some(&x) = frame.first() {
        // a one-sample window is degenerate; leave the sample unweighted
        buf[0].re = x;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(fft_size));
    fft.process(&mut buf);
    let scale = 1.0 / fft_size as f64;
    Ok(buf[..=fft_size / 2]
        .iter()
        .map(|c| (c * scale).norm_sqr())
        .collect())
}

pub fn hz_to_mel(f_hz: f64) -> Result<f64> {
    if f_hz < 0.0 || f_hz.is_nan() {
        return Err(Error::NegativeFrequency(f_hz));
    }
    Ok(2595.0 * (1.0 + f_hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centres uniformly spaced on the mel scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelFilterbank {
    pub n_filters: usize,
    pub sample_rate_hz: f64,
    pub fft_size: usize,
    /// `n_filters` rows of `fft_size/2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
    pub center_freqs_hz: Vec<f64>,
    /// The `n_filters + 2` boundary points in mel.
    pub boundaries_mel: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn energies(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(spectrum).map(|(w, p)| w * p).sum())
            .collect()
    }
}

pub fn build_filterbank(n_filters: usize, sample_rate_hz: f64, fft_size: usize) -> Result<MelFilterbank> {
    if n_filters < 2 {
        return Err(Error::InvalidParameter("need at least two mel filters".into()));
    }
    if !fft_size.is_power_of_two() || fft_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "fft_size {fft_size} is not a power of two"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    let top = hz_to_mel(sample_rate_hz / 2.0)?;
    let step = top / (n_filters + 1) as f64;
    let boundaries_mel: Vec<f64> = (0..n_filters + 2).map(|i| i as f64 * step).collect();
    let hz: Vec<f64> = boundaries_mel.iter().map(|&m| mel_to_hz(m)).collect();
    let n_bins = fft_size / 2 + 1;
    let bins: Vec<usize> = hz
        .iter()
        .map(|&f| (((fft_size + 1) as f64 * f / sample_rate_hz).floor() as usize).min(n_bins - 1))
        .collect();
    if bins.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::TooManyFilters { n_filters, fft_size });
    }
    let weights = (1..=n_filters)
        .map(|i| {
            let (lo, mid, hi) = (bins[i - 1], bins[i], bins[i + 1]);
            (0..n_bins)
                .map(|k| {
                    if k >= lo && k <= mid {
                        (k - lo) as f64 / (mid - lo) as f64
                    } else if k > mid && k <= hi {
                        (hi - k) as f64 / (hi - mid) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(MelFilterbank {
        n_filters,
        sample_rate_hz,
        fft_size,
        weights,
        center_freqs_hz: hz[1..=n_filters].to_vec(),
        boundaries_mel,
    })
}

/// `C_m = sum_n cos(m pi (n + 0.5) / N) log10(E_n)` for `m < n_coeffs`.
pub fn dct_of_log_energies(energies: &[f64], n_coeffs: usize) -> Vec<f64> {
    let nf = energies.len() as f64;
    let logs: Vec<f64> = energies.iter().map(|&e| e.max(LOG_FLOOR).log10()).collect();
    (0..n_coeffs)
        .map(|m| {
            logs.iter()
                .enumerate()
                .map(|(n, l)| (m as f64 * PI * (n as f64 + 0.5) / nf).cos() * l)
                .sum()
        })
        .collect()
}

pub fn mfcc(frame: &[f64], bank: &MelFilterbank, n_coeffs: usize) -> Result<Vec<f64>> {
    if n_coeffs == 0 || n_coeffs > bank.n_filters {
        return Err(Error::TooManyCoefficients {
            requested: n_coeffs,
            n_filters: bank.n_filters,
        });
    }
    let spectrum = power_spectrum(frame, bank.fft_size)?;
    Ok(dct_of_log_energies(&bank.energies(&spectrum), n_coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_frames: usize,
    pub fft_size: usize,
    pub n_filters: usize,
    pub n_coeffs: usize,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_frames: DEFAULT_FRAMES_PER_SEGMENT,
            fft_size: 256,
            n_filters: 26,
            n_coeffs: 13,
        }
    }
}

/// `F x L` coefficient matrix of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub coeffs: Vec<Vec<f64>>,
}

impl MfccMatrix {
    pub fn n_frames(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().copied().collect()
    }
}

/// Frames a segment and extracts MFCCs from every frame with a prebuilt bank.
pub fn mfcc_samples(samples: &[f64], bank: &MelFilterbank, config: &MfccConfig) -> Result<MfccMatrix> {
    let coeffs = frame_samples(samples, config.n_frames)?
        .iter()
        .map(|f| mfcc(&f.samples, bank, config.n_coeffs))
        .collect::<Result<Vec<_>>>()?;
    Ok(MfccMatrix { coeffs })
}

pub fn mfcc_segment(segment: &Segment, sample_rate_hz: f64, config: &MfccConfig) -> Result<MfccMatrix> {
    let bank = build_filterbank(config.n_filters, sample_rate_hz, config.fft_size)?;
    mfcc_samples(&segment.samples, &bank, config)
}
