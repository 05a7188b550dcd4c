use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::cepstral::{build_filterbank, mfcc_samples, MelFilterbank, MfccConfig};
use crate::features::time::{kurtosis, mfd};
use crate::signal::{FaultClass, Segment, DEFAULT_FRAMES_PER_SEGMENT};

pub const DEFAULT_MFD_K: usize = 13;
pub const DEFAULT_EPS_MIN: usize = 1;
pub const DEFAULT_MFCC_L: usize = 13;
pub const DEFAULT_FILTERS: usize = 26;
pub const DEFAULT_FFT_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSetSpec {
    Mfd { k: usize, eps_min: usize },
    Mfcc { n_coeffs: usize, n_filters: usize, fft_size: usize },
    MfccPlusKurtosis { n_coeffs: usize, n_filters: usize, fft_size: usize },
    KurtosisOnly,
}

impl FeatureSetSpec {
    pub fn mfd(k: usize) -> Self {
        FeatureSetSpec::Mfd {
            k,
            eps_min: DEFAULT_EPS_MIN,
        }
    }

    pub fn mfcc(n_coeffs: usize) -> Self {
        FeatureSetSpec::Mfcc {
            n_coeffs,
            n_filters: DEFAULT_FILTERS,
            fft_size: DEFAULT_FFT_SIZE,
        }
    }

    pub fn mfcc_plus_kurtosis(n_coeffs: usize) -> Self {
        FeatureSetSpec::MfccPlusKurtosis {
            n_coeffs,
            n_filters: DEFAULT_FILTERS,
            fft_size: DEFAULT_FFT_SIZE,
        }
    }

    /// Short family name as used on the command line.
    pub fn family(&self) -> &'static str {
        match self {
            FeatureSetSpec::Mfd { .. } => "mfd",
            FeatureSetSpec::Mfcc { .. } => "mfcc",
            FeatureSetSpec::MfccPlusKurtosis { .. } => "mfcc+kurtosis",
            FeatureSetSpec::KurtosisOnly => "kurtosis",
        }
    }

    fn mfcc_config(&self) -> Option<MfccConfig> {
        match *self {
            FeatureSetSpec::Mfcc {
                n_coeffs,
                n_filters,
                fft_size,
            }
            | FeatureSetSpec::MfccPlusKurtosis {
                n_coeffs,
                n_filters,
                fft_size,
            } => Some(MfccConfig {
                n_frames: DEFAULT_FRAMES_PER_SEGMENT,
                fft_size,
                n_filters,
                n_coeffs,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FeatureSetSpec::Mfd { k, eps_min } => {
                if k == 0 {
                    return Err(Error::InvalidK(k));
                }
                if eps_min == 0 {
                    return Err(Error::InvalidParameter("eps_min must be at least 1".into()));
                }
            }
            FeatureSetSpec::Mfcc {
                n_coeffs,
                n_filters,
                fft_size,
            }
            | FeatureSetSpec::MfccPlusKurtosis {
                n_coeffs,
                n_filters,
                fft_size,
            } => {
                if !fft_size.is_power_of_two() || fft_size < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "fft_size {fft_size} is not a power of two"
                    )));
                }
                if n_filters == 0 || n_coeffs == 0 {
                    return Err(Error::InvalidParameter("need at least one filter and coefficient".into()));
                }
                if n_coeffs > n_filters {
                    return Err(Error::TooManyCoefficients {
                        requested: n_coeffs,
                        n_filters,
                    });
                }
            }
            FeatureSetSpec::KurtosisOnly => {}
        }
        Ok(())
    }

    /// Length of the flattened per-segment vector.
    pub fn vector_dim(&self) -> usize {
        match *self {
            FeatureSetSpec::Mfd { k, .. } => k,
            FeatureSetSpec::Mfcc { n_coeffs, .. } => DEFAULT_FRAMES_PER_SEGMENT * n_coeffs,
            FeatureSetSpec::MfccPlusKurtosis { n_coeffs, .. } => DEFAULT_FRAMES_PER_SEGMENT * n_coeffs + 1,
            FeatureSetSpec::KurtosisOnly => 1,
        }
    }

    /// Dimension of one element of the sequence form.
    pub fn frame_dim(&self) -> usize {
        match *self {
            FeatureSetSpec::Mfd { .. } | FeatureSetSpec::KurtosisOnly => 1,
            FeatureSetSpec::Mfcc { n_coeffs, .. } => n_coeffs,
            FeatureSetSpec::MfccPlusKurtosis { n_coeffs, .. } => n_coeffs + 1,
        }
    }

    /// Mixture models score MFCC segments frame by frame; the other feature
    /// sets give a single vector per segment.
    pub fn gmm_uses_frames(&self) -> bool {
        matches!(self, FeatureSetSpec::Mfcc { .. } | FeatureSetSpec::MfccPlusKurtosis { .. })
    }
}

impl Default for FeatureSetSpec {
    fn default() -> Self {
        FeatureSetSpec::mfd(DEFAULT_MFD_K)
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FeatureSetSpec::Mfd { k, eps_min } => write!(f, "mfd(k={k}, eps_min={eps_min})"),
            FeatureSetSpec::Mfcc {
                n_coeffs,
                n_filters,
                fft_size,
            } => write!(f, "mfcc(l={n_coeffs}, filters={n_filters}, fft={fft_size})"),
            FeatureSetSpec::MfccPlusKurtosis {
                n_coeffs,
                n_filters,
                fft_size,
            } => write!(f, "mfcc+kurtosis(l={n_coeffs}, filters={n_filters}, fft={fft_size})"),
            FeatureSetSpec::KurtosisOnly => f.write_str("kurtosis"),
        }
    }
}

/// Features of one segment in both flattened and sequence form.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub label: Option<FaultClass>,
    pub source: String,
    pub vector: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
}

impl FeatureRow {
    /// Rebuilds the sequence form from a flattened vector.
    pub fn from_vector(spec: &FeatureSetSpec, label: Option<FaultClass>, source: String, vector: Vec<f64>) -> Result<Self> {
        if vector.len() != spec.vector_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.vector_dim(),
                got: vector.len(),
            });
        }
        let frames = match *spec {
            FeatureSetSpec::Mfd { .. } | FeatureSetSpec::KurtosisOnly => vector.iter().map(|&v| vec![v]).collect(),
            FeatureSetSpec::Mfcc { n_coeffs, .. } => vector.chunks(n_coeffs).map(<[f64]>::to_vec).collect(),
            FeatureSetSpec::MfccPlusKurtosis { n_coeffs, .. } => {
                let (coeffs, kurt) = vector.split_at(vector.len() - 1);
                coeffs
                    .chunks(n_coeffs)
                    .map(|c| {
                        let mut f = c.to_vec();
                        f.push(kurt[0]);
                        f
                    })
                    .collect()
            }
        };
        Ok(Self {
            label,
            source,
            vector,
            frames,
        })
    }

    /// Points scored by the mixture models for this segment.
    pub fn gmm_points(&self, spec: &FeatureSetSpec) -> Vec<&[f64]> {
        if spec.gmm_uses_frames() {
            self.frames.iter().map(Vec::as_slice).collect()
        } else {
            vec![self.vector.as_slice()]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub spec: FeatureSetSpec,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> [usize; FaultClass::COUNT] {
        let mut counts = [0; FaultClass::COUNT];
        for r in &self.rows {
            if let Some(c) = r.label {
                counts[c.index()] += 1;
            }
        }
        counts
    }

    pub fn labels(&self) -> Vec<Option<FaultClass>> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            spec: self.spec,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// `label,f0,f1,...`; unlabeled rows are written as `unknown`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.spec.vector_dim()).map(|i| format!("f{i}")).collect();
        writeln!(out, "label,{}", header.join(","))?;
        for r in &self.rows {
            let label = r.label.map_or("unknown", FaultClass::label);
            let values: Vec<String> = r.vector.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{label},{}", values.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path, spec: FeatureSetSpec) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile(path.to_path_buf())
            } else {
                Error::io(path, e)
            }
        })?;
        let malformed = |reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            reason,
        };
        let mut rows = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let label = match fields.next().unwrap_or("").trim() {
                "unknown" => None,
                s => Some(s.parse::<FaultClass>().map_err(|_| malformed(format!("line {}: bad label '{s}'", n + 1)))?),
            };
            let vector = fields
                .map(|f| f.trim().parse::<f64>().map_err(|_| malformed(format!("line {}: bad number '{f}'", n + 1))))
                .collect::<Result<Vec<_>>>()?;
            let row = FeatureRow::from_vector(&spec, label, format!("row{}", n), vector)
                .map_err(|e| malformed(format!("line {}: {e}", n + 1)))?;
            rows.push(row);
        }
        Ok(Self { spec, rows })
    }
}

/// Features of one segment: `(vector, frames)`.
fn extract_one(samples: &[f64], spec: &FeatureSetSpec, bank: Option<&MelFilterbank>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    match *spec {
        FeatureSetSpec::Mfd { k, eps_min } => {
            let v = mfd(samples, k, eps_min)?.values;
            let frames = v.iter().map(|&d| vec![d]).collect();
            Ok((v, frames))
        }
        FeatureSetSpec::KurtosisOnly => {
            let k = kurtosis(samples)?.value;
            Ok((vec![k], vec![vec![k]]))
        }
        FeatureSetSpec::Mfcc { .. } | FeatureSetSpec::MfccPlusKurtosis { .. } => {
            let config = spec.mfcc_config().expect("mfcc family");
            let bank = bank.expect("filterbank built for mfcc specs");
            let matrix = mfcc_samples(samples, bank, &config)?;
            let mut vector = matrix.flatten();
            let mut frames = matrix.coeffs;
            if matches!(spec, FeatureSetSpec::MfccPlusKurtosis { .. }) {
                let k = kurtosis(samples)?.value;
                vector.push(k);
                frames.iter_mut().for_each(|f| f.push(k));
            }
            Ok((vector, frames))
        }
    }
}

/// Extracts one feature row per segment. Segments whose extraction fails
/// are logged and skipped.
pub fn extract_features(segments: &[Segment], sample_rate_hz: f64, spec: &FeatureSetSpec) -> Result<FeatureTable> {
    spec.validate()?;
    let bank = match spec.mfcc_config() {
        Some(c) => Some(build_filterbank(c.n_filters, sample_rate_hz, c.fft_size)?),
        None => None,
    };
    let rows: Vec<Option<FeatureRow>> = segments
        .par_iter()
        .map(|seg| {
            let source = format!("{}#{}", seg.parent_source_id, seg.index);
            match extract_one(&seg.samples, spec, bank.as_ref()) {
                Ok((vector, frames)) => Some(FeatureRow {
                    label: seg.label,
                    source,
                    vector,
                    frames,
                }),
                Err(e) => {
                    log::warn!("skipping segment {source}: {e}");
                    None
                }
            }
        })
        .collect();
    Ok(FeatureTable {
        spec: *spec,
        rows: rows.into_iter().flatten().collect(),
    })
}
