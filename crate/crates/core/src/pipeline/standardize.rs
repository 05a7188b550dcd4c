use serde::{Deserialize, Serialize};

use super::features::{FeatureRow, FeatureTable};
use crate::error::{Error, Result};

/// Per-dimension mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DimStats {
    /// Population statistics; a zero spread is replaced by 1 so constant
    /// dimensions pass through centred.
    pub fn fit<'a, I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut sum = vec![0.0; dim];
        let mut sum_sq = vec![0.0; dim];
        let points: Vec<&[f64]> = points.into_iter().collect();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            n += 1;
            for (s, v) in sum.iter_mut().zip(*p) {
                *s += v;
            }
        }
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        for p in &points {
            for ((s, v), m) in sum_sq.iter_mut().zip(*p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = sum_sq
            .iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Statistics for the flattened vectors and, separately, for the pooled
/// frames of the sequence form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub vector: DimStats,
    pub frames: DimStats,
}

impl Standardizer {
    pub fn fit(train: &FeatureTable) -> Result<Self> {
        let vector = DimStats::fit(train.spec.vector_dim(), train.rows.iter().map(|r| r.vector.as_slice()))?;
        let frames = DimStats::fit(
            train.spec.frame_dim(),
            train.rows.iter().flat_map(|r| r.frames.iter().map(Vec::as_slice)),
        )?;
        Ok(Self { vector, frames })
    }

    pub fn apply_row(&self, row: &FeatureRow) -> Result<FeatureRow> {
        if row.vector.len() != self.vector.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vector.dim(),
                got: row.vector.len(),
            });
        }
        if let Some(f) = row.frames.iter().find(|f| f.len() != self.frames.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.frames.dim(),
                got: f.len(),
            });
        }
        Ok(FeatureRow {
            label: row.label,
            source: row.source.clone(),
            vector: self.vector.apply(&row.vector),
            frames: row.frames.iter().map(|f| self.frames.apply(f)).collect(),
        })
    }

    pub fn apply(&self, table: &FeatureTable) -> Result<FeatureTable> {
        Ok(FeatureTable {
            spec: table.spec,
            rows: table.rows.iter().map(|r| self.apply_row(r)).collect::<Result<_>>()?,
        })
    }
}
