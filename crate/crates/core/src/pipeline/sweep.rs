use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureSetSpec};
use super::model::{evaluate, train_all, ClassifierKind, Evaluation, ModelBundle, TrainConfig};
use super::split::split;
use crate::error::{Error, Result};
use crate::signal::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    MfdSize,
    MfccCount,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MfdSize => "mfd_size",
            SweepParameter::MfccCount => "mfcc_count",
        }
    }

    pub fn default_values(self) -> Vec<usize> {
        match self {
            SweepParameter::MfdSize => (2..=20).collect(),
            SweepParameter::MfccCount => (9..=16).collect(),
        }
    }

    pub fn spec_for(self, value: usize) -> FeatureSetSpec {
        match self {
            SweepParameter::MfdSize => FeatureSetSpec::mfd(value),
            SweepParameter::MfccCount => FeatureSetSpec::mfcc(value),
        }
    }
}

/// Accuracy (macro recall, percent) of every classifier at every value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter_name: String,
    pub values: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    /// `accuracy[i][j]`: value `i`, classifier `j`.
    pub accuracy: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn series(&self, kind: ClassifierKind) -> Option<Vec<f64>> {
        let j = self.classifiers.iter().position(|k| *k == kind)?;
        Some(self.accuracy.iter().map(|row| row[j]).collect())
    }

    /// Max minus min accuracy across values.
    pub fn spread(&self, kind: ClassifierKind) -> Option<f64> {
        let s = self.series(kind)?;
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    }

    /// Value with the highest accuracy; the smallest such value on ties.
    pub fn best_value(&self, kind: ClassifierKind) -> Option<usize> {
        let s = self.series(kind)?;
        let mut best = 0;
        for (i, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = i;
            }
        }
        self.values.get(best).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("param_value");
        for k in &self.classifiers {
            write!(out, ",{k}").unwrap();
        }
        out.push('\n');
        for (v, row) in self.values.iter().zip(&self.accuracy) {
            write!(out, "{v}").unwrap();
            for a in row {
                write!(out, ",{a:.4}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Split, extract, train and evaluate one feature set on labeled segments.
pub fn run_experiment(
    segments: &[Segment],
    sample_rate_hz: f64,
    spec: &FeatureSetSpec,
    config: &TrainConfig,
    train_fraction: f64,
    split_seed: u64,
) -> Result<(ModelBundle, Evaluation)> {
    let labels = segments
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::InvalidParameter("segments must be labeled".into())))
        .collect::<Result<Vec<_>>>()?;
    let parts = split(&labels, train_fraction, split_seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| segments[i].clone()).collect::<Vec<_>>();
    let train = extract_features(&pick(&parts.train), sample_rate_hz, spec)?;
    let test = extract_features(&pick(&parts.test), sample_rate_hz, spec)?;
    let bundle = train_all(&train, config)?;
    let eval = evaluate(&bundle, &test)?;
    Ok((bundle, eval))
}

/// Trains and evaluates the classifier set once per value, all on the same
/// split and seeds. Values run in parallel; results keep `values` order.
pub fn sweep(
    parameter: SweepParameter,
    values: &[usize],
    segments: &[Segment],
    sample_rate_hz: f64,
    config: &TrainConfig,
    train_fraction: f64,
    split_seed: u64,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep range".into()));
    }
    for &v in values {
        parameter.spec_for(v).validate()?;
    }
    let mut classifiers = config.classifiers.clone();
    classifiers.sort();
    classifiers.dedup();
    let accuracy = values
        .par_iter()
        .map(|&v| {
            let (_, eval) = run_experiment(
                segments,
                sample_rate_hz,
                &parameter.spec_for(v),
                config,
                train_fraction,
                split_seed,
            )?;
            log::info!("{} = {v} done", parameter.name());
            Ok(classifiers
                .iter()
                .map(|k| eval.accuracy(*k).unwrap_or(0.0))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SweepResult {
        parameter_name: parameter.name().to_string(),
        values: values.to_vec(),
        classifiers,
        accuracy,
    })
}
