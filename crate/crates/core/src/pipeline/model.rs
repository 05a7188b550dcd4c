use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use super::features::{FeatureRow, FeatureSetSpec, FeatureTable};
use super::standardize::Standardizer;
use crate::decision::Decision;
use crate::enn::{self, EnnModel, DEFAULT_EPOCHS, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::gmm::{self, EmParams, GmmClassifier};
use crate::hmm::{self, HmmBank, HmmParams};
use crate::signal::FaultClass;
use crate::svm::{train_multiclass, MulticlassSvmModel, SvmParams};

pub const BUNDLE_VERSION: u8 = 1;

/// Column order of every per-classifier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    Svm,
    Hmm,
    Gmm,
    Enn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Svm,
        ClassifierKind::Hmm,
        ClassifierKind::Gmm,
        ClassifierKind::Enn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Hmm => "hmm",
            ClassifierKind::Gmm => "gmm",
            ClassifierKind::Enn => "enn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "hmm" => Ok(ClassifierKind::Hmm),
            "gmm" => Ok(ClassifierKind::Gmm),
            "enn" => Ok(ClassifierKind::Enn),
            other => Err(Error::InvalidParameter(format!("unknown classifier '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub classifiers: Vec<ClassifierKind>,
    pub svm: SvmParams,
    pub gmm: EmParams,
    pub hmm: HmmParams,
    pub enn_eta: f64,
    pub enn_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::ALL.to_vec(),
            svm: SvmParams::default(),
            gmm: EmParams::default(),
            hmm: HmmParams::default(),
            enn_eta: DEFAULT_ETA,
            enn_epochs: DEFAULT_EPOCHS,
        }
    }
}

impl TrainConfig {
    /// Defaults with every randomized initializer seeded from `seed`.
    pub fn seeded(seed: u64) -> Self {
        let mut c = Self::default();
        c.set_seed(seed);
        c
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.gmm.seed = seed;
        self.hmm.seed = seed;
    }

    fn wants(&self, kind: ClassifierKind) -> bool {
        self.classifiers.contains(&kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u8,
    pub feature_spec: FeatureSetSpec,
    pub standardizer: Standardizer,
    pub svm: Option<MulticlassSvmModel>,
    pub gmm: Option<GmmClassifier>,
    pub hmm: Option<HmmBank>,
    pub enn: Option<EnnModel>,
    /// Digest of whatever the training data came from.
    pub created_from: String,
}

impl ModelBundle {
    pub fn classifiers(&self) -> Vec<ClassifierKind> {
        ClassifierKind::ALL
            .into_iter()
            .filter(|k| match k {
                ClassifierKind::Svm => self.svm.is_some(),
                ClassifierKind::Hmm => self.hmm.is_some(),
                ClassifierKind::Gmm => self.gmm.is_some(),
                ClassifierKind::Enn => self.enn.is_some(),
            })
            .collect()
    }

    pub fn check_spec(&self, spec: &FeatureSetSpec) -> Result<()> {
        if *spec == self.feature_spec {
            Ok(())
        } else {
            Err(Error::FeatureSpecMismatch {
                expected: self.feature_spec.to_string(),
                got: spec.to_string(),
            })
        }
    }

    /// Decisions of every classifier in the bundle for one raw row.
    pub fn predict(&self, row: &FeatureRow) -> Result<Vec<(ClassifierKind, Decision)>> {
        let z = self.standardizer.apply_row(row)?;
        let spec = &self.feature_spec;
        let mut out = Vec::with_capacity(4);
        if let Some(m) = &self.svm {
            out.push((ClassifierKind::Svm, m.decide(&svm_input(&z.vector))?));
        }
        if let Some(m) = &self.hmm {
            out.push((ClassifierKind::Hmm, m.classify(&z.frames)?));
        }
        if let Some(m) = &self.gmm {
            out.push((ClassifierKind::Gmm, m.classify(&z.gmm_points(spec))?));
        }
        if let Some(m) = &self.enn {
            out.push((ClassifierKind::Enn, m.classify(&z.vector)?));
        }
        Ok(out)
    }
}

/// The kernel sees standardized vectors scaled by `1/sqrt(dim)`, so dot
/// products stay of order one whatever the feature length.
pub(crate) fn svm_input(z: &[f64]) -> Vec<f64> {
    let s = 1.0 / (z.len().max(1) as f64).sqrt();
    z.iter().map(|v| v * s).collect()
}

/// CRC-32 of `bytes` as eight hex digits.
pub fn digest(bytes: &[u8]) -> String {
    format!("{:08x}", crc32fast::hash(bytes))
}

/// Digest of the table's CSV form.
pub fn table_digest(table: &FeatureTable) -> String {
    let mut buf = Vec::new();
    table.write_csv(&mut buf).expect("writing to memory");
    format!("table:{}", digest(&buf))
}

/// Fits the standardizer on `train` and trains the requested classifiers.
pub fn train_all(train: &FeatureTable, config: &TrainConfig) -> Result<ModelBundle> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if train.rows.iter().any(|r| r.label.is_none()) {
        return Err(Error::InvalidParameter("training rows must be labeled".into()));
    }
    if config.classifiers.is_empty() {
        return Err(Error::InvalidParameter("no classifiers requested".into()));
    }
    let counts = train.class_counts();
    if let Some(c) = FaultClass::ALL.into_iter().find(|c| counts[c.index()] == 0) {
        return Err(Error::MissingClass(c));
    }

    let standardizer = Standardizer::fit(train)?;
    let z = standardizer.apply(train)?;
    let spec = train.spec;

    let vectors: Vec<(Vec<f64>, FaultClass)> = z.rows.iter().map(|r| (r.vector.clone(), r.label.unwrap())).collect();
    let per_class_rows = |c: FaultClass| z.rows.iter().filter(move |r| r.label == Some(c));

    let ((svm, enn), (gmm, hmm)) = rayon::join(
        || {
            rayon::join(
                || {
                    config.wants(ClassifierKind::Svm).then(|| {
                        let data: Vec<(Vec<f64>, FaultClass)> =
                            vectors.iter().map(|(v, c)| (svm_input(v), *c)).collect();
                        let m = train_multiclass(&data, &FaultClass::ALL, &config.svm)?;
                        if !m.converged() {
                            log::warn!("SVM stopped before meeting the KKT tolerance");
                        }
                        Ok(m)
                    })
                },
                || {
                    config
                        .wants(ClassifierKind::Enn)
                        .then(|| enn::train(&vectors, &FaultClass::ALL, config.enn_epochs, config.enn_eta).map(|r| r.0))
                },
            )
        },
        || {
            rayon::join(
                || {
                    config.wants(ClassifierKind::Gmm).then(|| {
                        let per_class: Vec<(FaultClass, Vec<&[f64]>)> = FaultClass::ALL
                            .iter()
                            .map(|&c| (c, per_class_rows(c).flat_map(|r| r.gmm_points(&spec)).collect()))
                            .collect();
                        gmm::train_classifier(&per_class, &config.gmm)
                    })
                },
                || {
                    config.wants(ClassifierKind::Hmm).then(|| {
                        let per_class: Vec<(FaultClass, Vec<&[Vec<f64>]>)> = FaultClass::ALL
                            .iter()
                            .map(|&c| (c, per_class_rows(c).map(|r| r.frames.as_slice()).collect()))
                            .collect();
                        hmm::train_bank(&per_class, &config.hmm)
                    })
                },
            )
        },
    );

    Ok(ModelBundle {
        version: BUNDLE_VERSION,
        feature_spec: spec,
        standardizer,
        svm: svm.transpose()?,
        gmm: gmm.transpose()?,
        hmm: hmm.transpose()?,
        enn: enn.transpose()?,
        created_from: table_digest(train),
    })
}

/// Confusion matrices in classifier column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub results: Vec<(ClassifierKind, ConfusionMatrix)>,
}

impl Evaluation {
    pub fn get(&self, kind: ClassifierKind) -> Option<&ConfusionMatrix> {
        self.results.iter().find(|(k, _)| *k == kind).map(|(_, m)| m)
    }

    pub fn accuracy(&self, kind: ClassifierKind) -> Option<f64> {
        self.get(kind).map(ConfusionMatrix::accuracy)
    }
}

/// Scores every labeled row of `test`. Rows that fail to classify are logged
/// and left out.
pub fn evaluate(bundle: &ModelBundle, test: &FeatureTable) -> Result<Evaluation> {
    bundle.check_spec(&test.spec)?;
    let kinds = bundle.classifiers();
    let decisions: Vec<Option<(FaultClass, Vec<(ClassifierKind, Decision)>)>> = test
        .rows
        .par_iter()
        .map(|row| {
            let truth = row.label?;
            match bundle.predict(row) {
                Ok(d) => Some((truth, d)),
                Err(e) => {
                    log::warn!("skipping test row {}: {e}", row.source);
                    None
                }
            }
        })
        .collect();
    let mut results: Vec<(ClassifierKind, ConfusionMatrix)> =
        kinds.iter().map(|k| (*k, ConfusionMatrix::new())).collect();
    for (truth, ds) in decisions.into_iter().flatten() {
        for ((_, m), (_, d)) in results.iter_mut().zip(&ds) {
            m.record(truth, d.class);
        }
    }
    Ok(Evaluation { results })
}
