use std::path::{Path, PathBuf};

use serde::Deserialize;
use vibmon::enn::{DEFAULT_EPOCHS, DEFAULT_ETA};
use vibmon::gmm::DEFAULT_COMPONENTS;
use vibmon::hmm::{DEFAULT_MIXTURES, DEFAULT_STATES};
use vibmon::pipeline::features::{DEFAULT_EPS_MIN, DEFAULT_FFT_SIZE, DEFAULT_FILTERS, DEFAULT_MFCC_L, DEFAULT_MFD_K};
use vibmon::pipeline::{ClassifierKind, FeatureSetSpec, TrainConfig};
use vibmon::svm::KernelSpec;

use crate::args::{ClassifierArgs, FeatureArgs, GlobalArgs};
use crate::Failure;

/// Keys accepted in a `--config` file. Command-line flags win over these.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub features: Option<String>,
    pub mfd_k: Option<usize>,
    pub eps_min: Option<usize>,
    pub mfcc_l: Option<usize>,
    pub mel_filters: Option<usize>,
    pub fft_size: Option<usize>,
    pub classifiers: Option<Vec<String>>,
    pub train_fraction: Option<f64>,
    pub svm_c: Option<f64>,
    pub svm_degree: Option<u32>,
    pub gmm_components: Option<usize>,
    pub hmm_states: Option<usize>,
    pub hmm_mixtures: Option<usize>,
    pub enn_eta: Option<f64>,
    pub enn_epochs: Option<usize>,
    pub duration_s: Option<f64>,
    pub sample_rate_hz: Option<f64>,
    pub rpm: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag values merged over the config file.
pub struct Resolved<'a> {
    pub global: &'a GlobalArgs,
    pub file: ConfigFile,
}

impl<'a> Resolved<'a> {
    pub fn new(global: &'a GlobalArgs) -> Result<Self, Failure> {
        let file = ConfigFile::load(global.config.as_deref())?;
        Ok(Self { global, file })
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.global
            .seed
            .or(self.file.seed)
            .ok_or_else(|| Failure::Usage("a seed is required (--seed or `seed` in the config)".into()))
    }

    pub fn out(&self) -> Result<PathBuf, Failure> {
        self.global
            .out
            .clone()
            .or_else(|| self.file.out.clone())
            .ok_or_else(|| Failure::Usage("an output directory is required (--out or `out` in the config)".into()))
    }

    /// Output directory, created if needed.
    pub fn out_dir(&self) -> Result<PathBuf, Failure> {
        let out = self.out()?;
        std::fs::create_dir_all(&out)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?;
        Ok(out)
    }

    pub fn manifest(&self, flag: Option<&PathBuf>) -> Option<PathBuf> {
        flag.cloned().or_else(|| self.file.manifest.clone())
    }

    pub fn train_fraction(&self, flag: Option<f64>) -> Result<f64, Failure> {
        let f = flag.or(self.file.train_fraction).unwrap_or(0.7);
        if f > 0.0 && f < 1.0 {
            Ok(f)
        } else {
            Err(Failure::Usage(format!("train fraction {f} outside (0, 1)")))
        }
    }

    /// `None` when neither flags nor config name a feature family.
    pub fn feature_spec(&self, f: &FeatureArgs) -> Result<Option<FeatureSetSpec>, Failure> {
        let Some(family) = f.features.clone().or_else(|| self.file.features.clone()) else {
            return Ok(None);
        };
        let k = f.mfd_k.or(self.file.mfd_k).unwrap_or(DEFAULT_MFD_K);
        let eps_min = f.eps_min.or(self.file.eps_min).unwrap_or(DEFAULT_EPS_MIN);
        let n_coeffs = f.mfcc_l.or(self.file.mfcc_l).unwrap_or(DEFAULT_MFCC_L);
        let n_filters = f.mel_filters.or(self.file.mel_filters).unwrap_or(DEFAULT_FILTERS);
        let fft_size = f.fft_size.or(self.file.fft_size).unwrap_or(DEFAULT_FFT_SIZE);
        let spec = match family.as_str() {
            "mfd" => FeatureSetSpec::Mfd { k, eps_min },
            "mfcc" => FeatureSetSpec::Mfcc {
                n_coeffs,
                n_filters,
                fft_size,
            },
            "mfcc+kurtosis" => FeatureSetSpec::MfccPlusKurtosis {
                n_coeffs,
                n_filters,
                fft_size,
            },
            "kurtosis" => FeatureSetSpec::KurtosisOnly,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown feature set '{other}' (expected mfd, mfcc, mfcc+kurtosis or kurtosis)"
                )))
            }
        };
        spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(Some(spec))
    }

    /// Feature spec with the MFD default when nothing is given.
    pub fn feature_spec_or_default(&self, f: &FeatureArgs) -> Result<FeatureSetSpec, Failure> {
        Ok(self.feature_spec(f)?.unwrap_or_default())
    }

    pub fn train_config(&self, c: &ClassifierArgs, seed: u64) -> Result<TrainConfig, Failure> {
        let usage = |e: vibmon::Error| Failure::Usage(e.to_string());
        let mut cfg = TrainConfig::seeded(seed);
        let names: Option<Vec<String>> = c
            .classifiers
            .as_ref()
            .map(|s| s.split(',').map(str::to_string).collect())
            .or_else(|| self.file.classifiers.clone());
        if let Some(names) = names {
            let mut kinds = names
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<ClassifierKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(usage)?;
            kinds.sort();
            kinds.dedup();
            if kinds.is_empty() {
                return Err(Failure::Usage("no classifiers selected".into()));
            }
            cfg.classifiers = kinds;
        }
        cfg.svm.c = c.svm_c.or(self.file.svm_c).unwrap_or(cfg.svm.c);
        if !(cfg.svm.c > 0.0) {
            return Err(Failure::Usage("svm C must be positive".into()));
        }
        cfg.svm.kernel = KernelSpec::Polynomial {
            degree: c.svm_degree.or(self.file.svm_degree).unwrap_or(5),
        };
        cfg.svm.kernel.validate().map_err(usage)?;
        cfg.gmm.n_components = c.gmm_components.or(self.file.gmm_components).unwrap_or(DEFAULT_COMPONENTS);
        cfg.hmm.n_states = c.hmm_states.or(self.file.hmm_states).unwrap_or(DEFAULT_STATES);
        cfg.hmm.n_mixtures = c.hmm_mixtures.or(self.file.hmm_mixtures).unwrap_or(DEFAULT_MIXTURES);
        if cfg.gmm.n_components == 0 || cfg.hmm.n_states == 0 || cfg.hmm.n_mixtures == 0 {
            return Err(Failure::Usage("mixture and state counts must be at least 1".into()));
        }
        cfg.enn_eta = c.enn_eta.or(self.file.enn_eta).unwrap_or(DEFAULT_ETA);
        if !(cfg.enn_eta > 0.0 && cfg.enn_eta < 1.0) {
            return Err(usage(vibmon::Error::InvalidLearningRate(cfg.enn_eta)));
        }
        cfg.enn_epochs = c.enn_epochs.or(self.file.enn_epochs).unwrap_or(DEFAULT_EPOCHS);
        Ok(cfg)
    }
}
