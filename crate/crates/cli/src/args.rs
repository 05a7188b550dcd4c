use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vibmon", version, about = "Bearing fault diagnosis from vibration recordings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with default values for any flag
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for splits and model initialization
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More diagnostics on stderr (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args, Default)]
pub struct FeatureArgs {
    /// Feature set: mfd, mfcc, mfcc+kurtosis or kurtosis
    #[arg(long)]
    pub features: Option<String>,
    /// Number of fractal dimensions in the MFD vector
    #[arg(long)]
    pub mfd_k: Option<usize>,
    /// Smallest box side for MFD, in samples
    #[arg(long)]
    pub eps_min: Option<usize>,
    /// MFCC coefficients per frame
    #[arg(long)]
    pub mfcc_l: Option<usize>,
    /// Mel filters in the MFCC filterbank
    #[arg(long)]
    pub mel_filters: Option<usize>,
    /// FFT length for MFCC
    #[arg(long)]
    pub fft_size: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ClassifierArgs {
    /// Comma-separated subset of svm,hmm,gmm,enn
    #[arg(long)]
    pub classifiers: Option<String>,
    #[arg(long)]
    pub svm_c: Option<f64>,
    #[arg(long)]
    pub svm_degree: Option<u32>,
    #[arg(long)]
    pub gmm_components: Option<usize>,
    #[arg(long)]
    pub hmm_states: Option<usize>,
    #[arg(long)]
    pub hmm_mixtures: Option<usize>,
    #[arg(long)]
    pub enn_eta: Option<f64>,
    #[arg(long)]
    pub enn_epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepParam {
    Mfd,
    Mfcc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and segment the recordings in a manifest and cache them as binary files
    Ingest {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write seeded synthetic recordings for the four classes plus a manifest
    Synth {
        /// Seconds per recording
        #[arg(long)]
        duration: Option<f64>,
        /// Comma-separated classes to generate
        #[arg(long, default_value = "normal,inner,outer,ball")]
        classes: String,
        #[arg(long)]
        sample_rate: Option<f64>,
        #[arg(long)]
        rpm: Option<f64>,
    },
    /// Write the feature table of every segment in a manifest
    Extract {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Split, fit the standardizer and classifiers, and save a model bundle
    Train {
        #[arg(long, conflicts_with = "table")]
        manifest: Option<PathBuf>,
        /// Feature table written by `extract` instead of a manifest
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        classifiers: ClassifierArgs,
    },
    /// Score a feature table with a bundle and write confusion matrices
    Eval {
        /// Defaults to OUT/model.vdmb
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Defaults to OUT/test.csv
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Accuracy of every classifier across MFD sizes or MFCC counts
    Sweep {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// First value (default 2 for mfd, 9 for mfcc)
        #[arg(long)]
        from: Option<usize>,
        /// Last value (default 20 for mfd, 16 for mfcc)
        #[arg(long)]
        to: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        classifiers: ClassifierArgs,
    },
    /// Classify recordings with a saved bundle
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, conflicts_with = "input")]
        manifest: Option<PathBuf>,
        /// Unlabeled recording (binary or one sample per line)
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long)]
        sample_rate: Option<f64>,
        #[arg(long)]
        rpm: Option<f64>,
        #[command(flatten)]
        features: FeatureArgs,
    },
}
