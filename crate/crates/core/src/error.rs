use std::path::PathBuf;

use crate::signal::FaultClass;

/// Errors produced anywhere in the feature-extraction / classification stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("malformed record in {path}: {reason}")]
    MalformedRecord { path: PathBuf, reason: String },
    #[error("signal contains no samples")]
    EmptySignal,
    #[error("signal has {len} samples, fewer than one segment of {segment_len}")]
    SignalTooShort { len: usize, segment_len: usize },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input")]
    EmptyInput,
    #[error("regression is degenerate (all abscissae equal)")]
    DegenerateRegression,
    #[error("invalid MFD size K={0}")]
    InvalidK(usize),
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("invalid window length {0}")]
    InvalidLength(usize),
    #[error("frame of {frame_len} samples does not fit an FFT of size {fft_size}")]
    FrameTooLong { frame_len: usize, fft_size: usize },
    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),
    #[error("{n_filters} mel filters collide on a {fft_size}-point FFT grid")]
    TooManyFilters { n_filters: usize, fft_size: usize },
    #[error("requested {requested} coefficients from {n_filters} filters")]
    TooManyCoefficients { requested: usize, n_filters: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("class {0} missing from training data")]
    MissingClass(FaultClass),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all data points are identical")]
    DegenerateData,
    #[error("observation list is empty")]
    EmptyObservation,
    #[error("observation sequence is empty")]
    EmptySequence,
    #[error("need at least {needed} observation frames, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("unknown class index {0}")]
    UnknownClass(usize),
    #[error("learning rate {0} outside (0, 1)")]
    InvalidLearningRate(f64),
    #[error("class {class} has {count} segment(s); cannot stratify")]
    ClassTooSmall { class: FaultClass, count: usize },
    #[error("feature spec mismatch: bundle uses {expected}, data uses {got}")]
    FeatureSpecMismatch { expected: String, got: String },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported bundle version {0}")]
    VersionMismatch(u8),
    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
