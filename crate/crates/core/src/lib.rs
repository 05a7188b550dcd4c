//! Vibration-based condition monitoring for rolling-element bearings.
//!
//! Recordings are cut into five-revolution segments ([`signal`]), turned into
//! multi-scale fractal, MFCC or kurtosis features ([`features`]), and
//! classified by per-condition Gaussian mixtures ([`gmm`]), hidden Markov
//! models ([`hmm`]), a one-vs-one kernel SVM ([`svm`]) or an extension neural
//! network ([`enn`]). [`pipeline`] ties these together: splitting, training,
//! confusion matrices, parameter sweeps and model persistence.

pub mod decision;
pub mod enn;
pub mod error;
pub mod features;
pub mod gmm;
pub mod hmm;
pub(crate) mod math;
pub mod pipeline;
pub mod signal;
pub mod svm;

pub use decision::Decision;
pub use error::{Error, Result};
pub use signal::FaultClass;
