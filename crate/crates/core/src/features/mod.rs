//! Feature extractors: time-domain (fractal, kurtosis) and cepstral (MFCC).

pub mod cepstral;
pub mod time;

pub use cepstral::{
    build_filterbank, hamming_window, hz_to_mel, mfcc, mfcc_segment, power_spectrum, MelFilterbank,
    MfccConfig, MfccMatrix,
};
pub use time::{box_count, box_counting_dimension, kurtosis, mfd, KurtosisValue, MfdVector, ResolutionGrid};
