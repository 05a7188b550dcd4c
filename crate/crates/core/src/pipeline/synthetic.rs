use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::signal::{
    generate_synthetic, segment, segment_len, FaultClass, Segment, DEFAULT_REVOLUTIONS, DEFAULT_RPM,
    DEFAULT_SAMPLE_RATE_HZ,
};

/// Seeded four-class benchmark built from the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBenchmark {
    pub segments_per_class: usize,
    pub sample_rate_hz: f64,
    pub rpm: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticBenchmark {
    fn default() -> Self {
        Self {
            segments_per_class: 200,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            rpm: DEFAULT_RPM,
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SyntheticBenchmark {
    /// Recording length that yields exactly `segments_per_class` segments.
    pub fn duration_s(&self) -> f64 {
        let n = self.segments_per_class * segment_len(self.sample_rate_hz, self.rpm, DEFAULT_REVOLUTIONS);
        (n as f64 + 0.5) / self.sample_rate_hz
    }

    pub fn segments(&self) -> Result<Vec<Segment>> {
        let mut out = Vec::with_capacity(self.segments_per_class * FaultClass::COUNT);
        for class in FaultClass::ALL {
            let sig = generate_synthetic(class, self.duration_s(), self.sample_rate_hz, self.rpm, self.seed)?;
            out.extend(segment(&sig, DEFAULT_REVOLUTIONS)?.into_iter().take(self.segments_per_class));
        }
        Ok(out)
    }
}
