use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::signal::{load_signal, segment, DatasetManifest, FaultClass, Segment, DEFAULT_REVOLUTIONS};

/// Segments of every readable recording in a manifest.
#[derive(Debug)]
pub struct LoadedDataset {
    pub segments: Vec<Segment>,
    pub sample_rate_hz: f64,
    /// Recordings that could not be used, with the reason.
    pub failures: Vec<(PathBuf, Error)>,
}

impl LoadedDataset {
    pub fn class_counts(&self) -> [usize; FaultClass::COUNT] {
        let mut counts = [0; FaultClass::COUNT];
        for s in &self.segments {
            if let Some(c) = s.label {
                counts[c.index()] += 1;
            }
        }
        counts
    }
}

/// Loads and segments each entry. Unreadable or too-short recordings are
/// collected in `failures`; only an empty result is an error. All entries
/// must share one sample rate.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<LoadedDataset> {
    let rate = manifest.entries.first().ok_or(Error::EmptyInput)?.sample_rate_hz;
    if let Some(e) = manifest.entries.iter().find(|e| e.sample_rate_hz != rate) {
        return Err(Error::InvalidParameter(format!(
            "mixed sample rates: {} Hz and {} Hz ({})",
            rate,
            e.sample_rate_hz,
            e.path.display()
        )));
    }
    let mut segments = Vec::new();
    let mut failures = Vec::new();
    for entry in &manifest.entries {
        match load_signal(&entry.path, entry).and_then(|sig| segment(&sig, DEFAULT_REVOLUTIONS)) {
            Ok(segs) => segments.extend(segs),
            Err(e) => {
                log::warn!("{}: {e}", entry.path.display());
                failures.push((entry.path.clone(), e));
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(LoadedDataset {
        segments,
        sample_rate_hz: rate,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_synthetic, save_binary, ManifestEntry};

    fn entry(path: PathBuf, label: FaultClass, rate: f64) -> ManifestEntry {
        ManifestEntry {
            path,
            label,
            rpm: 1797.0,
            sample_rate_hz: rate,
        }
    }

    #[test]
    fn bad_files_are_listed_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.bin");
        let sig = generate_synthetic(FaultClass::Ball, 1.0, 12_000.0, 1797.0, 1).unwrap();
        save_binary(&sig.samples, &good).unwrap();
        let manifest = DatasetManifest::new(vec![
            entry(good, FaultClass::Ball, 12_000.0),
            entry(dir.path().join("missing.bin"), FaultClass::Normal, 12_000.0),
        ])
        .unwrap();
        let d = load_dataset(&manifest).unwrap();
        assert_eq!(d.segments.len(), 5);
        assert_eq!(d.class_counts(), [0, 0, 0, 5]);
        assert_eq!(d.failures.len(), 1);
        assert!(matches!(d.failures[0].1, Error::MissingFile(_)));
    }

    #[test]
    fn all_missing_or_mixed_rates_fail() {
        let dir = tempfile::tempdir().unwrap();
        let m = DatasetManifest::new(vec![entry(dir.path().join("x.bin"), FaultClass::Normal, 12_000.0)]).unwrap();
        assert!(matches!(load_dataset(&m), Err(Error::EmptyInput)));
        let m = DatasetManifest::new(vec![
            entry(dir.path().join("a.bin"), FaultClass::Normal, 12_000.0),
            entry(dir.path().join("b.bin"), FaultClass::Ball, 48_000.0),
        ])
        .unwrap();
        assert!(matches!(load_dataset(&m), Err(Error::InvalidParameter(_))));
    }
}
