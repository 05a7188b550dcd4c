//! Vibration recordings: loading, labelling, segmentation and framing.
//!
//! Two on-disk sample formats are understood:
//!
//! * CSV: one decimal value per line; lines starting with `#` are ignored.
//! * Binary: `b"VSIG"`, version byte `0x01`, `u32` LE sample count, then that
//!   many `f32` LE samples.
//!
//! Datasets are described by a TOML manifest of `[[entry]]` tables carrying
//! `path`, `label`, `rpm` and `sample_rate_hz`.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default motor speed used when a recording does not state one.
pub const DEFAULT_RPM: f64 = 1797.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 12_000.0;
pub const DEFAULT_REVOLUTIONS: f64 = 5.0;
pub const DEFAULT_FRAMES_PER_SEGMENT: usize = 14;

const BINARY_MAGIC: &[u8; 4] = b"VSIG";
const BINARY_VERSION: u8 = 0x01;

/// Bearing condition. The ordinal is the confusion-matrix row/column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultClass {
    Normal,
    #[serde(rename = "inner")]
    InnerRace,
    #[serde(rename = "outer")]
    OuterRace,
    Ball,
}

impl FaultClass {
    pub const COUNT: usize = 4;
    pub const ALL: [FaultClass; 4] = [
        FaultClass::Normal,
        FaultClass::InnerRace,
        FaultClass::OuterRace,
        FaultClass::Ball,
    ];

    pub fn index(self) -> usize {
        match self {
            FaultClass::Normal => 0,
            FaultClass::InnerRace => 1,
            FaultClass::OuterRace => 2,
            FaultClass::Ball => 3,
        }
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Self::ALL.get(idx).copied()
    }

    /// Manifest / CSV spelling.
    pub fn label(self) -> &'static str {
        match self {
            FaultClass::Normal => "normal",
            FaultClass::InnerRace => "inner",
            FaultClass::OuterRace => "outer",
            FaultClass::Ball => "ball",
        }
    }

    /// Spelling used in confusion-matrix headers.
    pub fn title(self) -> &'static str {
        match self {
            FaultClass::Normal => "Normal",
            FaultClass::InnerRace => "Inner",
            FaultClass::OuterRace => "Outer",
            FaultClass::Ball => "Ball",
        }
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FaultClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(FaultClass::Normal),
            "inner" => Ok(FaultClass::InnerRace),
            "outer" => Ok(FaultClass::OuterRace),
            "ball" => Ok(FaultClass::Ball),
            other => Err(Error::InvalidParameter(format!("unknown label '{other}'"))),
        }
    }
}

/// A raw recording plus the metadata needed to segment it.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub shaft_speed_rpm: f64,
    pub label: Option<FaultClass>,
    pub source_id: String,
}

impl VibrationSignal {
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        shaft_speed_rpm: f64,
        label: Option<FaultClass>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        check_positive("sample_rate_hz", sample_rate_hz)?;
        check_positive("shaft_speed_rpm", shaft_speed_rpm)?;
        Ok(Self {
            samples,
            sample_rate_hz,
            shaft_speed_rpm,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A fixed number of shaft revolutions cut from a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: Vec<f64>,
    pub parent_source_id: String,
    pub index: usize,
    pub label: Option<FaultClass>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<f64>,
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: FaultClass,
    #[serde(default = "default_rpm")]
    pub rpm: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
}

fn default_rpm() -> f64 {
    DEFAULT_RPM
}

fn default_rate() -> f64 {
    DEFAULT_SAMPLE_RATE_HZ
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(rename = "entry", default)]
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = Self { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate manifest path {}",
                    e.path.display()
                )));
            }
            check_positive("rpm", e.rpm)?;
            check_positive("sample_rate_hz", e.sample_rate_hz)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Self = toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Reads a manifest; relative entry paths are resolved against the
    /// manifest's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for e in &mut manifest.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable as TOML")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Loads a recording in either supported format and attaches the manifest metadata.
pub fn load_signal(path: &Path, meta: &ManifestEntry) -> Result<VibrationSignal> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let samples = if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(path, &bytes)?
    } else {
        decode_csv(path, &bytes)?
    };
    VibrationSignal::new(
        samples,
        meta.sample_rate_hz,
        meta.rpm,
        Some(meta.label),
        path.display().to_string(),
    )
}

fn decode_csv(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    let malformed = |reason: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("not UTF-8 text".into()))?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| malformed(format!("line {}: '{line}' is not a number", lineno + 1)))?;
        if !v.is_finite() {
            return Err(malformed(format!("line {}: non-finite value", lineno + 1)));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples)
}

fn decode_binary(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    let malformed = |reason: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 9 {
        return Err(malformed("truncated header".into()));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(malformed(format!("unsupported version {}", bytes[4])));
    }
    let count = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    if count == 0 {
        return Err(Error::EmptySignal);
    }
    let body = &bytes[9..];
    if body.len() != count * 4 {
        return Err(malformed(format!(
            "expected {} sample bytes, found {}",
            count * 4,
            body.len()
        )));
    }
    let samples: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(malformed("non-finite sample".into()));
    }
    Ok(samples)
}

/// Encodes samples in the binary `VSIG` format. Samples are narrowed to `f32`.
pub fn encode_binary(samples: &[f64]) -> Result<Vec<u8>> {
    let count = u32::try_from(samples.len())
        .map_err(|_| Error::InvalidParameter("too many samples for VSIG".into()))?;
    let mut out = Vec::with_capacity(9 + samples.len() * 4);
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.extend_from_slice(&count.to_le_bytes());
    for &s in samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn save_binary(samples: &[f64], path: &Path) -> Result<()> {
    let bytes = encode_binary(samples)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes one sample per line using the shortest exact decimal form.
pub fn save_csv(samples: &[f64], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(samples.len() * 12);
    for s in samples {
        text.push_str(&format!("{s}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Number of samples spanning `revolutions` turns of the shaft.
pub fn segment_len(sample_rate_hz: f64, shaft_speed_rpm: f64, revolutions: f64) -> usize {
    (revolutions * 60.0 / shaft_speed_rpm * sample_rate_hz).round() as usize
}

/// Cuts a signal into consecutive, non-overlapping segments; the tail is dropped.
pub fn segment(signal: &VibrationSignal, revolutions: f64) -> Result<Vec<Segment>> {
    check_positive("revolutions", revolutions)?;
    let seg_len = segment_len(signal.sample_rate_hz, signal.shaft_speed_rpm, revolutions);
    if seg_len == 0 || signal.len() < seg_len {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            segment_len: seg_len,
        });
    }
    Ok(signal
        .samples
        .chunks_exact(seg_len)
        .enumerate()
        .map(|(index, chunk)| Segment {
            samples: chunk.to_vec(),
            parent_source_id: signal.source_id.clone(),
            index,
            label: signal.label,
        })
        .collect())
}

/// `[start, end)` bounds of `n_frames` contiguous frames covering `len` samples.
/// The remainder is spread one sample at a time over the leading frames.
pub fn frame_bounds(len: usize, n_frames: usize) -> Result<Vec<(usize, usize)>> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be positive".into()));
    }
    if len < n_frames {
        return Err(Error::TooFewSamples {
            needed: n_frames,
            got: len,
        });
    }
    let base = len / n_frames;
    let extra = len % n_frames;
    let mut bounds = Vec::with_capacity(n_frames);
    let mut start = 0;
    for i in 0..n_frames {
        let width = base + usize::from(i < extra);
        bounds.push((start, start + width));
        start += width;
    }
    Ok(bounds)
}

pub fn frame(segment: &Segment, n_frames: usize) -> Result<Vec<Frame>> {
    frame_samples(&segment.samples, n_frames)
}

pub fn frame_samples(samples: &[f64], n_frames: usize) -> Result<Vec<Frame>> {
    Ok(frame_bounds(samples.len(), n_frames)?
        .into_iter()
        .enumerate()
        .map(|(frame_index, (a, b))| Frame {
            samples: samples[a..b].to_vec(),
            frame_index,
        })
        .collect())
}

/// Per-class impulse-train parameters of the synthetic generator.
#[derive(Debug, Clone, Copy)]
struct ImpulseProfile {
    /// Impulse repetition rate as a multiple of shaft frequency.
    rate_ratio: f64,
    /// Structural resonance excited by each impact.
    resonance_hz: f64,
}

const NOISE_SIGMA: f64 = 0.1;
const SHAFT_AMPLITUDE: f64 = 0.1;
const IMPULSE_AMPLITUDE: f64 = 5.0 * NOISE_SIGMA;
const IMPULSE_DECAY_S: f64 = 4e-3;

fn impulse_profile(class: FaultClass) -> Option<ImpulseProfile> {
    match class {
        FaultClass::Normal => None,
        FaultClass::InnerRace => Some(ImpulseProfile {
            rate_ratio: 3.58,
            resonance_hz: 2_600.0,
        }),
        FaultClass::OuterRace => Some(ImpulseProfile {
            rate_ratio: 5.42,
            resonance_hz: 5_000.0,
        }),
        FaultClass::Ball => Some(ImpulseProfile {
            rate_ratio: 4.71,
            resonance_hz: 1_700.0,
        }),
    }
}

/// Deterministic synthetic bearing recording.
///
/// Every class carries Gaussian noise plus a shaft-frequency sinusoid; fault
/// classes add a train of exponentially decaying resonance bursts whose
/// repetition rate and ringing frequency depend on the class. Samples are
/// rounded to `f32` precision so binary round-trips are exact.
pub fn generate_synthetic(
    class: FaultClass,
    duration_s: f64,
    sample_rate_hz: f64,
    rpm: f64,
    seed: u64,
) -> Result<VibrationSignal> {
    check_positive("duration_s", duration_s)?;
    check_positive("sample_rate_hz", sample_rate_hz)?;
    check_positive("rpm", rpm)?;
    let n = (duration_s * sample_rate_hz).round() as usize;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "duration shorter than one sample".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class.index() as u64);
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let shaft_hz = rpm / 60.0;
    let phase = rng.random::<f64>() * TAU;
    let dt = 1.0 / sample_rate_hz;

    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            SHAFT_AMPLITUDE * (TAU * shaft_hz * t + phase).sin() + noise.sample(&mut rng)
        })
        .collect();

    if let Some(profile) = impulse_profile(class) {
        let period = 1.0 / (profile.rate_ratio * shaft_hz);
        let ring = (10.0 * IMPULSE_DECAY_S * sample_rate_hz).ceil() as usize;
        let mut t0 = rng.random::<f64>() * period;
        while t0 < duration_s {
            let amp = IMPULSE_AMPLITUDE * rng.random_range(0.8..1.2);
            let first = (t0 * sample_rate_hz).ceil() as usize;
            for (i, s) in samples.iter_mut().enumerate().skip(first).take(ring) {
                let tau = i as f64 * dt - t0;
                *s += amp * (-tau / IMPULSE_DECAY_S).exp() * (TAU * profile.resonance_hz * tau).sin();
            }
            // slip of a couple percent per impact
            t0 += period * (1.0 + rng.random_range(-0.02..0.02));
        }
    }

    for s in &mut samples {
        *s = *s as f32 as f64;
    }

    VibrationSignal::new(
        samples,
        sample_rate_hz,
        rpm,
        Some(class),
        format!("synthetic-{}-{seed}", class.label()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::time::kurtosis;
    use rand::Rng;
    use proptest::prelude::*;

    fn entry(path: &Path) -> ManifestEntry {
        ManifestEntry {
            path: path.to_path_buf(),
            label: FaultClass::Normal,
            rpm: 1797.0,
            sample_rate_hz: 12_000.0,
        }
    }

    #[test]
    fn ordinal_mapping_is_fixed() {
        for (i, c) in FaultClass::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(FaultClass::from_index(i), Some(*c));
            assert_eq!(c.label().parse::<FaultClass>().unwrap(), *c);
        }
        assert_eq!(FaultClass::from_index(4), None);
    }

    #[test]
    fn csv_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "0.1\n-0.2\n0.3").unwrap();
        let sig = load_signal(&p, &entry(&p)).unwrap();
        assert_eq!(sig.samples, vec![0.1, -0.2, 0.3]);
        assert_eq!(sig.sample_rate_hz, 12_000.0);
        assert_eq!(sig.shaft_speed_rpm, 1797.0);
        assert_eq!(sig.label, Some(FaultClass::Normal));
    }

    #[test]
    fn csv_header_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "# accel\n1.5\n2.5\n").unwrap();
        assert_eq!(load_signal(&p, &entry(&p)).unwrap().samples, vec![1.5, 2.5]);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        fs::write(&p, "").unwrap();
        assert!(matches!(load_signal(&p, &entry(&p)), Err(Error::EmptySignal)));

        let p = dir.path().join("bad.csv");
        fs::write(&p, "0.1\nabc\n").unwrap();
        assert!(matches!(
            load_signal(&p, &entry(&p)),
            Err(Error::MalformedRecord { .. })
        ));

        let p = dir.path().join("nope.csv");
        assert!(matches!(load_signal(&p, &entry(&p)), Err(Error::MissingFile(_))));

        let p = dir.path().join("trunc.vsig");
        let mut bytes = encode_binary(&[1.0, 2.0, 3.0]).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(
            load_signal(&p, &entry(&p)),
            Err(Error::MalformedRecord { .. })
        ));
    }

    #[test]
    fn binary_round_trip_2005_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..2005)
            .map(|_| rng.random_range(-10.0f32..10.0) as f64)
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.vsig");
        save_binary(&samples, &p).unwrap();
        let back = load_signal(&p, &entry(&p)).unwrap();
        assert_eq!(back.samples.len(), 2005);
        for (a, b) in samples.iter().zip(&back.samples) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn segment_lengths() {
        assert_eq!(segment_len(12_000.0, 1797.0, 5.0), 2003);
        assert_eq!(segment_len(12_000.0, 1800.0, 5.0), 2000);

        let sig = VibrationSignal::new(vec![0.5; 6000], 12_000.0, 1800.0, Some(FaultClass::Ball), "x")
            .unwrap();
        let segs = segment(&sig, 5.0).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.len() == 2000 && s.label == Some(FaultClass::Ball)));
        assert_eq!(segs[2].index, 2);

        let short = VibrationSignal::new(vec![0.0; 1000], 12_000.0, 1797.0, None, "y").unwrap();
        assert!(matches!(
            segment(&short, 5.0),
            Err(Error::SignalTooShort { len: 1000, segment_len: 2003 })
        ));
    }

    #[test]
    fn framing() {
        let seg = Segment {
            samples: (0..2003).map(f64::from).collect(),
            parent_source_id: "s".into(),
            index: 0,
            label: None,
        };
        let frames = frame(&seg, 14).unwrap();
        assert_eq!(frames.len(), 14);
        assert_eq!(frames[0].samples.len(), 144);
        assert!(frames[1..].iter().all(|f| f.samples.len() == 143));

        let frames = frame_samples(&[1.0; 14], 14).unwrap();
        assert!(frames.iter().all(|f| f.samples.len() == 1));

        assert!(matches!(
            frame_samples(&[1.0; 13], 14),
            Err(Error::TooFewSamples { needed: 14, got: 13 })
        ));
    }

    #[test]
    fn synthetic_is_deterministic_and_validated() {
        let a = generate_synthetic(FaultClass::OuterRace, 0.5, 12_000.0, 1797.0, 3).unwrap();
        let b = generate_synthetic(FaultClass::OuterRace, 0.5, 12_000.0, 1797.0, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(FaultClass::OuterRace, 0.5, 12_000.0, 1797.0, 4).unwrap();
        assert_ne!(a.samples, c.samples);
        assert!(matches!(
            generate_synthetic(FaultClass::Normal, 0.0, 12_000.0, 1797.0, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(generate_synthetic(FaultClass::Normal, 1.0, -1.0, 1797.0, 1).is_err());
    }

    #[test]
    fn ball_is_more_impulsive_than_normal() {
        let normal = generate_synthetic(FaultClass::Normal, 10.0, 12_000.0, 1797.0, 5).unwrap();
        let ball = generate_synthetic(FaultClass::Ball, 10.0, 12_000.0, 1797.0, 5).unwrap();
        let kn = kurtosis(&normal.samples).unwrap().value;
        let kb = kurtosis(&ball.samples).unwrap().value;
        assert!(kb > kn, "ball {kb} vs normal {kn}");
    }

    #[test]
    fn manifest_toml() {
        let text = r#"
            [[entry]]
            path = "a.csv"
            label = "inner"
            rpm = 1797.0
            sample_rate_hz = 12000.0

            [[entry]]
            path = "b.vsig"
            label = "ball"
            rpm = 1772.0
            sample_rate_hz = 12000.0
        "#;
        let m = DatasetManifest::parse(text).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].label, FaultClass::InnerRace);
        assert_eq!(DatasetManifest::parse(&m.to_toml()).unwrap(), m);

        let dup = format!("{text}\n[[entry]]\npath = \"a.csv\"\nlabel = \"outer\"\nrpm = 1.0\nsample_rate_hz = 1.0\n");
        assert!(DatasetManifest::parse(&dup).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(samples in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("p.csv");
            save_csv(&samples, &p).unwrap();
            let back = load_signal(&p, &entry(&p)).unwrap();
            prop_assert_eq!(back.samples, samples);
        }

        #[test]
        fn segments_concatenate_to_prefix(len in 2000usize..9000, rpm in 1700.0f64..1800.0) {
            let samples: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let sig = VibrationSignal::new(samples.clone(), 12_000.0, rpm, None, "p").unwrap();
            match segment(&sig, 5.0) {
                Ok(segs) => {
                    let joined: Vec<f64> = segs.iter().flat_map(|s| s.samples.clone()).collect();
                    let seg_len = segment_len(12_000.0, rpm, 5.0);
                    prop_assert_eq!(joined.len(), segs.len() * seg_len);
                    prop_assert_eq!(&joined[..], &samples[..joined.len()]);
                }
                Err(Error::SignalTooShort { .. }) => prop_assert!(len < segment_len(12_000.0, rpm, 5.0)),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn frames_cover_segment(len in 1usize..5000, n in 1usize..40) {
            match frame_bounds(len, n) {
                Ok(b) => {
                    prop_assert_eq!(b.len(), n);
                    prop_assert_eq!(b[0].0, 0);
                    prop_assert_eq!(b[n - 1].1, len);
                    let widths: Vec<usize> = b.iter().map(|(a, e)| e - a).collect();
                    let max = *widths.iter().max().unwrap();
                    let min = *widths.iter().min().unwrap();
                    prop_assert!(max - min <= 1);
                    prop_assert!(widths.windows(2).all(|w| w[0] >= w[1]));
                }
                Err(_) => prop_assert!(len < n),
            }
        }
    }
}
