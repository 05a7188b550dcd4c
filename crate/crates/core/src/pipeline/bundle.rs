//! Bundle file layout: `VDMB`, one version byte, then sections of
//! `tag[4] | len: u64 LE | payload`, then a CRC-32 (LE) of everything before
//! it. Payloads are bincode, which stores floats as little-endian f64.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::features::FeatureSetSpec;
use super::model::{ModelBundle, BUNDLE_VERSION};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VDMB";
const TAG_HEAD: &[u8; 4] = b"HEAD";
const TAG_STANDARDIZER: &[u8; 4] = b"STDZ";
const TAG_SVM: &[u8; 4] = b"SVM ";
const TAG_GMM: &[u8; 4] = b"GMM ";
const TAG_HMM: &[u8; 4] = b"HMM ";
const TAG_ENN: &[u8; 4] = b"ENN ";

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptBundle(msg.into())
}

fn push_section<T: Serialize>(out: &mut Vec<u8>, tag: &[u8; 4], value: &T) -> Result<()> {
    let payload = bincode::serialize(value).map_err(|e| corrupt(format!("encoding {}: {e}", tag_name(tag))))?;
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(())
}

fn tag_name(tag: &[u8]) -> String {
    String::from_utf8_lossy(tag).trim_end().to_string()
}

pub fn encode_bundle(bundle: &ModelBundle) -> Result<Vec<u8>> {
    if bundle.version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch(bundle.version));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(bundle.version);
    push_section(&mut out, TAG_HEAD, &(&bundle.feature_spec, &bundle.created_from))?;
    push_section(&mut out, TAG_STANDARDIZER, &bundle.standardizer)?;
    if let Some(m) = &bundle.svm {
        push_section(&mut out, TAG_SVM, m)?;
    }
    if let Some(m) = &bundle.gmm {
        push_section(&mut out, TAG_GMM, m)?;
    }
    if let Some(m) = &bundle.hmm {
        push_section(&mut out, TAG_HMM, m)?;
    }
    if let Some(m) = &bundle.enn {
        push_section(&mut out, TAG_ENN, m)?;
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn decode<T: DeserializeOwned>(tag: &[u8], payload: &[u8]) -> Result<T> {
    bincode::deserialize(payload).map_err(|e| corrupt(format!("section {}: {e}", tag_name(tag))))
}

fn set_once<T>(slot: &mut Option<T>, tag: &[u8], value: T) -> Result<()> {
    if slot.is_some() {
        return Err(corrupt(format!("duplicate section {}", tag_name(tag))));
    }
    *slot = Some(value);
    Ok(())
}

pub fn decode_bundle(bytes: &[u8]) -> Result<ModelBundle> {
    if bytes.len() < MAGIC.len() + 1 || &bytes[..4] != MAGIC {
        return Err(corrupt("missing VDMB header"));
    }
    let version = bytes[4];
    if version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    if bytes.len() < 9 {
        return Err(corrupt("truncated"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }

    let mut head: Option<(FeatureSetSpec, String)> = None;
    let mut standardizer = None;
    let (mut svm, mut gmm, mut hmm, mut enn) = (None, None, None, None);
    let mut rest = &body[5..];
    while !rest.is_empty() {
        if rest.len() < 12 {
            return Err(corrupt("truncated section header"));
        }
        let tag = &rest[..4];
        let len = u64::from_le_bytes(rest[4..12].try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| corrupt("section too large"))?;
        let payload = rest
            .get(12..12usize.checked_add(len).ok_or_else(|| corrupt("section too large"))?)
            .ok_or_else(|| corrupt(format!("section {} overruns the file", tag_name(tag))))?;
        match tag {
            t if t == TAG_HEAD => set_once(&mut head, t, decode(t, payload)?)?,
            t if t == TAG_STANDARDIZER => set_once(&mut standardizer, t, decode(t, payload)?)?,
            t if t == TAG_SVM => set_once(&mut svm, t, decode(t, payload)?)?,
            t if t == TAG_GMM => set_once(&mut gmm, t, decode(t, payload)?)?,
            t if t == TAG_HMM => set_once(&mut hmm, t, decode(t, payload)?)?,
            t if t == TAG_ENN => set_once(&mut enn, t, decode(t, payload)?)?,
            t => return Err(corrupt(format!("unknown section {:?}", tag_name(t)))),
        }
        rest = &rest[12 + len..];
    }

    let (feature_spec, created_from) = head.ok_or_else(|| corrupt("missing HEAD section"))?;
    let standardizer: super::standardize::Standardizer =
        standardizer.ok_or_else(|| corrupt("missing STDZ section"))?;
    if standardizer.vector.dim() != feature_spec.vector_dim() || standardizer.frames.dim() != feature_spec.frame_dim() {
        return Err(corrupt("standardization does not match the feature spec"));
    }
    Ok(ModelBundle {
        version,
        feature_spec,
        standardizer,
        svm,
        gmm,
        hmm,
        enn,
        created_from,
    })
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let bytes = encode_bundle(bundle)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bundle(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::standardize::{DimStats, Standardizer};

    fn tiny() -> ModelBundle {
        let stats = |d: usize| DimStats {
            mean: vec![0.1; d],
            std: vec![1.0 / 3.0; d],
        };
        ModelBundle {
            version: 1,
            feature_spec: FeatureSetSpec::mfd(2),
            standardizer: Standardizer {
                vector: stats(2),
                frames: stats(1),
            },
            svm: None,
            gmm: None,
            hmm: None,
            enn: Some(crate::enn::EnnModel {
                classes: vec![crate::FaultClass::Normal],
                w_lower: vec![vec![-0.0, f64::MIN_POSITIVE]],
                w_upper: vec![vec![1.0, 2.0]],
                centers: vec![vec![0.5, 1.0]],
                eta: 0.219,
            }),
            created_from: "abc".into(),
        }
    }

    #[test]
    fn layout() {
        let bytes = encode_bundle(&tiny()).unwrap();
        assert_eq!(&bytes[..5], b"VDMB\x01");
        assert_eq!(&bytes[5..9], b"HEAD");
        let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..bytes.len() - 4]));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let b = tiny();
        let back = decode_bundle(&encode_bundle(&b).unwrap()).unwrap();
        assert_eq!(back, b);
        let bits = |m: &ModelBundle| m.enn.as_ref().unwrap().w_lower[0].iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&b));
    }

    #[test]
    fn damage_is_detected() {
        let bytes = encode_bundle(&tiny()).unwrap();
        for cut in [0, 3, 7, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_bundle(&bytes[..cut]), Err(Error::CorruptBundle(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[20] ^= 0x40;
        assert!(matches!(decode_bundle(&flipped), Err(Error::CorruptBundle(_))));
        let mut v2 = bytes;
        v2[4] = 2;
        assert!(matches!(decode_bundle(&v2), Err(Error::VersionMismatch(2))));
    }

    #[test]
    fn file_io() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.vdmb");
        save_bundle(&tiny(), &p).unwrap();
        assert_eq!(load_bundle(&p).unwrap(), tiny());
        assert!(matches!(load_bundle(&dir.path().join("none")), Err(Error::IoFailure { .. })));
    }
}
