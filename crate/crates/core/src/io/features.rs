use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{LoadError, Result};
use crate::model::FeatureTrack;

pub const FEATURE_MAGIC: &[u8; 4] = b"FBWF";
pub const FEATURE_VERSION: u32 = 1;

pub fn features_to_bytes(feat: &FeatureTrack) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * feat.values().len());
    out.extend_from_slice(FEATURE_MAGIC);
    for v in [FEATURE_VERSION, feat.frames() as u32, feat.dim() as u32] {
        out.write_u32::<LittleEndian>(v).expect("vec write");
    }
    for &v in feat.values() {
        out.write_f32::<LittleEndian>(v).expect("vec write");
    }
    out
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<FeatureTrack> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    let short = |what: &str| LoadError::Truncated(format!("feature file ends inside the {what}"));
    r.read_exact(&mut magic).map_err(|_| short("magic"))?;
    if &magic != FEATURE_MAGIC {
        return Err(LoadError::BadMagic {
            expected: *FEATURE_MAGIC,
            found: magic,
        }
        .into());
    }
    let mut word = || r.read_u32::<LittleEndian>().map_err(|_| short("header"));
    let version = word()?;
    if version != FEATURE_VERSION {
        return Err(LoadError::UnsupportedVersion {
            expected: FEATURE_VERSION,
            found: version,
        }
        .into());
    }
    let frames = word()? as usize;
    let dim = word()? as usize;
    let payload = &bytes[16..];
    let expected = frames
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| short("payload"))?;
    if payload.len() < expected {
        return Err(short("payload").into());
    }
    if payload.len() > expected {
        return Err(LoadError::TrailingBytes(payload.len() - expected).into());
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    FeatureTrack::new(frames, dim, values)
}

pub fn write_features(path: &Path, feat: &FeatureTrack) -> Result<()> {
    std::fs::write(path, features_to_bytes(feat))?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureTrack> {
    features_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn round_trip() {
        let f = FeatureTrack::new(2, 3, vec![1.0, -2.5, 0.0, 3.0, 4.0, 1e-3]).unwrap();
        let bytes = features_to_bytes(&f);
        assert_eq!(&bytes[..4], b"FBWF");
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(features_from_bytes(&bytes).unwrap(), f);
    }

    #[test]
    fn corrupted() {
        let f = FeatureTrack::zeros(2, 3);
        let mut bytes = features_to_bytes(&f);
        assert!(matches!(features_from_bytes(&bytes[..20]), Err(Error::Load(LoadError::Truncated(_)))));
        bytes.push(0);
        assert!(matches!(features_from_bytes(&bytes), Err(Error::Load(LoadError::TrailingBytes(1)))));
        bytes[0] = b'X';
        assert!(matches!(features_from_bytes(&bytes), Err(Error::Load(LoadError::BadMagic { .. }))));
    }
}
