//! Weight file: little-endian, `"FBWV"`, u32 version, config block, then
//! every tensor in canonical order as `(u32 rank, u32 dims..., f32 data)`.
//!
//! Config block (u32 unless noted): sample rate, feature dim, k, W, W_g,
//! C, E, H, IRB bodies, GRUFlow flag, activation code, prior code,
//! f32 sigma.

use std::fs;
use std::io::{self, Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::config::FlowConfig;
use super::weights::ModelWeights;
use crate::error::{Error, LoadError, Result};
use crate::flows::{Activation, TensorSet};
use crate::likelihood::PriorKind;
use crate::SAMPLE_RATE;

pub const MAGIC: [u8; 4] = *b"FBWV";
pub const VERSION: u32 = 1;

pub fn to_bytes(w: &ModelWeights<f32>) -> Vec<u8> {
    let c = w.config();
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    let header = [
        VERSION,
        SAMPLE_RATE,
        c.feature_dim as u32,
        c.n_convflows as u32,
        c.window as u32,
        c.gru_window as u32,
        c.channels as u32,
        c.expansion as u32,
        c.hidden as u32,
        c.irb_bodies as u32,
        c.gruflow as u32,
        c.activation.code(),
        c.prior.code(),
    ];
    for v in header {
        out.write_u32::<LE>(v).unwrap();
    }
    out.write_f32::<LE>(c.sigma as f32).unwrap();
    w.visit("", &mut |_, shape, data| {
        out.write_u32::<LE>(shape.len() as u32).unwrap();
        for d in &shape {
            out.write_u32::<LE>(*d as u32).unwrap();
        }
        for v in data {
            out.write_f32::<LE>(*v).unwrap();
        }
    });
    out
}

fn truncated(what: &str) -> impl Fn(io::Error) -> LoadError + '_ {
    move |_| LoadError::Truncated(format!("while reading {what}"))
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelWeights<f32>> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated("magic"))?;
    if magic != MAGIC {
        return Err(LoadError::BadMagic {
            expected: MAGIC,
            found: magic,
        }
        .into());
    }
    let version = r.read_u32::<LE>().map_err(truncated("version"))?;
    if version != VERSION {
        return Err(LoadError::UnsupportedVersion {
            expected: VERSION,
            found: version,
        }
        .into());
    }
    let mut h = [0u32; 12];
    for v in &mut h {
        *v = r.read_u32::<LE>().map_err(truncated("config"))?;
    }
    let sigma = r.read_f32::<LE>().map_err(truncated("config"))?;
    if h[0] != SAMPLE_RATE {
        return Err(Error::InvalidConfig(format!("sample rate {} (expected {SAMPLE_RATE})", h[0])));
    }
    let config = FlowConfig {
        feature_dim: h[1] as usize,
        n_convflows: h[2] as usize,
        window: h[3] as usize,
        gru_window: h[4] as usize,
        channels: h[5] as usize,
        expansion: h[6] as usize,
        hidden: h[7] as usize,
        irb_bodies: h[8] as usize,
        gruflow: match h[9] {
            0 => false,
            1 => true,
            v => return Err(Error::InvalidConfig(format!("GRUFlow flag {v}"))),
        },
        activation: Activation::from_code(h[10])
            .ok_or_else(|| Error::InvalidConfig(format!("activation code {}", h[10])))?,
        prior: PriorKind::from_code(h[11])
            .ok_or_else(|| Error::InvalidConfig(format!("prior code {}", h[11])))?,
        sigma: sigma as f64,
    };
    let mut w = ModelWeights::<f32>::identity(config)?;

    let mut failure: Option<LoadError> = None;
    w.visit_mut("", &mut |name, shape, data| {
        if failure.is_some() {
            return;
        }
        let res = (|| -> Result<(), LoadError> {
            let rank = r.read_u32::<LE>().map_err(truncated(name))? as usize;
            if rank > 8 {
                return Err(LoadError::ShapeMismatch {
                    tensor: name.to_string(),
                    expected: shape.clone(),
                    found: vec![rank],
                });
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.read_u32::<LE>().map_err(truncated(name))? as usize);
            }
            if dims != shape {
                return Err(LoadError::ShapeMismatch {
                    tensor: name.to_string(),
                    expected: shape,
                    found: dims,
                });
            }
            for v in data.iter_mut() {
                *v = r.read_f32::<LE>().map_err(truncated(name))?;
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(LoadError::NonFinite(name.to_string()));
            }
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e);
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    let rest = bytes.len() - r.position() as usize;
    if rest != 0 {
        return Err(LoadError::TrailingBytes(rest).into());
    }
    w.refresh()?;
    Ok(w)
}

pub fn save_weights(w: &ModelWeights<f32>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_bytes(w))?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ModelWeights<f32>> {
    from_bytes(&fs::read(path)?)
}
