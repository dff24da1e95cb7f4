//! Parameter files: a little-endian binary blob plus a JSON shape manifest.
//!
//! Binary layout: magic `FPNN`, format version (u32), tensor count (u32),
//! then every tensor's values as f64 in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::Arch;
use super::params::NetworkParameters;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FPNN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub arch: Arch,
    pub tensors: Vec<TensorEntry>,
}

impl Manifest {
    pub fn of(params: &NetworkParameters) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            arch: params.arch,
            tensors: params
                .tensor_specs()
                .into_iter()
                .map(|(name, shape, trainable)| TensorEntry {
                    name: name.to_string(),
                    shape,
                    trainable,
                })
                .collect(),
        }
    }
}

pub fn encode(params: &NetworkParameters) -> Vec<u8> {
    let tensors = params.tensors();
    let mut out = Vec::with_capacity(12 + 8 * tensors.iter().map(|t| t.len()).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], manifest: &Manifest) -> Result<NetworkParameters> {
    let bad = |m: &str| Error::invalid(format!("parameter file: {m}"));
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION || manifest.format_version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mut params = NetworkParameters::zeros(manifest.arch)?;
    let expected = Manifest::of(&params);
    if expected.tensors != manifest.tensors || count != manifest.tensors.len() {
        return Err(Error::Shape {
            expected: format!("{:?}", expected.tensors.iter().map(|t| &t.shape).collect::<Vec<_>>()),
            actual: format!("{:?}", manifest.tensors.iter().map(|t| &t.shape).collect::<Vec<_>>()),
        });
    }
    let total: usize = params.tensors().iter().map(|t| t.len()).sum();
    if bytes.len() != 12 + 8 * total {
        return Err(bad(&format!("expected {} bytes, found {}", 12 + 8 * total, bytes.len())));
    }
    let mut off = 12;
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    params.validate()?;
    Ok(params)
}

/// Writes `<stem>.bin` and `<stem>.json` next to each other.
pub fn save(params: &NetworkParameters, bin: &Path, manifest: &Path) -> Result<()> {
    fs::write(bin, encode(params)).map_err(|e| Error::io(bin, e))?;
    let m = serde_json::to_string_pretty(&Manifest::of(params))?;
    fs::write(manifest, m).map_err(|e| Error::io(manifest, e))?;
    Ok(())
}

pub fn load(bin: &Path, manifest: &Path) -> Result<NetworkParameters> {
    let bytes = fs::read(bin).map_err(|e| Error::io(bin, e))?;
    let m: Manifest = serde_json::from_str(&fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?)?;
    decode(&bytes, &m)
}
