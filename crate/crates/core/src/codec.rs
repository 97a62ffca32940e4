//! Versioned binary records: a 4-byte magic, a little-endian `u32` format
//! version, then the bincode payload. Floats are stored as raw IEEE-754
//! bits, so records round-trip exactly.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn encode<T: Serialize>(magic: &[u8; 4], value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bincode::serialize_into(&mut out, value).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(out)
}

pub fn decode<T: DeserializeOwned>(magic: &[u8; 4], bytes: &[u8]) -> Result<T> {
    if bytes.len() < 8 || &bytes[..4] != magic {
        return Err(Error::Serialization(format!(
            "missing `{}` header",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported format version {version}"
        )));
    }
    bincode::deserialize(&bytes[8..]).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write<T: Serialize>(path: &Path, magic: &[u8; 4], value: &T) -> Result<()> {
    let bytes = encode(magic, value)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read<T: DeserializeOwned>(path: &Path, magic: &[u8; 4]) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(magic, &bytes)
}
