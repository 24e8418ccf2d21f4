//! Hashed binary container shared by checkpoints and feature sets.
//!
//! Layout (little-endian): 8-byte magic, version `major.minor.patch` as
//! three `u16`, `u32` header length, JSON header, `u64` value count, `f64`
//! payload, then the SHA-256 of every preceding byte.

use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FormatVersion {
    pub major: u16,
    pub minor: u16,
    pub patch: u16,
}

impl fmt::Display for FormatVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

pub const FORMAT_VERSION: FormatVersion = FormatVersion { major: 1, minor: 0, patch: 0 };

const HASH_LEN: usize = 32;

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of a file's bytes.
pub fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

pub(crate) fn encode_with_version(magic: &[u8; 8], version: FormatVersion, header: &[u8], payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 10 + header.len() + 8 + payload.len() * 8 + HASH_LEN);
    out.extend_from_slice(magic);
    for v in [version.major, version.minor, version.patch] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub(crate) fn encode(magic: &[u8; 8], header: &[u8], payload: &[f64]) -> Vec<u8> {
    encode_with_version(magic, FORMAT_VERSION, header, payload)
}

pub(crate) struct Decoded<'a> {
    pub header: &'a [u8],
    pub payload: Vec<f64>,
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .buf
            .get(self.at..self.at.checked_add(n).ok_or_else(|| Error::Format("length overflow".into()))?)
            .ok_or_else(|| Error::Format("container truncated".into()))?;
        self.at += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
}

pub(crate) fn decode<'a>(bytes: &'a [u8], magic: &[u8; 8], what: &str) -> Result<Decoded<'a>> {
    if bytes.len() < 8 + 6 + 4 + 8 + HASH_LEN {
        return Err(Error::Format(format!("{what}: file too short")));
    }
    if &bytes[..8] != magic {
        return Err(Error::Format(format!("{what}: bad magic")));
    }
    let (body, stored) = bytes.split_at(bytes.len() - HASH_LEN);
    let computed = sha256_hex(body);
    let expected = hex::encode(stored);
    if computed != expected {
        return Err(Error::HashMismatch { expected, computed });
    }
    let mut c = Cursor { buf: body, at: 8 };
    let version = FormatVersion { major: c.u16()?, minor: c.u16()?, patch: c.u16()? };
    if version.major != FORMAT_VERSION.major {
        return Err(Error::Version { found: version.to_string(), supported: FORMAT_VERSION.to_string() });
    }
    if version > FORMAT_VERSION {
        log::warn!("{what}: written by format {version}, newer than {FORMAT_VERSION}; reading anyway");
    }
    let hlen = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes")) as usize;
    let header = c.take(hlen)?;
    let count = u64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes")) as usize;
    let raw = c.take(count.checked_mul(8).ok_or_else(|| Error::Format("length overflow".into()))?)?;
    if c.at != body.len() {
        return Err(Error::Format(format!("{what}: {} trailing bytes", body.len() - c.at)));
    }
    let payload = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Ok(Decoded { header, payload })
}
