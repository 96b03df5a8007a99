//! External general-purpose LZ backend. The container only records the
//! codec id and hands bytes through this interface.

use crate::error::{Error, Result};

pub trait LzBackend: Send + Sync {
    fn compress(&self, data: &[u8]) -> Result<Vec<u8>>;
    fn decompress(&self, data: &[u8], raw_len: usize) -> Result<Vec<u8>>;
}

/// Zstandard at a fixed level.
#[derive(Debug, Clone, Copy)]
pub struct Zstd {
    pub level: i32,
}

impl Default for Zstd {
    fn default() -> Self {
        Zstd { level: 12 }
    }
}

impl LzBackend for Zstd {
    fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        zstd::bulk::compress(data, self.level).map_err(|e| Error::Lz(e.to_string()))
    }

    fn decompress(&self, data: &[u8], raw_len: usize) -> Result<Vec<u8>> {
        let out = zstd::bulk::decompress(data, raw_len).map_err(|e| Error::Lz(e.to_string()))?;
        if out.len() != raw_len {
            return Err(Error::Lz(format!("expected {raw_len} bytes, got {}", out.len())));
        }
        Ok(out)
    }
}
