//! Wall-clock benchmark of a full compress/decompress cycle.

use std::fmt::Write as _;
use std::time::Instant;

use crate::container::{compress_file, decompress_file_with, Config};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub input_bytes: u64,
    pub output_bytes: u64,
    pub repeats: u32,
    pub enc_ns_per_byte: f64,
    pub dec_ns_per_byte: f64,
}

impl BenchReport {
    pub fn bpb(&self) -> f64 {
        bpb(self.output_bytes, self.input_bytes)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input     {} bytes", self.input_bytes);
        let _ = writeln!(s, "output    {} bytes", self.output_bytes);
        let _ = writeln!(s, "ratio     {:.4} bits/byte", self.bpb());
        let _ = writeln!(s, "encode    {:.3} ns/byte (mean of {})", self.enc_ns_per_byte, self.repeats);
        let _ = writeln!(s, "decode    {:.3} ns/byte (mean of {})", self.dec_ns_per_byte, self.repeats);
        s
    }

    /// One `key=value` per line.
    pub fn to_kv(&self) -> String {
        format!(
            "input_bytes={}\noutput_bytes={}\nbpb={:.4}\nrepeats={}\nenc_ns_per_byte={:.3}\ndec_ns_per_byte={:.3}\n",
            self.input_bytes,
            self.output_bytes,
            self.bpb(),
            self.repeats,
            self.enc_ns_per_byte,
            self.dec_ns_per_byte
        )
    }
}

/// `8 S / N`; zero for empty input.
pub fn bpb(output_bytes: u64, input_bytes: u64) -> f64 {
    if input_bytes == 0 {
        0.0
    } else {
        8.0 * output_bytes as f64 / input_bytes as f64
    }
}

/// Compress and decompress `input` `repeats` times, checking the round trip
/// each time.
pub fn run(input: &[u8], config: &Config, repeats: u32) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeat count must be at least 1".into()));
    }
    let mut enc_ns = 0u128;
    let mut dec_ns = 0u128;
    let mut output_bytes = 0;
    for _ in 0..repeats {
        let t = Instant::now();
        let packed = compress_file(input, config)?;
        enc_ns += t.elapsed().as_nanos();
        let t = Instant::now();
        let back = decompress_file_with(&packed, config.threads)?;
        dec_ns += t.elapsed().as_nanos();
        if back != input {
            return Err(Error::CorruptPayload("benchmark round trip differs from input".into()));
        }
        output_bytes = packed.len() as u64;
    }
    let per = |ns: u128| ns as f64 / f64::from(repeats) / input.len().max(1) as f64;
    Ok(BenchReport {
        input_bytes: input.len() as u64,
        output_bytes,
        repeats,
        enc_ns_per_byte: per(enc_ns),
        dec_ns_per_byte: per(dec_ns),
    })
}
