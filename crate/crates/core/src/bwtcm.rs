//! BWT + bitwise context-mixing codec.
//!
//! Each BWT output byte is coded MSB-first through a depth-8 binary context
//! tree. Three counter families are blended with fixed weights 6:6:4 (over
//! 16): an order-0 family indexed by the partial-byte context `c`, and one
//! shared 256x256 table read at the previous byte `p` and at the byte
//! before it `q`. The blend is refined by an interpolated SSE grid keyed by
//! `c` and a run flag, giving a 17-bit probability for the binary coder.
//!
//! The transformed block is cut into chunks of 2^24 bytes, each coded with
//! fresh state so that chunks encode and decode independently.

use rayon::prelude::*;

use crate::bwt::{self, BwtBlock, BwtMeta, CHUNK_SIZE};
use crate::coder::{BinDecoder, BinEncoder, PROB_MAX};
use crate::error::{Error, Result};

pub const TAU_ORDER0: u32 = 3;
pub const TAU_ORDER12: u32 = 5;
pub const TAU_SSE: u32 = 7;

/// Asymmetric shift update `U_tau`.
#[inline(always)]
pub fn ema(v: u16, bit: u32, tau: u32) -> u16 {
    if bit != 0 {
        v + ((65535 - v) >> tau)
    } else {
        v - (v >> tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub p_hat: u32,
    /// P(bit = 1) scaled by 2^17, in `[1, 2^17 - 1]`.
    pub q: u32,
    pub j: usize,
    /// Interpolation weight `p_hat mod 2^12`.
    pub lambda: u32,
}

#[derive(Clone)]
pub struct CmState {
    pub u0: [u16; 256],
    pub u12: Vec<u16>,
    pub sse: Vec<[u16; 17]>,
    pub p: u8,
    pub q: u8,
    pub run_len: u32,
    pub f: bool,
    pub c: usize,
}

impl Default for CmState {
    fn default() -> Self {
        Self::new()
    }
}

impl CmState {
    pub fn new() -> Self {
        let mut row = [0u16; 17];
        for (j, s) in row.iter_mut().enumerate() {
            *s = (j as u32 * 4096).min(65535) as u16;
        }
        CmState {
            u0: [1 << 15; 256],
            u12: vec![1 << 15; 256 * 256],
            sse: vec![row; 512],
            p: 0,
            q: 0,
            run_len: 0,
            f: false,
            c: 1,
        }
    }

    #[inline(always)]
    fn sse_row(&self) -> usize {
        2 * self.c + usize::from(self.f)
    }

    #[inline(always)]
    pub fn predict(&self) -> Prediction {
        let c = self.c;
        let a = u32::from(self.u0[c]);
        let b = u32::from(self.u12[(self.p as usize) << 8 | c]);
        let d = u32::from(self.u12[(self.q as usize) << 8 | c]);
        let p_hat = (6 * (a + b) + 4 * d) / 16;
        let j = (p_hat >> 12) as usize;
        let lambda = p_hat & 4095;
        let row = &self.sse[self.sse_row()];
        let (s0, s1) = (i32::from(row[j]), i32::from(row[j + 1]));
        let s_hat = s0 + (((s1 - s0) * lambda as i32) >> 12);
        let q = (p_hat as i32 + s_hat).clamp(1, PROB_MAX as i32) as u32;
        Prediction { p_hat, q, j, lambda }
    }

    #[inline(always)]
    pub fn update(&mut self, bit: u32, pred: &Prediction) {
        let c = self.c;
        self.u0[c] = ema(self.u0[c], bit, TAU_ORDER0);
        let ip = (self.p as usize) << 8 | c;
        self.u12[ip] = ema(self.u12[ip], bit, TAU_ORDER12);
        // p == q hits the shared entry a second time
        let iq = (self.q as usize) << 8 | c;
        self.u12[iq] = ema(self.u12[iq], bit, TAU_ORDER12);
        let r = self.sse_row();
        let row = &mut self.sse[r];
        row[pred.j] = ema(row[pred.j], bit, TAU_SSE);
        row[pred.j + 1] = ema(row[pred.j + 1], bit, TAU_SSE);

        self.c = 2 * c + bit as usize;
        if self.c >= 256 {
            let byte = (self.c - 256) as u8;
            self.run_len = if byte == self.p { self.run_len + 1 } else { 1 };
            self.f = self.run_len > 2;
            self.q = self.p;
            self.p = byte;
            self.c = 1;
        }
    }
}

pub fn encode_chunk(data: &[u8]) -> Vec<u8> {
    let mut st = CmState::new();
    let mut e = BinEncoder::new();
    for &byte in data {
        for i in (0..8).rev() {
            let bit = u32::from(byte >> i) & 1;
            let pred = st.predict();
            e.encode(bit, pred.q);
            st.update(bit, &pred);
        }
    }
    e.finish()
}

pub fn decode_chunk(payload: &[u8], n: usize) -> Result<Vec<u8>> {
    let mut st = CmState::new();
    let mut d = BinDecoder::new(payload);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..8 {
            let pred = st.predict();
            let bit = d.decode(pred.q);
            st.update(bit, &pred);
        }
        out.push(st.p);
    }
    if d.overrun() > 0 {
        return Err(Error::ChunkSizeMismatch(format!("chunk of {} bytes is truncated", payload.len())));
    }
    Ok(out)
}

/// Code `l` in independent chunks of [`CHUNK_SIZE`] bytes. Returns the
/// per-chunk compressed sizes and the concatenated chunk payloads.
pub fn encode_block(l: &[u8]) -> (Vec<u64>, Vec<u8>) {
    let chunks: Vec<Vec<u8>> = l.par_chunks(CHUNK_SIZE as usize).map(encode_chunk).collect();
    let sizes = chunks.iter().map(|c| c.len() as u64).collect();
    (sizes, chunks.concat())
}

pub fn decode_block(sizes: &[u64], payload: &[u8], n: u64) -> Result<Vec<u8>> {
    if sizes.len() as u64 != bwt::chunk_count(n) {
        return Err(Error::ChunkSizeMismatch(format!("{} chunk sizes for {n} bytes", sizes.len())));
    }
    let total = sizes.iter().try_fold(0u64, |a, &s| a.checked_add(s));
    if total != Some(payload.len() as u64) {
        return Err(Error::ChunkSizeMismatch(format!(
            "chunk sizes sum to {total:?}, payload has {} bytes",
            payload.len()
        )));
    }
    let mut jobs = Vec::with_capacity(sizes.len());
    let mut off = 0usize;
    for (i, &s) in sizes.iter().enumerate() {
        let raw = (n - i as u64 * CHUNK_SIZE).min(CHUNK_SIZE) as usize;
        jobs.push((&payload[off..off + s as usize], raw));
        off += s as usize;
    }
    let parts: Vec<Vec<u8>> = jobs.into_par_iter().map(|(p, raw)| decode_chunk(p, raw)).collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// Full codec: BWT metadata header followed by the chunk payloads.
pub fn compress(data: &[u8]) -> Result<Vec<u8>> {
    let block = bwt::bwt_forward(data)?;
    let (sizes, body) = encode_block(&block.l);
    let meta = BwtMeta::from_block(&block, sizes);
    let mut out = Vec::with_capacity(meta.bit_len() as usize / 8 + body.len());
    meta.serialize(&mut out);
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn decompress(payload: &[u8]) -> Result<Vec<u8>> {
    decompress_inner(payload, None)
}

/// Like [`decompress`], rejecting a header that disagrees with `n` before
/// any decoding work.
pub fn decompress_exact(payload: &[u8], n: u64) -> Result<Vec<u8>> {
    decompress_inner(payload, Some(n))
}

fn decompress_inner(payload: &[u8], expected: Option<u64>) -> Result<Vec<u8>> {
    let (meta, used) = BwtMeta::parse(payload)?;
    if expected.is_some_and(|n| n != meta.n) {
        return Err(Error::CorruptBlock(format!("block header says {} bytes, index says {expected:?}", meta.n)));
    }
    let l = decode_block(&meta.chunk_sizes, &payload[used..], meta.n)?;
    let block = BwtBlock {
        l,
        n: meta.n,
        sa_width: meta.sa_width,
        primary: meta.primary,
        stride: 1 << meta.stride_log2,
        aux: meta.aux,
        periodic: meta.periodic,
    };
    bwt::bwt_inverse(&block)
}
