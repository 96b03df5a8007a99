//! Order-1 adaptive coder for quality strings.
//!
//! Payload: `[u8 mode][varint raw length][body]`. Mode 1 range-codes each
//! byte with a 256-entry table selected by the previous byte (increment 32,
//! halving above 2^16 - 32). Mode 0 stores the bytes when coding would not
//! shrink them.

use super::model::FreqModel;
use super::range::{RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::varint::{self, Cursor};

const INC: u32 = 32;
const LIMIT: u32 = (1 << 16) - 32;
const STORED: u8 = 0;
const CODED: u8 = 1;

fn tables() -> Vec<FreqModel> {
    vec![FreqModel::new(256, INC, LIMIT); 256]
}

pub fn encode(q: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(q.len() / 2 + 12);
    if q.is_empty() {
        out.push(STORED);
        varint::put_u64(&mut out, 0);
        return out;
    }
    let mut models = tables();
    let mut e = RangeEncoder::new();
    let mut prev = 0usize;
    for &b in q {
        let m = &mut models[prev];
        m.encode(&mut e, b as usize);
        m.update(b as usize);
        prev = b as usize;
    }
    let body = e.finish();
    if body.len() < q.len() {
        out.push(CODED);
        varint::put_u64(&mut out, q.len() as u64);
        out.extend_from_slice(&body);
    } else {
        out.push(STORED);
        varint::put_u64(&mut out, q.len() as u64);
        out.extend_from_slice(q);
    }
    out
}

pub fn decode(payload: &[u8]) -> Result<Vec<u8>> {
    decode_inner(payload, None)
}

/// Decode, requiring exactly `n` output bytes.
pub fn decode_exact(payload: &[u8], n: usize) -> Result<Vec<u8>> {
    decode_inner(payload, Some(n))
}

fn decode_inner(payload: &[u8], expected: Option<usize>) -> Result<Vec<u8>> {
    let mut c = Cursor::new(payload);
    let mode = c.u8()?;
    let n = c.usize()?;
    if expected.is_some_and(|e| e != n) {
        return Err(Error::CorruptPayload(format!("quality payload holds {n} bytes")));
    }
    match mode {
        STORED => {
            let body = c.rest();
            if body.len() != n {
                return Err(Error::CorruptPayload("stored quality length mismatch".into()));
            }
            Ok(body.to_vec())
        }
        CODED => {
            let body = c.rest();
            let mut models = tables();
            let mut d = RangeDecoder::new(body);
            let mut out = Vec::with_capacity(n.min(1 << 24));
            let mut prev = 0usize;
            for _ in 0..n {
                let m = &mut models[prev];
                let s = m.decode(&mut d);
                m.update(s);
                out.push(s as u8);
                prev = s;
                if d.overrun() {
                    return Err(Error::CorruptPayload("quality stream truncated".into()));
                }
            }
            Ok(out)
        }
        m => Err(Error::CorruptPayload(format!("unknown quality mode {m}"))),
    }
}
