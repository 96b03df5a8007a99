//! 2-bit / 4-bit nucleotide packing with an exact EXTRA side channel.
//!
//! Codes are packed MSB-first. Bytes outside the mode's alphabet get the
//! placeholder code 0 in the packed stream and are recorded in EXTRA as
//! `(varint position delta, raw byte)` pairs; the first delta is relative to
//! position 0, later ones to the previous exception.

use crate::error::{Error, Result};
use crate::varint::{self, Cursor};

/// 4-bit code order; 2-bit mode uses the first four entries.
pub const IUPAC: [u8; 16] = *b"ACGTNRYSWKMBDHVU";

const INVALID: u8 = 0xff;

const fn code_table(width: u32) -> [u8; 256] {
    let mut t = [INVALID; 256];
    let n = if width == 2 { 4 } else { 16 };
    let mut i = 0;
    while i < n {
        t[IUPAC[i] as usize] = i as u8;
        i += 1;
    }
    t
}

static CODES2: [u8; 256] = code_table(2);
static CODES4: [u8; 256] = code_table(4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Width {
    Two,
    Four,
}

impl Width {
    pub fn bits(self) -> u32 {
        match self {
            Width::Two => 2,
            Width::Four => 4,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Width> {
        match bits {
            2 => Some(Width::Two),
            4 => Some(Width::Four),
            _ => None,
        }
    }

    fn table(self) -> &'static [u8; 256] {
        match self {
            Width::Two => &CODES2,
            Width::Four => &CODES4,
        }
    }

    pub fn alphabet(self) -> &'static [u8] {
        &IUPAC[..1 << self.bits()]
    }
}

/// Code of `b` under `width`, if it is in the alphabet.
pub fn code_of(width: Width, b: u8) -> Option<u8> {
    let c = width.table()[b as usize];
    (c != INVALID).then_some(c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedNuc {
    pub width: Width,
    pub payload: Vec<u8>,
    pub n_symbols: u64,
    pub extra: Vec<u8>,
}

/// One code per byte plus the EXTRA pairs; the input to the statistical
/// codecs, which see codes rather than packed bytes.
pub fn to_codes(nuc: &[u8], width: Width) -> (Vec<u8>, Vec<u8>) {
    let table = width.table();
    let mut codes = Vec::with_capacity(nuc.len());
    let mut extra = Vec::new();
    let mut last = 0u64;
    for (i, &b) in nuc.iter().enumerate() {
        let c = table[b as usize];
        if c == INVALID {
            varint::put_u64(&mut extra, i as u64 - last);
            extra.push(b);
            last = i as u64;
            codes.push(0);
        } else {
            codes.push(c);
        }
    }
    (codes, extra)
}

/// Inverse of [`to_codes`].
pub fn from_codes(codes: &[u8], width: Width, extra: &[u8]) -> Result<Vec<u8>> {
    let alphabet = width.alphabet();
    let mut out = Vec::with_capacity(codes.len());
    for &c in codes {
        let sym = alphabet
            .get(c as usize)
            .ok_or_else(|| Error::CorruptPayload(format!("code {c} outside {}-bit alphabet", width.bits())))?;
        out.push(*sym);
    }
    apply_extra(&mut out, extra)?;
    Ok(out)
}

fn apply_extra(out: &mut [u8], extra: &[u8]) -> Result<()> {
    let mut c = Cursor::new(extra);
    let mut pos = 0u64;
    let mut first = true;
    while !c.is_empty() {
        let delta = c.u64().map_err(|_| Error::CorruptExtra("truncated position".into()))?;
        if !first && delta == 0 {
            return Err(Error::CorruptExtra("positions must strictly increase".into()));
        }
        first = false;
        pos = pos
            .checked_add(delta)
            .ok_or_else(|| Error::CorruptExtra("position overflow".into()))?;
        let b = c.u8().map_err(|_| Error::CorruptExtra("missing raw byte".into()))?;
        let len = out.len();
        let slot = out
            .get_mut(pos as usize)
            .ok_or_else(|| Error::CorruptExtra(format!("position {pos} beyond {len} symbols")))?;
        *slot = b;
    }
    Ok(())
}

pub fn pack_codes(codes: &[u8], width: Width) -> Vec<u8> {
    match width {
        Width::Two => codes
            .chunks(4)
            .map(|ch| {
                let mut byte = 0u8;
                for (j, &c) in ch.iter().enumerate() {
                    byte |= c << (6 - 2 * j);
                }
                byte
            })
            .collect(),
        Width::Four => codes
            .chunks(2)
            .map(|ch| (ch[0] << 4) | ch.get(1).copied().unwrap_or(0))
            .collect(),
    }
}

pub fn unpack_codes(payload: &[u8], width: Width, n_symbols: usize) -> Result<Vec<u8>> {
    let per_byte = 8 / width.bits() as usize;
    if payload.len() != n_symbols.div_ceil(per_byte) {
        return Err(Error::CorruptPayload("packed payload length does not match symbol count".into()));
    }
    let mut codes = Vec::with_capacity(n_symbols);
    let mask = (1u8 << width.bits()) - 1;
    for &byte in payload {
        for j in 0..per_byte {
            let shift = 8 - width.bits() as usize * (j + 1);
            codes.push((byte >> shift) & mask);
        }
    }
    codes.truncate(n_symbols);
    Ok(codes)
}

pub fn pack(nuc: &[u8], width: Width) -> PackedNuc {
    let (codes, extra) = to_codes(nuc, width);
    PackedNuc { width, payload: pack_codes(&codes, width), n_symbols: nuc.len() as u64, extra }
}

pub fn unpack(p: &PackedNuc) -> Result<Vec<u8>> {
    let n = usize::try_from(p.n_symbols).map_err(|_| Error::CorruptPayload("symbol count overflow".into()))?;
    let codes = unpack_codes(&p.payload, p.width, n)?;
    from_codes(&codes, p.width, &p.extra)
}

/// Packing decision: width `k` is used while the exception fraction
/// `e/n < (8 - k) / 40`, trying 2 bits before 4.
pub fn choose_width(nuc: &[u8]) -> Option<Width> {
    let n = nuc.len() as u64;
    if n == 0 {
        return Some(Width::Two);
    }
    let (mut e2, mut e4) = (0u64, 0u64);
    for &b in nuc {
        e2 += u64::from(CODES2[b as usize] == INVALID);
        e4 += u64::from(CODES4[b as usize] == INVALID);
    }
    // e/n < (8-k)/40  <=>  40 e < (8-k) n
    if 40 * e2 < 6 * n {
        Some(Width::Two)
    } else if 40 * e4 < 4 * n {
        Some(Width::Four)
    } else {
        None
    }
}
