//! Markov experts: count tables over base-4 contexts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertParams {
    /// Context order in symbols.
    pub k: u32,
    /// Count scaling exponent: `f = 1 + (c << alpha)`.
    pub alpha: u32,
    /// Non-winners also update counts.
    pub rho: bool,
    /// Reverse-complement count coupling.
    pub rho_rc: bool,
    pub c_max: u32,
    pub cell_bits: u32,
}

const fn ep(k: u32, alpha: u32, rho: bool, rho_rc: bool, c_max: u32, cell_bits: u32) -> ExpertParams {
    ExpertParams { k, alpha, rho, rho_rc, c_max, cell_bits }
}

pub const FULL: [ExpertParams; 5] = [
    ep(3, 0, false, false, 65535, 16),
    ep(7, 0, false, false, 1023, 16),
    ep(11, 2, false, true, 255, 8),
    ep(15, 6, true, true, 15, 4),
    ep(13, 9, true, false, 0, 8),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    Full,
    Lite,
}

impl Profile {
    pub fn id(self) -> u8 {
        match self {
            Profile::Full => 0,
            Profile::Lite => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Profile> {
        match id {
            0 => Ok(Profile::Full),
            1 => Ok(Profile::Lite),
            _ => Err(Error::CorruptPayload(format!("unknown expert profile {id}"))),
        }
    }

    /// Lite keeps the orders 3, 7 and 11 experts.
    pub fn params(self) -> &'static [ExpertParams] {
        match self {
            Profile::Full => &FULL,
            Profile::Lite => &FULL[..3],
        }
    }

    pub fn table_bytes(self) -> u64 {
        self.params().iter().map(table_bytes).sum()
    }
}

pub fn table_bytes(p: &ExpertParams) -> u64 {
    (1u64 << (2 * p.k)) * 4 * u64::from(p.cell_bits) / 8
}

#[inline(always)]
pub fn advance_context(h: u64, k: u32, x: u8) -> u64 {
    ((h & ((1 << (2 * (k - 1))) - 1)) << 2) + u64::from(x)
}

/// Reverse-strand register: the complement of `x` enters the high digit.
#[inline(always)]
pub fn advance_reverse(rh: u64, k: u32, x: u8) -> u64 {
    (rh >> 2) + (u64::from(3 - x) << (2 * (k - 1)))
}

#[derive(Clone)]
enum Cells {
    U16(Vec<u16>),
    U8(Vec<u8>),
    U4(Vec<u8>),
}

fn zeroed<T: Clone + Default>(n: usize) -> Result<Vec<T>> {
    // probe first so an impossible table is an error rather than an abort
    let mut probe: Vec<T> = Vec::new();
    probe
        .try_reserve_exact(n)
        .map_err(|_| Error::InvalidConfig(format!("cannot allocate a table of {n} cells")))?;
    drop(probe);
    Ok(vec![T::default(); n])
}

impl Cells {
    fn new(bits: u32, cells: usize) -> Result<Cells> {
        Ok(match bits {
            16 => Cells::U16(zeroed(cells)?),
            8 => Cells::U8(zeroed(cells)?),
            4 => Cells::U4(zeroed(cells.div_ceil(2))?),
            b => return Err(Error::InvalidConfig(format!("unsupported cell width {b}"))),
        })
    }

    #[inline(always)]
    fn get4(&self, base: usize) -> [u32; 4] {
        match self {
            Cells::U16(v) => {
                let s = &v[base..base + 4];
                [s[0].into(), s[1].into(), s[2].into(), s[3].into()]
            }
            Cells::U8(v) => {
                let s = &v[base..base + 4];
                [s[0].into(), s[1].into(), s[2].into(), s[3].into()]
            }
            Cells::U4(v) => {
                let s = &v[base / 2..base / 2 + 2];
                [(s[0] >> 4).into(), (s[0] & 15).into(), (s[1] >> 4).into(), (s[1] & 15).into()]
            }
        }
    }

    #[inline(always)]
    fn set4(&mut self, base: usize, c: [u32; 4]) {
        match self {
            Cells::U16(v) => {
                for (d, s) in v[base..base + 4].iter_mut().zip(c) {
                    *d = s as u16;
                }
            }
            Cells::U8(v) => {
                for (d, s) in v[base..base + 4].iter_mut().zip(c) {
                    *d = s as u8;
                }
            }
            Cells::U4(v) => {
                v[base / 2] = ((c[0] << 4) | c[1]) as u8;
                v[base / 2 + 1] = ((c[2] << 4) | c[3]) as u8;
            }
        }
    }

    fn byte_len(&self) -> usize {
        match self {
            Cells::U16(v) => v.len() * 2,
            Cells::U8(v) | Cells::U4(v) => v.len(),
        }
    }

    fn digest(&self) -> u64 {
        match self {
            Cells::U16(v) => {
                let mut h = xxhash_rust::xxh3::Xxh3::new();
                let mut buf = Vec::with_capacity(8192);
                for ch in v.chunks(4096) {
                    buf.clear();
                    buf.extend(ch.iter().flat_map(|x| x.to_le_bytes()));
                    h.update(&buf);
                }
                h.digest()
            }
            Cells::U8(v) | Cells::U4(v) => xxhash_rust::xxh3::xxh3_64(v),
        }
    }
}

#[derive(Clone)]
pub struct Expert {
    pub params: ExpertParams,
    cells: Cells,
    pub h: u64,
    pub rh: u64,
}

impl Expert {
    pub fn new(params: ExpertParams) -> Result<Expert> {
        if params.c_max >= 1 << params.cell_bits {
            return Err(Error::InvalidConfig("c_max does not fit the cell width".into()));
        }
        let cells = Cells::new(params.cell_bits, 4usize << (2 * params.k))?;
        Ok(Expert { params, cells, h: 0, rh: 0 })
    }

    #[inline(always)]
    pub fn counts(&self, h: u64) -> [u32; 4] {
        self.cells.get4(4 * h as usize)
    }

    #[inline(always)]
    pub fn freqs(&self, h: u64) -> [u32; 4] {
        self.counts(h).map(|c| 1 + (c << self.params.alpha))
    }

    pub fn set_counts(&mut self, h: u64, c: [u32; 4]) {
        self.cells.set4(4 * h as usize, c);
    }

    /// Count one occurrence of `s` in context `h`, applying saturation:
    /// `c_max == 0` clears the context first; reaching `c_max` halves it.
    #[inline(always)]
    pub fn observe(&mut self, h: u64, s: u8) {
        let mut c = self.counts(h);
        let cm = self.params.c_max;
        if cm == 0 {
            c = [0; 4];
        } else if c[s as usize] >= cm {
            c = c.map(|v| v >> 1);
        }
        c[s as usize] += 1;
        self.set_counts(h, c);
    }

    #[inline(always)]
    pub fn advance(&mut self, x: u8) {
        let k = self.params.k;
        self.h = advance_context(self.h, k, x);
        if self.params.rho_rc {
            self.rh = advance_reverse(self.rh, k, x);
        }
    }

    pub fn digest(&self) -> u64 {
        self.cells.digest()
    }

    pub fn table_bytes(&self) -> usize {
        self.cells.byte_len()
    }
}
