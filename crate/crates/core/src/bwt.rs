//! Burrows-Wheeler transform without sentinel, with a fixed 256-slot
//! auxiliary anchor table for blocks of 32 KiB and more.
//!
//! Rows are the sorted rotations of the block; equal rotations (periodic
//! blocks) are ordered by rotation index. `L[i]` is the last byte of row `i`
//! and the primary index is the row holding rotation 0. The rotation order is
//! obtained from a suffix array of the block's Lyndon root: rotating the
//! block to its least rotation makes suffix order and rotation order agree.
//!
//! Anchor `aux[j]` is the row of rotation `j * stride`, so inversion can run
//! one independent LF walk of at most `stride` steps per segment.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sais::{suffix_array, SaIndex, Symbol};

pub const AUX_MIN_BLOCK: u64 = 32 * 1024;
pub const AUX_SLOTS: usize = 256;
/// Size of the independently coded chunks of a transformed block.
pub const CHUNK_SIZE: u64 = 1 << 24;
pub const MAX_BLOCK: u64 = 1 << 40;

const META_VERSION: u8 = 1;
const FLAG_W64: u8 = 1;
const FLAG_AUX: u8 = 2;
const FLAG_PERIODIC: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SaWidth {
    W32,
    W64,
}

impl SaWidth {
    pub fn bits(self) -> u32 {
        match self {
            SaWidth::W32 => 32,
            SaWidth::W64 => 64,
        }
    }

    /// 32-bit suffix arrays are used below 2^31 bytes.
    pub fn for_len(n: u64) -> SaWidth {
        if n < 1 << 31 {
            SaWidth::W32
        } else {
            SaWidth::W64
        }
    }
}

/// Anchor stride `2^floor(log2 max(1, floor(n/8)))`.
pub fn stride(n: u64) -> u64 {
    let m = (n / 8).max(1);
    1 << (63 - m.leading_zeros())
}

pub fn stride_log2(n: u64) -> u32 {
    stride(n).trailing_zeros()
}

pub fn chunk_count(n: u64) -> u64 {
    n.div_ceil(CHUNK_SIZE)
}

/// Metadata bits of an anchor-bearing block: `8 + 16 + 256w + 64 + 64 ceil(n/C)`.
pub fn meta_bits(n: u64, w: u32) -> u64 {
    8 + 16 + 256 * u64::from(w) + 64 + 64 * chunk_count(n)
}

/// Metadata bits of a small block, which stores the primary index instead
/// of the anchor table: `8 + 16 + w + 64 + 64 ceil(n/C)`.
pub fn meta_bits_small(n: u64, w: u32) -> u64 {
    8 + 16 + u64::from(w) + 64 + 64 * chunk_count(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwtBlock {
    pub l: Vec<u8>,
    pub n: u64,
    pub sa_width: SaWidth,
    pub primary: u64,
    /// Present iff `n >= 32 KiB`; always `AUX_SLOTS` long, unused slots zero.
    pub aux: Option<Vec<u64>>,
    pub stride: u64,
    /// The block is a proper power of a shorter string.
    pub periodic: bool,
}

impl BwtBlock {
    pub fn anchors_used(&self) -> usize {
        self.n.div_ceil(self.stride) as usize
    }
}

/// Index of the lexicographically least rotation.
fn least_rotation(s: &[u8]) -> usize {
    let n = s.len();
    let at = |i: usize| s[if i >= n { i - n } else { i }];
    let (mut i, mut ans) = (0usize, 0usize);
    while i < n {
        ans = i;
        let (mut j, mut k) = (i + 1, i);
        while j < 2 * n && at(k) <= at(j) {
            if at(k) < at(j) {
                k = i;
            } else {
                k += 1;
            }
            j += 1;
        }
        while i <= k {
            i += j - k;
        }
    }
    ans
}

/// Length of the primitive root of a least rotation `w`.
fn primitive_root_len(w: &[u8]) -> usize {
    let n = w.len();
    let (mut j, mut k) = (1usize, 0usize);
    while j < n && w[k] <= w[j] {
        if w[k] < w[j] {
            k = 0;
        } else {
            k += 1;
        }
        j += 1;
    }
    let p = j - k;
    if j == n && n.is_multiple_of(p) && w[..n - p] == w[p..] {
        p
    } else {
        n
    }
}

pub fn bwt_forward(block: &[u8]) -> Result<BwtBlock> {
    bwt_forward_with(block, SaWidth::for_len(block.len() as u64))
}

/// Forward transform with an explicit suffix-array width.
pub fn bwt_forward_with(block: &[u8], width: SaWidth) -> Result<BwtBlock> {
    let n = block.len() as u64;
    if n > MAX_BLOCK || (width == SaWidth::W32 && n >= 1 << 31) {
        return Err(Error::BlockTooLarge(n));
    }
    if n == 0 {
        return Ok(BwtBlock { l: Vec::new(), n: 0, sa_width: width, primary: 0, aux: None, stride: 1, periodic: false });
    }
    let with_aux = n >= AUX_MIN_BLOCK;
    let (l, primary, aux, periodic) = match width {
        SaWidth::W32 => forward_impl::<u32>(block, with_aux),
        SaWidth::W64 => forward_impl::<u64>(block, with_aux),
    };
    Ok(BwtBlock { l, n, sa_width: width, primary, aux, stride: stride(n), periodic })
}

fn forward_impl<I: SaIndex + Symbol>(t: &[u8], with_aux: bool) -> (Vec<u8>, u64, Option<Vec<u64>>, bool) {
    let n = t.len();
    let shift = least_rotation(t);
    let rotated: Vec<u8> = t[shift..].iter().chain(&t[..shift]).copied().collect();
    let p = primitive_root_len(&rotated);
    let reps = n / p;
    let sa: Vec<I> = suffix_array(&rotated[..p]);
    drop(rotated);

    let r = stride(n as u64) as usize;
    let mut l = vec![0u8; n];
    let mut aux = with_aux.then(|| vec![0u64; AUX_SLOTS]);
    let mut primary = 0u64;
    let mut row = 0usize;
    for v in sa {
        let a = (shift + v.to_usize()) % p;
        for k in 0..reps {
            let idx = a + k * p;
            l[row] = t[if idx == 0 { n - 1 } else { idx - 1 }];
            if idx == 0 {
                primary = row as u64;
            }
            if let Some(aux) = aux.as_mut() {
                if idx.is_multiple_of(r) {
                    aux[idx / r] = row as u64;
                }
            }
            row += 1;
        }
    }
    (l, primary, aux, reps > 1)
}

fn lf_array<I: SaIndex>(l: &[u8]) -> Vec<I> {
    let mut count = [0usize; 256];
    for &b in l {
        count[b as usize] += 1;
    }
    let mut next = [0usize; 256];
    let mut sum = 0;
    for c in 0..256 {
        next[c] = sum;
        sum += count[c];
    }
    l.iter()
        .map(|&b| {
            let v = next[b as usize];
            next[b as usize] += 1;
            I::from_usize(v)
        })
        .collect()
}

fn check_shape(b: &BwtBlock) -> Result<()> {
    if b.l.len() as u64 != b.n {
        return Err(Error::CorruptBlock(format!("L has {} bytes, header says {}", b.l.len(), b.n)));
    }
    if b.n > 0 && b.primary >= b.n {
        return Err(Error::CorruptBlock(format!("primary index {} out of range", b.primary)));
    }
    Ok(())
}

/// Invert using only the primary index (one LF walk of `n` steps).
pub fn bwt_inverse_primary(b: &BwtBlock) -> Result<Vec<u8>> {
    check_shape(b)?;
    if b.n == 0 {
        return Ok(Vec::new());
    }
    match b.sa_width {
        SaWidth::W32 => Ok(inverse_primary_impl::<u32>(&b.l, b.primary as usize)),
        SaWidth::W64 => Ok(inverse_primary_impl::<u64>(&b.l, b.primary as usize)),
    }
}

fn inverse_primary_impl<I: SaIndex>(l: &[u8], primary: usize) -> Vec<u8> {
    let lf = lf_array::<I>(l);
    let mut out = vec![0u8; l.len()];
    let mut i = primary;
    for slot in out.iter_mut().rev() {
        *slot = l[i];
        i = lf[i].to_usize();
    }
    out
}

/// Invert the block. With an anchor table, each stride segment is recovered
/// by its own walk, in parallel.
pub fn bwt_inverse(b: &BwtBlock) -> Result<Vec<u8>> {
    let Some(aux) = &b.aux else {
        return bwt_inverse_primary(b);
    };
    check_shape(b)?;
    if aux.len() != AUX_SLOTS {
        return Err(Error::CorruptBlock("anchor table must have 256 slots".into()));
    }
    if b.stride == 0 || !b.stride.is_power_of_two() {
        return Err(Error::CorruptBlock(format!("bad stride {}", b.stride)));
    }
    let used = b.anchors_used();
    if used > AUX_SLOTS {
        return Err(Error::CorruptBlock(format!("{used} anchors needed, table holds {AUX_SLOTS}")));
    }
    if aux[..used].iter().any(|&a| a >= b.n) || aux[used..].iter().any(|&a| a != 0) {
        return Err(Error::CorruptBlock("anchor row out of range".into()));
    }
    if aux[0] != b.primary {
        return Err(Error::CorruptBlock("anchor 0 disagrees with the primary index".into()));
    }
    match b.sa_width {
        SaWidth::W32 => inverse_aux_impl::<u32>(b, aux),
        SaWidth::W64 => inverse_aux_impl::<u64>(b, aux),
    }
}

fn inverse_aux_impl<I: SaIndex>(b: &BwtBlock, aux: &[u64]) -> Result<Vec<u8>> {
    let l = &b.l;
    let lf = lf_array::<I>(l);
    let r = b.stride as usize;
    let used = b.anchors_used();
    let mut out = vec![0u8; l.len()];
    let check_end = !b.periodic;
    out.par_chunks_mut(r).enumerate().try_for_each(|(j, seg)| {
        let mut i = if j + 1 < used { aux[j + 1] } else { aux[0] } as usize;
        for slot in seg.iter_mut().rev() {
            *slot = l[i];
            i = lf[i].to_usize();
        }
        // for a primitive block the walk lands exactly on this segment's anchor
        if check_end && i as u64 != aux[j] {
            return Err(Error::CorruptBlock(format!("segment {j} walk does not reach its anchor")));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Serialized header of a transformed block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwtMeta {
    pub n: u64,
    pub sa_width: SaWidth,
    pub stride_log2: u16,
    pub periodic: bool,
    pub primary: u64,
    pub aux: Option<Vec<u64>>,
    pub chunk_sizes: Vec<u64>,
}

impl BwtMeta {
    pub fn from_block(b: &BwtBlock, chunk_sizes: Vec<u64>) -> Self {
        BwtMeta {
            n: b.n,
            sa_width: b.sa_width,
            stride_log2: b.stride.trailing_zeros() as u16,
            periodic: b.periodic,
            primary: b.primary,
            aux: b.aux.clone(),
            chunk_sizes,
        }
    }

    pub fn bit_len(&self) -> u64 {
        let w = self.sa_width.bits();
        if self.aux.is_some() {
            meta_bits(self.n, w)
        } else {
            meta_bits_small(self.n, w)
        }
    }

    /// MSB-first (big-endian) field layout:
    /// flags:8 | stride_log2:16 | n:64 | (anchors 256 x w | primary:w) | chunk sizes ceil(n/C) x 64.
    pub fn serialize(&self, out: &mut Vec<u8>) {
        let mut flags = META_VERSION << 4;
        if self.sa_width == SaWidth::W64 {
            flags |= FLAG_W64;
        }
        if self.aux.is_some() {
            flags |= FLAG_AUX;
        }
        if self.periodic {
            flags |= FLAG_PERIODIC;
        }
        out.push(flags);
        out.extend_from_slice(&self.stride_log2.to_be_bytes());
        out.extend_from_slice(&self.n.to_be_bytes());
        let mut word = |v: u64| match self.sa_width {
            SaWidth::W32 => out.extend_from_slice(&(v as u32).to_be_bytes()),
            SaWidth::W64 => out.extend_from_slice(&v.to_be_bytes()),
        };
        match &self.aux {
            Some(aux) => aux.iter().for_each(|&a| word(a)),
            None => word(self.primary),
        }
        for &s in &self.chunk_sizes {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }

    /// Parse a header, returning it and the number of bytes consumed.
    pub fn parse(buf: &[u8]) -> Result<(BwtMeta, usize)> {
        let short = || Error::CorruptBlock("truncated block header".into());
        let take = |pos: &mut usize, k: usize| -> Result<u64> {
            let s = buf.get(*pos..*pos + k).ok_or_else(short)?;
            *pos += k;
            Ok(s.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
        };
        let mut pos = 0usize;
        let flags = take(&mut pos, 1)? as u8;
        if flags >> 4 != META_VERSION {
            return Err(Error::CorruptBlock(format!("unsupported block header version {}", flags >> 4)));
        }
        let sa_width = if flags & FLAG_W64 != 0 { SaWidth::W64 } else { SaWidth::W32 };
        let stride_log2 = take(&mut pos, 2)? as u16;
        let n = take(&mut pos, 8)?;
        if n > MAX_BLOCK {
            return Err(Error::BlockTooLarge(n));
        }
        if u32::from(stride_log2) != stride_log2_checked(n) {
            return Err(Error::CorruptBlock("stride does not match block length".into()));
        }
        let wb = (sa_width.bits() / 8) as usize;
        let (aux, primary) = if flags & FLAG_AUX != 0 {
            let mut aux = Vec::with_capacity(AUX_SLOTS);
            for _ in 0..AUX_SLOTS {
                aux.push(take(&mut pos, wb)?);
            }
            let p = aux[0];
            (Some(aux), p)
        } else {
            (None, take(&mut pos, wb)?)
        };
        let chunks = chunk_count(n) as usize;
        let mut chunk_sizes = Vec::with_capacity(chunks);
        for _ in 0..chunks {
            chunk_sizes.push(take(&mut pos, 8)?);
        }
        let meta = BwtMeta {
            n,
            sa_width,
            stride_log2,
            periodic: flags & FLAG_PERIODIC != 0,
            primary,
            aux,
            chunk_sizes,
        };
        Ok((meta, pos))
    }
}

fn stride_log2_checked(n: u64) -> u32 {
    stride_log2(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Naive oracle: sort all rotations (ties by rotation index), take the
    /// last column and the row of rotation 0.
    fn rotation_oracle(t: &[u8]) -> (Vec<u8>, u64) {
        let n = t.len();
        let mut rows: Vec<usize> = (0..n).collect();
        rows.sort_by(|&a, &b| {
            let ra = t[a..].iter().chain(&t[..a]);
            let rb = t[b..].iter().chain(&t[..b]);
            ra.cmp(rb).then(a.cmp(&b))
        });
        let l = rows.iter().map(|&i| t[(i + n - 1) % n]).collect();
        let p = rows.iter().position(|&i| i == 0).unwrap() as u64;
        (l, p)
    }

    #[test]
    fn banana() {
        let b = bwt_forward(b"banana").unwrap();
        assert_eq!(b.l, b"nnbaaa");
        assert_eq!(b.primary, 3);
        assert_eq!(rotation_oracle(b"banana"), (b"nnbaaa".to_vec(), 3));
        assert_eq!(bwt_inverse(&b).unwrap(), b"banana");
        let b = BwtBlock { l: b"nnbaaa".to_vec(), n: 6, sa_width: SaWidth::W32, primary: 3, aux: None, stride: 1, periodic: false };
        assert_eq!(bwt_inverse(&b).unwrap(), b"banana");
    }

    #[test]
    fn single_symbol() {
        let b = bwt_forward(b"a").unwrap();
        assert_eq!((b.l.as_slice(), b.primary), (&b"a"[..], 0));
        assert_eq!(bwt_inverse(&b).unwrap(), b"a");
    }

    #[test]
    fn rotation_order_differs_from_suffix_order() {
        // suffix order of "abaa" is 3,2,0,1 but rotation order is 2,3,0,1
        let b = bwt_forward(b"abaa").unwrap();
        assert_eq!((b.l.clone(), b.primary), rotation_oracle(b"abaa"));
        assert_eq!(b.l, b"baaa");
    }

    #[test]
    fn stride_formula() {
        assert_eq!(stride(1 << 20), 1 << 17);
        assert_eq!(stride(1), 1);
        assert_eq!(stride(15), 1);
        assert_eq!(stride(16), 2);
        assert_eq!(stride(100), 8);
    }

    #[test]
    fn meta_formula_values() {
        assert_eq!(meta_bits(1 << 24, 32), 8344);
        assert_eq!(meta_bits(1 << 25, 64), 16600);
        assert_eq!(meta_bits(1, 32), 8344);
    }

    #[test]
    fn width_dispatch() {
        assert_eq!(SaWidth::for_len((1 << 31) - 1), SaWidth::W32);
        assert_eq!(SaWidth::for_len(1 << 31), SaWidth::W64);
        assert!(bwt_forward_with(&[], SaWidth::W32).is_ok());
    }

    #[test]
    fn periodic_blocks_with_anchors() {
        for t in [vec![b'A'; 40_000], b"ACGT".repeat(10_000), b"AACAG".repeat(9000)] {
            let b = bwt_forward(&t).unwrap();
            assert!(b.periodic);
            assert!(b.aux.is_some());
            assert_eq!(bwt_inverse(&b).unwrap(), t);
            assert_eq!(bwt_inverse_primary(&b).unwrap(), t);
        }
    }

    #[test]
    fn corrupt_anchor_detected() {
        let t: Vec<u8> = (0..50_000u32).map(|i| b"ACGT"[(i.wrapping_mul(2654435761) >> 13) as usize % 4]).collect();
        let mut b = bwt_forward(&t).unwrap();
        assert!(!b.periodic);
        assert_eq!(bwt_inverse(&b).unwrap(), t);
        let aux = b.aux.as_mut().unwrap();
        aux[3] = (aux[3] + 1) % b.n;
        assert!(matches!(bwt_inverse(&b), Err(Error::CorruptBlock(_))));
        let mut b2 = bwt_forward(&t).unwrap();
        b2.aux.as_mut().unwrap()[200] = 5;
        assert!(matches!(bwt_inverse(&b2), Err(Error::CorruptBlock(_))));
    }

    #[test]
    fn meta_roundtrip_and_length() {
        for n in [1u64, 100, 40_000, (1 << 24) + 1] {
            for w in [SaWidth::W32, SaWidth::W64] {
                let aux = (n >= AUX_MIN_BLOCK).then(|| {
                    let mut a = vec![0u64; AUX_SLOTS];
                    for (j, slot) in a.iter_mut().enumerate().take(n.div_ceil(stride(n)) as usize) {
                        *slot = (j as u64 * 7) % n;
                    }
                    a
                });
                let meta = BwtMeta {
                    n,
                    sa_width: w,
                    stride_log2: stride_log2(n) as u16,
                    periodic: false,
                    primary: aux.as_ref().map_or(0, |a| a[0]),
                    aux,
                    chunk_sizes: (0..chunk_count(n)).map(|i| 1000 + i).collect(),
                };
                let mut buf = Vec::new();
                meta.serialize(&mut buf);
                assert_eq!(buf.len() as u64 * 8, meta.bit_len());
                let (back, used) = BwtMeta::parse(&buf).unwrap();
                assert_eq!(used, buf.len());
                assert_eq!(back, meta);
            }
        }
    }

    #[test]
    fn forced_wide_path_matches() {
        let t: Vec<u8> = (0..70_000u32).map(|i| b"ACGTN"[(i.wrapping_mul(40503) >> 7) as usize % 5]).collect();
        let a = bwt_forward_with(&t, SaWidth::W32).unwrap();
        let b = bwt_forward_with(&t, SaWidth::W64).unwrap();
        assert_eq!(a.l, b.l);
        assert_eq!(a.aux, b.aux);
        assert_eq!(bwt_inverse(&b).unwrap(), t);
    }

    proptest! {
        #[test]
        fn matches_rotation_oracle(t in proptest::collection::vec(proptest::sample::select(b"ACGT".to_vec()), 1..400)) {
            let b = bwt_forward(&t).unwrap();
            let (l, p) = rotation_oracle(&t);
            prop_assert_eq!(&b.l, &l);
            prop_assert_eq!(b.primary, p);
            prop_assert_eq!(bwt_inverse(&b).unwrap(), t);
        }

        #[test]
        fn anchor_count_bounds(n in 64u64..(1u64 << 40)) {
            let used = n.div_ceil(stride(n));
            prop_assert!((8..=16).contains(&used), "n={} used={}", n, used);
        }
    }
}
