//! Multi-symbol range coder over cumulative frequency tables.
//!
//! `range / total` is the scale; the last symbol (`cum_hi == total`) also
//! takes the division remainder. Carries are propagated backwards into the
//! already emitted bytes. Flush writes the four bytes of `low`.

/// Largest admissible frequency total.
pub const MAX_TOTAL: u32 = 1 << 16;

const TOP: u32 = 1 << 24;

#[derive(Debug, Clone, Default)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    out: Vec<u8>,
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, out: Vec::new() }
    }

    #[inline]
    pub fn encode(&mut self, cum_lo: u32, cum_hi: u32, total: u32) {
        debug_assert!(cum_lo < cum_hi && cum_hi <= total && total <= MAX_TOTAL);
        let r = self.range / total;
        self.low += u64::from(r * cum_lo);
        self.range = if cum_hi < total { r * (cum_hi - cum_lo) } else { self.range - r * cum_lo };
        if self.low >> 32 != 0 {
            self.low &= 0xffff_ffff;
            for b in self.out.iter_mut().rev() {
                *b = b.wrapping_add(1);
                if *b != 0 {
                    break;
                }
            }
        }
        while self.range < TOP {
            self.out.push((self.low >> 24) as u8);
            self.low = (self.low << 8) & 0xffff_ffff;
            self.range <<= 8;
        }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.out.extend_from_slice(&(self.low as u32).to_be_bytes());
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    scale: u32,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        let mut d = RangeDecoder { code: 0, range: u32::MAX, scale: 1, buf, pos: 0 };
        for _ in 0..4 {
            d.code = (d.code << 8) | u32::from(d.next_byte());
        }
        d
    }

    #[inline]
    fn next_byte(&mut self) -> u8 {
        let b = self.buf.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    /// Cumulative frequency the next symbol falls on; follow with [`Self::consume`].
    #[inline]
    pub fn target(&mut self, total: u32) -> u32 {
        self.scale = self.range / total;
        (self.code / self.scale).min(total - 1)
    }

    #[inline]
    pub fn consume(&mut self, cum_lo: u32, cum_hi: u32, total: u32) {
        let r = self.scale;
        self.code = self.code.wrapping_sub(r * cum_lo);
        self.range = if cum_hi < total { r * (cum_hi - cum_lo) } else { self.range - r * cum_lo };
        while self.range < TOP {
            self.code = (self.code << 8) | u32::from(self.next_byte());
            self.range <<= 8;
        }
    }

    /// True once the decoder has read past the input; a well-formed stream
    /// never needs more than its own bytes.
    pub fn overrun(&self) -> bool {
        self.pos > self.buf.len()
    }

    /// The current code lies outside the live interval, which only happens
    /// on corrupt input.
    pub fn is_inconsistent(&self) -> bool {
        self.code >= self.range
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::FreqModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_four_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let syms: Vec<u32> = (0..1_000_000).map(|_| rng.gen_range(0..4)).collect();
        let mut e = RangeEncoder::new();
        for &s in &syms {
            e.encode(s, s + 1, 4);
        }
        let out = e.finish();
        assert!((out.len() as i64 - 250_000).abs() <= 16, "{}", out.len());
        let mut d = RangeDecoder::new(&out);
        for &s in &syms {
            let t = d.target(4);
            assert_eq!(t, s);
            d.consume(t, t + 1, 4);
        }
    }

    #[test]
    fn degenerate_single_symbol() {
        let mut e = RangeEncoder::new();
        for _ in 0..100_000 {
            e.encode(0, 1000, 1000);
        }
        assert_eq!(e.finish().len(), 4);
    }

    #[test]
    fn golden_bytes() {
        let mut e = RangeEncoder::new();
        for (lo, hi, t) in [(0, 1, 3), (1, 3, 3), (5, 9, 10), (9, 10, 10), (100, 40000, 65536)] {
            e.encode(lo, hi, t);
        }
        assert_eq!(e.finish(), [0x4d, 0x5f, 0x52, 0xcb]);
    }

    #[test]
    fn carry_propagation_roundtrip() {
        // runs of top symbols push low toward 2^32 and force carries
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut syms = Vec::new();
        for _ in 0..2000 {
            let run = rng.gen_range(1..40);
            let s = if rng.gen_bool(0.7) { 255 } else { rng.gen_range(0..256) };
            syms.extend(std::iter::repeat_n(s, run));
        }
        let mut e = RangeEncoder::new();
        for &s in &syms {
            e.encode(s, s + 1, 256);
        }
        let out = e.finish();
        let mut d = RangeDecoder::new(&out);
        for &s in &syms {
            let t = d.target(256);
            assert_eq!(t, s);
            d.consume(t, t + 1, 256);
        }
    }

    proptest! {
        #[test]
        fn adaptive_mirror(syms in proptest::collection::vec(0usize..12, 0..4000), inc in 1u32..64) {
            let mut m = FreqModel::new(12, inc, 1 << 12);
            let mut e = RangeEncoder::new();
            for &s in &syms {
                m.encode(&mut e, s);
                m.update(s);
            }
            let out = e.finish();
            let mut m = FreqModel::new(12, inc, 1 << 12);
            let mut d = RangeDecoder::new(&out);
            for &s in &syms {
                let got = m.decode(&mut d);
                prop_assert_eq!(got, s);
                m.update(got);
            }
        }
    }
}
