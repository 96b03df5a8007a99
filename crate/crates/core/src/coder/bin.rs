//! Binary arithmetic coder with 17-bit probabilities.
//!
//! 32-bit range, 64-bit low with a one-byte cache for carry propagation,
//! renormalization whenever the range drops below 2^24. The first emitted
//! byte is always the initial (zero) cache; flush writes five bytes.

pub const PROB_BITS: u32 = 17;
/// Largest admissible probability numerator; the smallest is 1.
pub const PROB_MAX: u32 = (1 << PROB_BITS) - 1;

const TOP: u32 = 1 << 24;

#[derive(Debug, Clone)]
pub struct BinEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for BinEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl BinEncoder {
    pub fn new() -> Self {
        BinEncoder { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }

    #[inline]
    fn split(range: u32, q: u32) -> u32 {
        debug_assert!((1..=PROB_MAX).contains(&q));
        ((u64::from(range) * u64::from(q)) >> PROB_BITS) as u32
    }

    /// Code `bit` where `q / 2^17` is the probability of a 1.
    #[inline]
    pub fn encode(&mut self, bit: u32, q: u32) {
        let bound = Self::split(self.range, q);
        if bit != 0 {
            self.range = bound;
        } else {
            self.low += u64::from(bound);
            self.range -= bound;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xff00_0000 || self.low >> 32 != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xff;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00ff_ffff) << 8;
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct BinDecoder<'a> {
    code: u32,
    range: u32,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BinDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        let mut d = BinDecoder { code: 0, range: u32::MAX, buf, pos: 0 };
        for _ in 0..5 {
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

    #[inline]
    pub fn decode(&mut self, q: u32) -> u32 {
        let bound = BinEncoder::split(self.range, q);
        let bit = if self.code < bound {
            self.range = bound;
            1
        } else {
            self.code -= bound;
            self.range -= bound;
            0
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte());
        }
        bit
    }

    /// Bytes consumed beyond the end of the input (zero-filled reads).
    pub fn overrun(&self) -> usize {
        self.pos.saturating_sub(self.buf.len())
    }
}
