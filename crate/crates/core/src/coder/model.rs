//! Adaptive frequency table for small alphabets.

use super::range::{RangeDecoder, RangeEncoder, MAX_TOTAL};

/// Counts start at 1, grow by `inc` per occurrence and are halved (rounding
/// up, so none reaches zero) once the total exceeds `limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqModel {
    freq: Vec<u32>,
    total: u32,
    inc: u32,
    limit: u32,
}

impl FreqModel {
    pub fn new(symbols: usize, inc: u32, limit: u32) -> Self {
        assert!(limit + inc <= MAX_TOTAL && symbols as u32 <= limit);
        FreqModel { freq: vec![1; symbols], total: symbols as u32, inc, limit }
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn freq(&self, s: usize) -> u32 {
        self.freq[s]
    }

    fn cum(&self, s: usize) -> u32 {
        self.freq[..s].iter().sum()
    }

    pub fn encode(&self, e: &mut RangeEncoder, s: usize) {
        let lo = self.cum(s);
        e.encode(lo, lo + self.freq[s], self.total);
    }

    pub fn decode(&self, d: &mut RangeDecoder) -> usize {
        let t = d.target(self.total);
        let mut lo = 0;
        for (s, &f) in self.freq.iter().enumerate() {
            if t < lo + f {
                d.consume(lo, lo + f, self.total);
                return s;
            }
            lo += f;
        }
        unreachable!("target below total")
    }

    pub fn update(&mut self, s: usize) {
        self.freq[s] += self.inc;
        self.total += self.inc;
        if self.total > self.limit {
            self.total = 0;
            for f in &mut self.freq {
                *f = (*f).div_ceil(2);
                self.total += *f;
            }
        }
    }

    /// Ideal code length of `s` in bits under the current table.
    pub fn cost_bits(&self, s: usize) -> f64 {
        (f64::from(self.total) / f64::from(self.freq[s])).log2()
    }
}
