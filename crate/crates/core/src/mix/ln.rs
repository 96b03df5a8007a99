//! Fixed-point natural logarithm in micro-nats.

use std::sync::OnceLock;

pub const TABLE_BITS: u32 = 20;
/// `floor(10^6 * ln 2)`.
pub const LN2_MICRO: u64 = 693_147;

fn table() -> &'static [u32] {
    static T: OnceLock<Vec<u32>> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = vec![0u32; (1 << TABLE_BITS) + 1];
        for (i, v) in t.iter_mut().enumerate().skip(1) {
            *v = (1e6 * (i as f64).ln()).floor() as u32;
        }
        t
    })
}

/// `floor(10^6 ln i)` for `i <= 2^20`; above that `i` is split as
/// `a * 2^b` with `a = i >> b` and `ln a + b ln 2` is returned.
pub fn ln_micro(i: u64) -> u64 {
    debug_assert!(i > 0);
    let t = table();
    if i <= 1 << TABLE_BITS {
        return u64::from(t[i as usize]);
    }
    let b = (64 - i.leading_zeros()) - TABLE_BITS;
    u64::from(t[(i >> b) as usize]) + u64::from(b) * LN2_MICRO
}
