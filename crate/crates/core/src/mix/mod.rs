//! Blockwise Markov expert competition over nucleotide codes.
//!
//! Every block of 80 symbols is scored by each expert with counts frozen at
//! the block start, the cheapest expert (lowest index on ties) is signalled
//! through an order-5 model over previous choices, and the block is
//! range-coded under that expert. Counts are then updated: the winner and
//! any expert with `rho` set get count updates, every expert advances its
//! contexts.
//!
//! In 4-bit mode codes 4..=15 are unknowns (N,R,Y,S,W,K,M,B,D,H,V,U). A
//! block flag says whether any are present; if so each position carries a
//! known/unknown gate and unknowns are coded by their index under a separate
//! model. Unknown positions advance contexts with symbol 0 and never touch
//! counts.
//!
//! Payload: `[u8 profile][u8 width bits][varint symbol count][range coder bytes]`.

pub mod expert;
pub mod ln;

pub use expert::{advance_context, advance_reverse, Expert, ExpertParams, Profile, FULL};

use std::sync::{Mutex, MutexGuard};

use crate::coder::{FreqModel, RangeDecoder, RangeEncoder, MAX_TOTAL};
use crate::error::{Error, Result};
use crate::pack::Width;
use crate::varint::{self, Cursor};
use ln::ln_micro;

/// Full-profile tables take gigabytes, so at most one full session is
/// alive per process; parallel blocks queue here instead.
static FULL_SESSION: Mutex<()> = Mutex::new(());

fn session_guard(profile: Profile) -> Option<MutexGuard<'static, ()>> {
    (profile == Profile::Full).then(|| FULL_SESSION.lock().unwrap_or_else(|e| e.into_inner()))
}

pub const BLOCK: usize = 80;
const SELECTOR_ORDER: u32 = 5;
const SIDE_INC: u32 = 24;
const SIDE_LIMIT: u32 = 1 << 12;
const UNKNOWN_SYMBOLS: usize = 12;

/// Encoder/decoder statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixStats {
    pub blocks: u64,
    /// Ideal selector code length per block, in bits.
    pub selector_bits: Vec<f64>,
    pub choices: Vec<u8>,
    /// Count-table cell groups written.
    pub count_writes: u64,
    /// Count writes made while processing unknown positions.
    pub unknown_count_writes: u64,
}

impl MixStats {
    pub fn selector_bits_total(&self) -> f64 {
        self.selector_bits.iter().sum()
    }

    pub fn selector_bits_mean(&self) -> f64 {
        if self.blocks == 0 {
            0.0
        } else {
            self.selector_bits_total() / self.blocks as f64
        }
    }

    pub fn selector_bits_max(&self) -> f64 {
        self.selector_bits.iter().copied().fold(0.0, f64::max)
    }
}

pub struct ExpertBank {
    pub experts: Vec<Expert>,
}

impl ExpertBank {
    pub fn new(profile: Profile) -> Result<Self> {
        let experts = profile.params().iter().map(|&p| Expert::new(p)).collect::<Result<_>>()?;
        Ok(ExpertBank { experts })
    }

    /// Cost of `block` under each expert in micro-nats, counts frozen,
    /// contexts advanced on a copy. Unknown codes (>= 4) cost nothing here.
    pub fn score_block(&self, block: &[u8]) -> Vec<u64> {
        self.experts
            .iter()
            .map(|e| {
                let k = e.params.k;
                let mut h = e.h;
                let mut cost = 0u64;
                for &x in block {
                    if x < 4 {
                        let f = e.freqs(h);
                        let total: u32 = f.iter().sum();
                        cost += ln_micro(u64::from(total)) - ln_micro(u64::from(f[x as usize]));
                        h = advance_context(h, k, x);
                    } else {
                        h = advance_context(h, k, 0);
                    }
                }
                cost
            })
            .collect()
    }

    /// Post-block updates for winner `m`.
    pub fn update(&mut self, block: &[u8], m: usize, stats: &mut MixStats) {
        for (i, e) in self.experts.iter_mut().enumerate() {
            let full = i == m || e.params.rho;
            let k = e.params.k;
            for &x in block {
                let before = stats.count_writes;
                if x < 4 {
                    if full {
                        e.observe(e.h, x);
                        stats.count_writes += 1;
                        if e.params.rho_rc {
                            // the reverse strand sees comp(oldest context symbol) after the new context
                            let oldest = (e.h >> (2 * (k - 1))) as u8;
                            let rh = advance_reverse(e.rh, k, x);
                            e.observe(rh, 3 - oldest);
                            stats.count_writes += 1;
                        }
                    }
                    e.advance(x);
                } else {
                    e.advance(0);
                    stats.unknown_count_writes += stats.count_writes - before;
                }
            }
        }
    }

    pub fn digests(&self) -> Vec<u64> {
        self.experts.iter().map(Expert::digest).collect()
    }
}

pub fn argmin(costs: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    best
}

/// Frequencies fitted under the range coder's total limit.
#[inline]
fn fit(f: [u32; 4]) -> ([u32; 4], u32) {
    let total: u32 = f.iter().sum();
    if total <= MAX_TOTAL {
        return (f, total);
    }
    let mut s = 0;
    while (total >> s) + 4 > MAX_TOTAL {
        s += 1;
    }
    let g = f.map(|v| (v >> s).max(1));
    (g, g.iter().sum())
}

struct SideModels {
    selector: Vec<FreqModel>,
    history: usize,
    n_experts: usize,
    z: [FreqModel; 2],
    z_prev: usize,
    gate: [FreqModel; 2],
    gate_prev: usize,
    unknown: Vec<FreqModel>,
    unknown_prev: usize,
}

impl SideModels {
    fn new(n_experts: usize) -> Self {
        let contexts = n_experts.pow(SELECTOR_ORDER);
        let bin = || FreqModel::new(2, SIDE_INC, SIDE_LIMIT);
        SideModels {
            selector: vec![FreqModel::new(n_experts, SIDE_INC, SIDE_LIMIT); contexts],
            history: 0,
            n_experts,
            z: [bin(), bin()],
            z_prev: 0,
            gate: [bin(), bin()],
            gate_prev: 0,
            unknown: vec![FreqModel::new(UNKNOWN_SYMBOLS, SIDE_INC, SIDE_LIMIT); UNKNOWN_SYMBOLS],
            unknown_prev: 0,
        }
    }

    fn push_choice(&mut self, m: usize) {
        let contexts = self.selector.len();
        self.history = (self.history * self.n_experts + m) % contexts;
    }
}

struct Session {
    bank: ExpertBank,
    side: SideModels,
    four: bool,
    stats: MixStats,
}

impl Session {
    fn new(profile: Profile, width: Width) -> Result<Self> {
        let bank = ExpertBank::new(profile)?;
        let side = SideModels::new(bank.experts.len());
        Ok(Session { bank, side, four: width == Width::Four, stats: MixStats::default() })
    }

    fn encode_block(&mut self, e: &mut RangeEncoder, block: &[u8]) {
        let costs = self.bank.score_block(block);
        let m = argmin(&costs);
        let sel = &mut self.side.selector[self.side.history];
        self.stats.selector_bits.push(sel.cost_bits(m));
        sel.encode(e, m);
        sel.update(m);
        self.side.push_choice(m);

        let any_unknown = self.four && block.iter().any(|&x| x >= 4);
        if self.four {
            let z = usize::from(any_unknown);
            let zm = &mut self.side.z[self.side.z_prev];
            zm.encode(e, z);
            zm.update(z);
            self.side.z_prev = z;
        }
        let ex = &self.bank.experts[m];
        let k = ex.params.k;
        let mut h = ex.h;
        for &x in block {
            if any_unknown {
                let u = usize::from(x >= 4);
                let g = &mut self.side.gate[self.side.gate_prev];
                g.encode(e, u);
                g.update(u);
                self.side.gate_prev = u;
                if u == 1 {
                    let v = x as usize - 4;
                    let um = &mut self.side.unknown[self.side.unknown_prev];
                    um.encode(e, v);
                    um.update(v);
                    self.side.unknown_prev = v;
                    h = advance_context(h, k, 0);
                    continue;
                }
            }
            let (f, total) = fit(ex.freqs(h));
            let lo: u32 = f[..x as usize].iter().sum();
            e.encode(lo, lo + f[x as usize], total);
            h = advance_context(h, k, x);
        }
        self.finish_block(block, m);
    }

    fn decode_block(&mut self, d: &mut RangeDecoder, len: usize, out: &mut Vec<u8>) -> Result<()> {
        let sel = &mut self.side.selector[self.side.history];
        let m = sel.decode(d);
        self.stats.selector_bits.push(sel.cost_bits(m));
        sel.update(m);
        self.side.push_choice(m);
        let any_unknown = if self.four {
            let zm = &mut self.side.z[self.side.z_prev];
            let z = zm.decode(d);
            zm.update(z);
            self.side.z_prev = z;
            z == 1
        } else {
            false
        };
        let start = out.len();
        let ex = &self.bank.experts[m];
        let k = ex.params.k;
        let mut h = ex.h;
        for _ in 0..len {
            if any_unknown {
                let g = &mut self.side.gate[self.side.gate_prev];
                let u = g.decode(d);
                g.update(u);
                self.side.gate_prev = u;
                if u == 1 {
                    let um = &mut self.side.unknown[self.side.unknown_prev];
                    let v = um.decode(d);
                    um.update(v);
                    self.side.unknown_prev = v;
                    out.push(4 + v as u8);
                    h = advance_context(h, k, 0);
                    continue;
                }
            }
            let (f, total) = fit(ex.freqs(h));
            let t = d.target(total);
            let mut lo = 0;
            let mut x = 0usize;
            while t >= lo + f[x] {
                lo += f[x];
                x += 1;
            }
            d.consume(lo, lo + f[x], total);
            out.push(x as u8);
            h = advance_context(h, k, x as u8);
        }
        if d.is_inconsistent() {
            return Err(Error::CorruptPayload("range decoder left its interval".into()));
        }
        let block = out[start..].to_vec();
        self.finish_block(&block, m);
        Ok(())
    }

    fn finish_block(&mut self, block: &[u8], m: usize) {
        self.bank.update(block, m, &mut self.stats);
        self.stats.blocks += 1;
        self.stats.choices.push(m as u8);
    }
}

pub fn encode(codes: &[u8], width: Width, profile: Profile) -> Result<Vec<u8>> {
    encode_with_stats(codes, width, profile).map(|(p, _)| p)
}

/// Encode nucleotide codes (`0..4` at width 2, `0..16` at width 4).
pub fn encode_with_stats(codes: &[u8], width: Width, profile: Profile) -> Result<(Vec<u8>, MixStats)> {
    let limit = 1u8 << width.bits();
    if let Some(pos) = codes.iter().position(|&c| c >= limit) {
        return Err(Error::InvalidConfig(format!("code {} at {pos} outside {}-bit alphabet", codes[pos], width.bits())));
    }
    let _guard = session_guard(profile);
    let mut s = Session::new(profile, width)?;
    let mut out = vec![profile.id(), width.bits() as u8];
    varint::put_u64(&mut out, codes.len() as u64);
    let mut e = RangeEncoder::new();
    for block in codes.chunks(BLOCK) {
        s.encode_block(&mut e, block);
    }
    out.extend_from_slice(&e.finish());
    Ok((out, s.stats))
}

pub fn decode(payload: &[u8]) -> Result<Vec<u8>> {
    decode_with_stats(payload).map(|(c, _)| c)
}

/// Decode, requiring the payload to carry exactly `n` symbols at `width`.
pub fn decode_exact(payload: &[u8], width: Width, n: usize) -> Result<Vec<u8>> {
    let (_, w, count, _) = parse_header(payload)?;
    if w != width || count != n {
        return Err(Error::CorruptPayload(format!("payload holds {count} {}-bit symbols", w.bits())));
    }
    decode(payload)
}

fn parse_header(payload: &[u8]) -> Result<(Profile, Width, usize, &[u8])> {
    let mut c = Cursor::new(payload);
    let profile = Profile::from_id(c.u8()?)?;
    let width = Width::from_bits(u32::from(c.u8()?)).ok_or_else(|| Error::CorruptPayload("bad width".into()))?;
    let n = c.usize()?;
    Ok((profile, width, n, c.rest()))
}

pub fn decode_with_stats(payload: &[u8]) -> Result<(Vec<u8>, MixStats)> {
    let (profile, width, n, body) = parse_header(payload)?;
    if n > 0 && body.is_empty() {
        return Err(Error::CorruptPayload("empty body".into()));
    }
    let _guard = session_guard(profile);
    let mut s = Session::new(profile, width)?;
    let mut d = RangeDecoder::new(body);
    let mut out = Vec::with_capacity(n.min(1 << 28));
    let mut left = n;
    while left > 0 {
        let len = left.min(BLOCK);
        s.decode_block(&mut d, len, &mut out)?;
        left -= len;
        if d.overrun() {
            return Err(Error::CorruptPayload("markov-mix payload truncated".into()));
        }
    }
    Ok((out, s.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codes(n: usize, alphabet: u8, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..alphabet)).collect()
    }

    #[test]
    fn fresh_bank_scores_uniform() {
        let bank = ExpertBank::new(Profile::Lite).unwrap();
        let block = random_codes(80, 4, 1);
        assert_eq!(bank.score_block(&block), vec![110_903_520; 3]);
        assert_eq!(80 * 1_386_294, 110_903_520);
    }

    #[test]
    fn ties_pick_first() {
        assert_eq!(argmin(&[5, 5, 5]), 0);
        assert_eq!(argmin(&[7, 3, 3, 9]), 1);
    }

    #[test]
    fn homopolymer_warms_order3() {
        let mut bank = ExpertBank::new(Profile::Lite).unwrap();
        let block = vec![0u8; 80];
        let fresh = bank.score_block(&block)[0];
        let mut st = MixStats::default();
        bank.update(&block, 0, &mut st);
        assert!(bank.score_block(&block)[0] < fresh);
    }

    #[test]
    fn saturated_expert_scores_near_zero() {
        let mut bank = ExpertBank::new(Profile::Lite).unwrap();
        let e = &mut bank.experts[0];
        e.set_counts(0, [65535, 0, 0, 0]);
        let cost = bank.score_block(&[0, 0])[0];
        // two positions at P = 65536/65539
        let exact = 2.0 * 1e6 * (65539f64 / 65536.0).ln();
        assert!((cost as f64 - exact).abs() <= 4.0, "{cost} vs {exact}");
    }

    #[test]
    fn fit_respects_total() {
        let (f, t) = fit([262_141, 1, 1, 1]);
        assert!(t <= MAX_TOTAL);
        assert!(f.iter().all(|&v| v >= 1));
        assert_eq!(fit([13, 1, 1, 1]), ([13, 1, 1, 1], 16));
    }

    #[test]
    fn roundtrip_both_widths_and_profiles() {
        for (width, alphabet) in [(Width::Two, 4u8), (Width::Four, 16)] {
            for n in [0usize, 1, 79, 80, 81, 5000] {
                let codes = random_codes(n, alphabet, n as u64);
                let p = encode(&codes, width, Profile::Lite).unwrap();
                assert_eq!(decode(&p).unwrap(), codes, "{width:?} n={n}");
            }
        }
        let periodic: Vec<u8> = (0..20_000).map(|i| [0u8, 1, 3, 2, 2][i % 5]).collect();
        let p = encode(&periodic, Width::Two, Profile::Lite).unwrap();
        assert!(p.len() < 300, "{}", p.len());
        assert_eq!(decode(&p).unwrap(), periodic);
    }

    #[test]
    fn full_profile_roundtrip() {
        let codes: Vec<u8> = random_codes(3000, 4, 77)
            .into_iter()
            .enumerate()
            .map(|(i, c)| if i % 97 == 0 { 4 + (i % 12) as u8 } else { c })
            .collect();
        let Ok((p, stats)) = encode_with_stats(&codes, Width::Four, Profile::Full) else {
            eprintln!("full profile tables could not be allocated; skipped");
            return;
        };
        assert_eq!(stats.unknown_count_writes, 0);
        assert!(stats.choices.iter().all(|&c| c < 5));
        assert_eq!(decode(&p).unwrap(), codes);
    }

    #[test]
    fn rejects_out_of_alphabet_codes() {
        assert!(encode(&[0, 1, 4], Width::Two, Profile::Lite).is_err());
    }

    #[test]
    fn non_winners_without_rho_keep_counts() {
        let mut bank = ExpertBank::new(Profile::Lite).unwrap();
        let codes = random_codes(4000, 4, 3);
        let mut st = MixStats::default();
        for block in codes.chunks(BLOCK) {
            let m = argmin(&bank.score_block(block));
            let before = bank.digests();
            bank.update(block, m, &mut st);
            let after = bank.digests();
            for (i, e) in bank.experts.iter().enumerate() {
                if i != m && !e.params.rho {
                    assert_eq!(before[i], after[i]);
                }
            }
        }
    }

    #[test]
    fn unknowns_leave_counts_alone() {
        // same stream with unknowns vs an oracle that skips counting there
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let codes: Vec<u8> = (0..8000)
            .map(|_| if rng.gen_bool(0.05) { rng.gen_range(4..16) } else { rng.gen_range(0..4) })
            .collect();
        let (_, stats) = encode_with_stats(&codes, Width::Four, Profile::Lite).unwrap();
        assert_eq!(stats.unknown_count_writes, 0);

        let mut bank = ExpertBank::new(Profile::Lite).unwrap();
        let mut st = MixStats::default();
        for (block, &m) in codes.chunks(BLOCK).zip(&stats.choices) {
            bank.update(block, m as usize, &mut st);
        }
        // oracle: plain maps keyed by context, contexts advanced with 0 at unknowns
        for (e, p) in bank.experts.iter().zip(Profile::Lite.params()) {
            use std::collections::HashMap;
            let mut counts: HashMap<u64, [u32; 4]> = HashMap::new();
            let (mut h, mut rh) = (0u64, 0u64);
            let mut winner_blocks = stats.choices.iter();
            for block in codes.chunks(BLOCK) {
                let m = *winner_blocks.next().unwrap() as usize;
                let idx = FULL.iter().position(|q| q == p).unwrap();
                let full = m == idx || p.rho;
                for &x in block {
                    let x = if x < 4 {
                        if full {
                            let mut bump = |ctx: u64, s: usize| {
                                let c = counts.entry(ctx).or_insert([0; 4]);
                                if p.c_max == 0 {
                                    *c = [0; 4];
                                } else if c[s] >= p.c_max {
                                    *c = c.map(|v| v / 2);
                                }
                                c[s] += 1;
                            };
                            bump(h, x as usize);
                            if p.rho_rc {
                                let oldest = h / 4u64.pow(p.k - 1);
                                let rh2 = rh / 4 + (3 - u64::from(x)) * 4u64.pow(p.k - 1);
                                bump(rh2, 3 - oldest as usize);
                            }
                        }
                        x
                    } else {
                        0
                    };
                    h = (h % 4u64.pow(p.k - 1)) * 4 + u64::from(x);
                    rh = rh / 4 + (3 - u64::from(x)) * 4u64.pow(p.k - 1);
                }
            }
            for (&ctx, &c) in &counts {
                assert_eq!(e.counts(ctx), c, "k={} ctx={ctx}", p.k);
            }
            let nonzero = (0..1u64 << (2 * p.k)).filter(|&c| e.counts(c) != [0; 4]).count();
            assert_eq!(nonzero, counts.values().filter(|c| **c != [0; 4]).count());
        }
    }

    #[test]
    fn uniform_iid_is_near_two_bits() {
        let codes = random_codes(200_000, 4, 99);
        let (p, stats) = encode_with_stats(&codes, Width::Two, Profile::Lite).unwrap();
        let bps = 8.0 * p.len() as f64 / codes.len() as f64;
        assert!((2.0..2.08).contains(&bps), "{bps}");
        assert!(stats.selector_bits_mean() <= 2.33);
    }

    #[test]
    fn corrupt_header_rejected() {
        assert!(decode(&[9, 2, 0]).is_err());
        assert!(decode(&[1, 3, 0]).is_err());
        assert!(decode(&[1, 2, 50]).is_err());
    }

    proptest! {
        #[test]
        fn mirror(codes in proptest::collection::vec(0u8..16, 0..600), four in any::<bool>()) {
            let (width, codes) = if four {
                (Width::Four, codes)
            } else {
                (Width::Two, codes.into_iter().map(|c| c & 3).collect())
            };
            let (p, es) = encode_with_stats(&codes, width, Profile::Lite).unwrap();
            let (back, ds) = decode_with_stats(&p).unwrap();
            prop_assert_eq!(back, codes);
            prop_assert_eq!(es.choices, ds.choices);
            prop_assert_eq!(es.count_writes, ds.count_writes);
            prop_assert_eq!(es.selector_bits, ds.selector_bits);
        }
    }
}
