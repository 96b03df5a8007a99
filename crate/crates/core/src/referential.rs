//! Referential coding: each semantic stream of a target file is expressed
//! as copies from the same stream of a reference file plus literal bytes.
//!
//! Matches are found greedily left to right. A q-gram Bloom filter over the
//! reference rejects positions that cannot start a long match; surviving
//! positions binary-search the reference suffix array for the longest match.
//! The position right after the previous copy is also tried, since after a
//! substitution the match usually resumes there.
//!
//! Script encoding: `LITERAL = varint(len << 1)`,
//! `COPY = varint(len << 1 | 1) zigzag(pos - previous copy end)`.
//! Literal bytes are stored as a separate stream.

use rayon::prelude::*;

use crate::container::{
    self, checksum, format, stream_entry, CodecId, Config, ContainerIndex, ContainerReader, Header, ReferenceId, Role,
    StreamId,
};
use crate::error::{Error, Result};
use crate::sais::suffix_array;
use crate::stream::{self, SemanticStreams};
use crate::varint::{self, Cursor};

pub const MIN_MATCH: usize = 24;
pub const Q: usize = 16;
pub const BLOOM_BITS_PER_ITEM: u64 = 10;
pub const BLOOM_PROBES: u32 = 7;

/// Streams differenced in referential mode. EXTRA is not needed because
/// NUC is differenced as plain symbols.
pub const DIFFED: [StreamId; 5] = [StreamId::Ctrl, StreamId::Hdr, StreamId::Nuc, StreamId::Case, StreamId::Quality];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Copy { pos: u64, len: u64 },
    Literal { len: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatchScript {
    pub ops: Vec<Op>,
}

impl PatchScript {
    fn push_literal(&mut self, n: u64) {
        if let Some(Op::Literal { len }) = self.ops.last_mut() {
            *len += n;
        } else {
            self.ops.push(Op::Literal { len: n });
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut prev_end = 0u64;
        for op in &self.ops {
            match *op {
                Op::Literal { len } => varint::put_u64(&mut out, len << 1),
                Op::Copy { pos, len } => {
                    varint::put_u64(&mut out, len << 1 | 1);
                    varint::put_i64(&mut out, pos as i64 - prev_end as i64);
                    prev_end = pos + len;
                }
            }
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<PatchScript> {
        let bad = |m: &str| Error::CorruptScript(m.to_string());
        let mut c = Cursor::new(bytes);
        let mut ops = Vec::new();
        let mut prev_end = 0u64;
        while !c.is_empty() {
            let tag = c.u64().map_err(|_| bad("truncated descriptor"))?;
            let len = tag >> 1;
            if tag & 1 == 0 {
                ops.push(Op::Literal { len });
            } else {
                let delta = c.i64().map_err(|_| bad("truncated copy offset"))?;
                let pos = (prev_end as i64)
                    .checked_add(delta)
                    .filter(|&p| p >= 0)
                    .ok_or_else(|| bad("copy before reference start"))? as u64;
                prev_end = pos.checked_add(len).ok_or_else(|| bad("copy length overflow"))?;
                ops.push(Op::Copy { pos, len });
            }
        }
        Ok(PatchScript { ops })
    }

    pub fn literal_bytes(&self) -> u64 {
        self.ops.iter().map(|op| if let Op::Literal { len } = op { *len } else { 0 }).sum()
    }
}

/// Bloom filter over q-grams with double hashing.
pub struct Bloom {
    bits: Vec<u64>,
    m: u64,
}

impl Bloom {
    pub fn new(items: usize) -> Self {
        let m = (items as u64 * BLOOM_BITS_PER_ITEM).max(64);
        Bloom { bits: vec![0; m.div_ceil(64) as usize], m }
    }

    #[inline]
    fn probes(&self, gram: &[u8]) -> impl Iterator<Item = u64> {
        let h = xxhash_rust::xxh3::xxh3_64(gram);
        let (h1, h2) = (h & 0xffff_ffff, (h >> 32) | 1);
        let m = self.m;
        (0..u64::from(BLOOM_PROBES)).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % m)
    }

    pub fn insert(&mut self, gram: &[u8]) {
        let idx: Vec<u64> = self.probes(gram).collect();
        for b in idx {
            self.bits[(b / 64) as usize] |= 1 << (b % 64);
        }
    }

    pub fn contains(&self, gram: &[u8]) -> bool {
        self.probes(gram).all(|b| self.bits[(b / 64) as usize] >> (b % 64) & 1 == 1)
    }
}

enum Sa {
    Narrow(Vec<u32>),
    Wide(Vec<u64>),
}

impl Sa {
    #[inline]
    fn get(&self, i: usize) -> usize {
        match self {
            Sa::Narrow(v) => v[i] as usize,
            Sa::Wide(v) => v[i] as usize,
        }
    }

    fn len(&self) -> usize {
        match self {
            Sa::Narrow(v) => v.len(),
            Sa::Wide(v) => v.len(),
        }
    }
}

/// Suffix array and q-gram filter over one reference stream; read-only
/// once built.
pub struct MatchIndex<'a> {
    reference: &'a [u8],
    sa: Sa,
    bloom: Bloom,
}

fn lcp(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl<'a> MatchIndex<'a> {
    pub fn new(reference: &'a [u8]) -> Self {
        let sa = if reference.len() < 1 << 31 {
            Sa::Narrow(suffix_array(reference))
        } else {
            Sa::Wide(suffix_array(reference))
        };
        let grams = reference.len().saturating_sub(Q - 1);
        let mut bloom = Bloom::new(grams);
        for g in reference.windows(Q) {
            bloom.insert(g);
        }
        MatchIndex { reference, sa, bloom }
    }

    pub fn bloom(&self) -> &Bloom {
        &self.bloom
    }

    /// Longest match of a prefix of `query` in the reference: (position, length).
    pub fn longest_match(&self, query: &[u8]) -> (usize, usize) {
        let r = self.reference;
        let n = self.sa.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if &r[self.sa.get(mid)..] < query {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut best = (0, 0);
        for i in [lo.wrapping_sub(1), lo] {
            if i < n {
                let p = self.sa.get(i);
                let l = lcp(&r[p..], query);
                if l > best.1 {
                    best = (p, l);
                }
            }
        }
        best
    }

    /// Greedy copy/literal cover of `target`.
    pub fn diff(&self, target: &[u8]) -> (PatchScript, Vec<u8>) {
        let r = self.reference;
        let mut script = PatchScript::default();
        let mut literals = Vec::new();
        let mut t = 0usize;
        let mut expect = 0usize;
        while t < target.len() {
            let rest = &target[t..];
            let mut best = (0usize, 0usize);
            if rest.len() >= MIN_MATCH && !r.is_empty() {
                if expect < r.len() {
                    best = (expect, lcp(&r[expect..], rest));
                }
                if best.1 < rest.len() && self.bloom.contains(&rest[..Q]) {
                    let m = self.longest_match(rest);
                    if m.1 > best.1 {
                        best = m;
                    }
                }
            }
            if best.1 >= MIN_MATCH {
                script.ops.push(Op::Copy { pos: best.0 as u64, len: best.1 as u64 });
                t += best.1;
                expect = best.0 + best.1;
            } else {
                script.push_literal(1);
                literals.push(target[t]);
                t += 1;
                expect += 1;
            }
        }
        (script, literals)
    }
}

pub fn diff_stream(reference: &[u8], target: &[u8]) -> (PatchScript, Vec<u8>) {
    MatchIndex::new(reference).diff(target)
}

pub fn apply_patch(reference: &[u8], script: &PatchScript, literals: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut lp = 0usize;
    for op in &script.ops {
        match *op {
            Op::Copy { pos, len } => {
                let src = pos
                    .checked_add(len)
                    .filter(|&e| e <= reference.len() as u64)
                    .map(|e| &reference[pos as usize..e as usize])
                    .ok_or_else(|| Error::CorruptScript(format!("copy {pos}+{len} beyond reference of {}", reference.len())))?;
                out.extend_from_slice(src);
            }
            Op::Literal { len } => {
                let src = (lp as u64)
                    .checked_add(len)
                    .filter(|&e| e <= literals.len() as u64)
                    .map(|e| &literals[lp..e as usize])
                    .ok_or_else(|| Error::CorruptScript("literal stream exhausted".into()))?;
                out.extend_from_slice(src);
                lp += len as usize;
            }
        }
    }
    if lp != literals.len() {
        return Err(Error::CorruptScript(format!("{} literal bytes left over", literals.len() - lp)));
    }
    Ok(out)
}

/// `h2(p) + p log2(sigma - 1)` bits per symbol.
pub fn conditional_entropy_bound(p: f64, sigma: u32) -> f64 {
    let h2 = if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.log2() - (1.0 - p) * (1.0 - p).log2() };
    h2 + p * f64::from(sigma - 1).log2()
}

fn stream_of(s: &SemanticStreams, id: StreamId) -> &[u8] {
    match id {
        StreamId::Ctrl => &s.ctrl,
        StreamId::Hdr => &s.hdr,
        StreamId::Nuc => &s.nuc,
        StreamId::Case => &s.case_rl,
        StreamId::Quality => &s.quality,
        StreamId::Extra => &[],
    }
}

fn literal_codec(config: &Config, id: StreamId) -> CodecId {
    match config.codec(id) {
        // literal bytes are plain symbols, not codes
        CodecId::MarkovMix => CodecId::BwtCm,
        c => c,
    }
}

/// Encode `target` against `reference` into a referential container.
pub fn diff_container(reference: &[u8], reference_name: &str, target: &[u8], config: &Config) -> Result<Vec<u8>> {
    config.validate()?;
    let rs = stream::factor(reference)?;
    let ts = stream::factor(target)?;
    container::with_threads(config.threads, || diff_streams(&rs, &ts, reference, reference_name, config))?
}

fn diff_streams(
    rs: &SemanticStreams,
    ts: &SemanticStreams,
    reference: &[u8],
    reference_name: &str,
    config: &Config,
) -> Result<Vec<u8>> {
    let ctx = config.ctx();
    let bs = config.block_size;
    let coded = DIFFED
        .par_iter()
        .map(|&id| {
            let (script, literals) = diff_stream(stream_of(rs, id), stream_of(ts, id));
            let script = container::encode_bytes(&script.serialize(), CodecId::LzExt, bs, &ctx)?;
            let codec = literal_codec(config, id);
            let literals = container::encode_bytes(&literals, codec, bs, &ctx)?;
            Ok((id, script, codec, literals))
        })
        .collect::<Result<Vec<_>>>()?;

    let header = Header { referential: true, nuc_width: None, profile: config.profile, block_size: bs as u32 };
    let mut index = ContainerIndex {
        records: ts.records.clone(),
        reference: Some(ReferenceId { name: reference_name.to_string(), hash: checksum(reference) }),
        ..Default::default()
    };
    let mut payloads = Vec::new();
    for (id, script, codec, literals) in coded {
        index.streams.push(stream_entry(id, Role::Script, CodecId::LzExt, &script));
        payloads.push(script.into_iter().map(|b| b.payload).collect());
        index.streams.push(stream_entry(id, Role::Literals, codec, &literals));
        payloads.push(literals.into_iter().map(|b| b.payload).collect());
    }
    Ok(format::write_container(&header, index, payloads))
}

/// Rebuild the target file from its referential container.
pub fn reconstruct(reference: &[u8], container_bytes: &[u8]) -> Result<Vec<u8>> {
    let reader = ContainerReader::open(container_bytes)?;
    let Some(rid) = reader.index.reference.as_ref().filter(|_| reader.header.referential) else {
        return Err(Error::InvalidConfig("not a referential container".into()));
    };
    if checksum(reference) != rid.hash {
        return Err(Error::ReferenceMismatch(format!("reference does not match '{}'", rid.name)));
    }
    let rs = stream::factor(reference)?;
    let parts = DIFFED
        .par_iter()
        .map(|&id| {
            let find = |role| {
                reader.find(id, role).ok_or_else(|| Error::CorruptPayload(format!("missing {} patch stream", id.name())))
            };
            let script = PatchScript::parse(&reader.decode_stream(find(Role::Script)?)?)?;
            let literals = reader.decode_stream(find(Role::Literals)?)?;
            apply_patch(stream_of(&rs, id), &script, &literals)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = parts.into_iter();
    let mut next = || it.next().unwrap();
    let s = SemanticStreams {
        ctrl: next(),
        hdr: next(),
        nuc: next(),
        case_rl: next(),
        quality: next(),
        records: reader.index.records.clone(),
    };
    stream::reassemble(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn acgt(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| b"ACGT"[rng.gen_range(0..4)]).collect()
    }

    #[test]
    fn identity_is_one_copy() {
        let r = acgt(5000, 1);
        let (s, lit) = diff_stream(&r, &r);
        assert_eq!(s.ops, [Op::Copy { pos: 0, len: 5000 }]);
        assert!(lit.is_empty());
        assert_eq!(apply_patch(&r, &s, &lit).unwrap(), r);
    }

    #[test]
    fn empty_reference_is_one_literal() {
        let t = acgt(300, 2);
        let (s, lit) = diff_stream(b"", &t);
        assert_eq!(s.ops, [Op::Literal { len: 300 }]);
        assert_eq!(lit, t);
        assert_eq!(apply_patch(b"", &s, &lit).unwrap(), t);
    }

    #[test]
    fn script_serialization() {
        let s = PatchScript { ops: vec![Op::Copy { pos: 10, len: 30 }, Op::Literal { len: 2 }, Op::Copy { pos: 5, len: 100 }] };
        let b = s.serialize();
        assert_eq!(b, [61, 20, 4, 201, 1, 69]);
        assert_eq!(PatchScript::parse(&b).unwrap(), s);
    }

    #[test]
    fn bad_scripts_rejected() {
        let r = b"ACGTACGT";
        let s = PatchScript { ops: vec![Op::Copy { pos: 4, len: 5 }] };
        assert!(matches!(apply_patch(r, &s, &[]), Err(Error::CorruptScript(_))));
        let s = PatchScript { ops: vec![Op::Literal { len: 3 }] };
        assert!(matches!(apply_patch(r, &s, b"AC"), Err(Error::CorruptScript(_))));
        assert!(matches!(apply_patch(r, &PatchScript::default(), b"A"), Err(Error::CorruptScript(_))));
        assert!(matches!(PatchScript::parse(&[3, 3]), Err(Error::CorruptScript(_))));
        assert!(matches!(PatchScript::parse(&[0x81]), Err(Error::CorruptScript(_))));
    }

    #[test]
    fn bloom_has_no_false_negatives() {
        let r = acgt(100_000, 3);
        let idx = MatchIndex::new(&r);
        assert!(r.windows(Q).all(|g| idx.bloom().contains(g)));
        let other = acgt(20_000, 4);
        let fp = other.windows(Q).filter(|g| idx.bloom().contains(g)).count();
        assert!((fp as f64) < 0.02 * other.len() as f64, "{fp}");
    }

    #[test]
    fn separated_literal_runs() {
        let r = acgt(20_000, 5);
        let mut t = r.clone();
        let runs = 12;
        for i in 0..runs {
            let at = 1000 + i * 1500;
            for b in &mut t[at..at + 5] {
                *b = b'N';
            }
        }
        let (s, lit) = diff_stream(&r, &t);
        assert!((s.ops.len() as i64 - (2 * runs as i64 + 1)).abs() <= 1, "{}", s.ops.len());
        assert_eq!(lit.len(), 5 * runs);
        assert_eq!(apply_patch(&r, &s, &lit).unwrap(), t);
    }

    #[test]
    fn bound_values() {
        assert_eq!(conditional_entropy_bound(0.0, 4), 0.0);
        assert!((conditional_entropy_bound(0.5, 2) - 1.0).abs() < 1e-12);
        assert!((conditional_entropy_bound(0.006, 4) - 0.0624).abs() < 5e-4);
        assert_eq!(conditional_entropy_bound(1.0, 2), 0.0);
    }

    #[test]
    fn container_roundtrip_and_reference_check() {
        let r = format!(">chr1\n{}\n", String::from_utf8(acgt(30_000, 6)).unwrap()).into_bytes();
        let mut t = r.clone();
        t[100] = b'T';
        t[20_000] = b'a';
        let c = diff_container(&r, "ref.fa", &t, &Config::default()).unwrap();
        assert!(c.len() < 1000, "{}", c.len());
        assert_eq!(reconstruct(&r, &c).unwrap(), t);
        let mut wrong = r.clone();
        wrong[50] ^= 4;
        assert!(matches!(reconstruct(&wrong, &c), Err(Error::ReferenceMismatch(_))));
        assert!(matches!(container::decompress_file(&c), Err(Error::InvalidConfig(_))));
        let same = diff_container(&r, "ref.fa", &r, &Config::default()).unwrap();
        assert_eq!(reconstruct(&r, &same).unwrap(), r);
    }

    proptest! {
        #[test]
        fn any_pair_roundtrips(
            r in proptest::collection::vec(proptest::sample::select(b"ACGTN".to_vec()), 0..400),
            edits in proptest::collection::vec((any::<usize>(), any::<u8>()), 0..10),
            cut in any::<usize>(),
        ) {
            let mut t = r.clone();
            for (i, b) in edits {
                if !t.is_empty() {
                    let i = i % t.len();
                    t[i] = b;
                }
            }
            if !t.is_empty() && cut % 3 == 0 {
                let k = cut % t.len();
                t.rotate_left(k);
            }
            let (s, lit) = diff_stream(&r, &t);
            prop_assert_eq!(apply_patch(&r, &PatchScript::parse(&s.serialize()).unwrap(), &lit).unwrap(), t);
        }
    }
}
