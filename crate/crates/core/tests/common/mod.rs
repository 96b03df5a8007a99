#![allow(dead_code)]

use rand::Rng;

pub const ACGT: &[u8; 4] = b"ACGT";

pub fn random_acgt<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| ACGT[rng.gen_range(0..4)]).collect()
}

/// Replace each position with a different base with probability `p`.
pub fn substitute<R: Rng>(rng: &mut R, seq: &[u8], p: f64) -> (Vec<u8>, usize) {
    let mut out = seq.to_vec();
    let mut n = 0;
    for b in out.iter_mut() {
        if rng.gen_bool(p) {
            let k = ACGT.iter().position(|c| c == b).unwrap_or(0);
            *b = ACGT[(k + rng.gen_range(1..4)) % 4];
            n += 1;
        }
    }
    (out, n)
}

pub fn fasta(records: &[(String, Vec<u8>)], width: usize) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, seq) in records {
        out.push(b'>');
        out.extend_from_slice(name.as_bytes());
        out.push(b'\n');
        for line in seq.chunks(width) {
            out.extend_from_slice(line);
            out.push(b'\n');
        }
    }
    out
}

/// Genome-like sequence: random bases with copied segments, lowercase
/// stretches and occasional N runs.
pub fn genome_like<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut s = Vec::with_capacity(n);
    while s.len() < n {
        let roll = rng.gen_range(0..100);
        if roll < 8 && s.len() > 5000 {
            let len = rng.gen_range(200..3000);
            let from = rng.gen_range(0..s.len() - len);
            let copy: Vec<u8> = s[from..from + len].to_vec();
            s.extend(copy);
        } else if roll < 10 {
            let len = rng.gen_range(50..800);
            s.extend(random_acgt(rng, len).iter().map(u8::to_ascii_lowercase));
        } else if roll < 11 {
            s.extend(std::iter::repeat_n(b'N', rng.gen_range(10..500)));
        } else {
            let len = rng.gen_range(100..2000);
            s.extend(random_acgt(rng, len));
        }
    }
    s.truncate(n);
    s
}

pub fn fastq<R: Rng>(rng: &mut R, reads: usize, len: usize) -> Vec<u8> {
    let mut out = Vec::new();
    for i in 0..reads {
        out.extend_from_slice(format!("@read{i} lane=1\n").as_bytes());
        let mut seq = random_acgt(rng, len);
        if i % 17 == 0 {
            seq[len / 2] = b'N';
        }
        out.extend_from_slice(&seq);
        out.extend_from_slice(b"\n+\n");
        let mut q = 35u8;
        for _ in 0..len {
            q = (q as i32 + rng.gen_range(-3..=3)).clamp(2, 40) as u8;
            out.push(b'!' + q);
        }
        out.push(b'\n');
    }
    out
}

/// Records of a FASTA file as (header, sequence with line breaks removed).
pub fn parse_fasta(data: &[u8]) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut out: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for line in data.split(|&b| b == b'\n') {
        if let Some(h) = line.strip_prefix(b">") {
            out.push((h.to_vec(), Vec::new()));
        } else if let Some(last) = out.last_mut() {
            last.1.extend_from_slice(line);
        }
    }
    out
}
