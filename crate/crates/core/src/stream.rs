//! FASTA/FASTQ factorization into semantic streams and the exact inverse.
//!
//! CTRL layout (all integers are LEB128 varints unless marked `u8`):
//!
//! ```text
//! ctrl   := u8 file_kind (0 empty, 1 FASTA, 2 FASTQ)  n_records  record*  u8 final_newline
//! record := u8 tag ('>' | '@')  header_len  seq_len  n_runs  (line_width repeat){n_runs}  u8 qflag
//! ```
//!
//! `(line_width, repeat)` pairs run-length encode the lengths of the
//! sequence lines in order. `qflag` bit 0 marks a quality line, bit 1 a `+`
//! line that repeats the header, bit 2 a `+` line with other text (stored as
//! an extra HDR entry).
//!
//! CASE holds, per record, one `u8` initial-case flag followed by varint run
//! lengths of alternating case that sum to the record's sequence length.
//! Bytes without case (digits, `-`, `*`) extend the current run.

use crate::error::{Error, Result};
use crate::varint::{self, Cursor};

pub const TAG_FASTA: u8 = b'>';
pub const TAG_FASTQ: u8 = b'@';

const QF_QUALITY: u8 = 1;
const QF_PLUS_REPEATS_HEADER: u8 = 2;
const QF_PLUS_CUSTOM: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Empty,
    Fasta,
    Fastq,
}

/// Per-record lengths in the NUC and CASE streams; the record-level tier of
/// the container index is built from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordSpan {
    pub nuc_len: u64,
    pub case_len: u64,
}

/// The factored form of one FASTA/FASTQ file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticStreams {
    pub ctrl: Vec<u8>,
    pub hdr: Vec<u8>,
    pub nuc: Vec<u8>,
    pub case_rl: Vec<u8>,
    pub quality: Vec<u8>,
    pub records: Vec<RecordSpan>,
}

/// A decoded CTRL record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFrame {
    pub tag: u8,
    pub header_len: u64,
    pub seq_len: u64,
    pub line_runs: Vec<(u64, u64)>,
    pub qflag: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Framing {
    pub kind: FileKind,
    pub records: Vec<RecordFrame>,
    pub final_newline: bool,
}

struct Lines<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Lines<'a> {
    /// Next line without its terminator, and whether a '\n' terminated it.
    fn next_line(&mut self) -> Result<Option<(&'a [u8], bool)>> {
        if self.pos >= self.buf.len() {
            return Ok(None);
        }
        let rest = &self.buf[self.pos..];
        let (line, terminated) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        if terminated && line.last() == Some(&b'\r') {
            return Err(Error::NonCanonicalLineEnding { offset: self.pos + line.len() - 1 });
        }
        self.pos += line.len() + usize::from(terminated);
        Ok(Some((line, terminated)))
    }

    fn peek(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }
}

#[derive(Default)]
struct CaseRuns {
    initial_lower: bool,
    current: bool,
    run: u64,
    runs: Vec<u64>,
    started: bool,
}

impl CaseRuns {
    fn push(&mut self, b: u8) {
        let lower = if b.is_ascii_alphabetic() { b.is_ascii_lowercase() } else { self.current };
        if !self.started {
            self.started = true;
            self.initial_lower = lower;
            self.current = lower;
            self.run = 1;
        } else if lower == self.current {
            self.run += 1;
        } else {
            self.runs.push(self.run);
            self.current = lower;
            self.run = 1;
        }
    }

    fn finish(mut self, out: &mut Vec<u8>) {
        if self.started {
            self.runs.push(self.run);
        }
        out.push(u8::from(self.initial_lower));
        for r in self.runs {
            varint::put_u64(out, r);
        }
    }
}

fn run_length_lines(lens: &[u64]) -> Vec<(u64, u64)> {
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for &l in lens {
        match runs.last_mut() {
            Some((w, r)) if *w == l => *r += 1,
            _ => runs.push((l, 1)),
        }
    }
    runs
}

struct Builder {
    s: SemanticStreams,
    body: Vec<u8>,
    n_records: u64,
}

impl Builder {
    fn new() -> Self {
        Builder { s: SemanticStreams::default(), body: Vec::new(), n_records: 0 }
    }

    fn push_sequence(&mut self, seq: &[u8], case: &mut CaseRuns) {
        self.s.nuc.reserve(seq.len());
        for &b in seq {
            case.push(b);
            self.s.nuc.push(b.to_ascii_uppercase());
        }
    }

    fn frame(&mut self, tag: u8, header: &[u8], seq_len: u64, line_lens: &[u64], qflag: u8) {
        self.body.push(tag);
        varint::put_u64(&mut self.body, header.len() as u64);
        varint::put_u64(&mut self.body, seq_len);
        let runs = run_length_lines(line_lens);
        varint::put_u64(&mut self.body, runs.len() as u64);
        for (w, r) in runs {
            varint::put_u64(&mut self.body, w);
            varint::put_u64(&mut self.body, r);
        }
        self.body.push(qflag);
        self.s.hdr.extend_from_slice(header);
        self.s.hdr.push(b'\n');
        self.n_records += 1;
    }

    fn finish(mut self, kind: FileKind, final_newline: bool) -> SemanticStreams {
        let mut ctrl = Vec::with_capacity(self.body.len() + 12);
        ctrl.push(match kind {
            FileKind::Empty => 0,
            FileKind::Fasta => 1,
            FileKind::Fastq => 2,
        });
        varint::put_u64(&mut ctrl, self.n_records);
        ctrl.extend_from_slice(&self.body);
        ctrl.push(u8::from(final_newline));
        self.s.ctrl = ctrl;
        self.s
    }
}

/// Split a FASTA or FASTQ file into semantic streams.
pub fn factor(input: &[u8]) -> Result<SemanticStreams> {
    match input.first() {
        None => Ok(Builder::new().finish(FileKind::Empty, false)),
        Some(&TAG_FASTA) => factor_fasta(input),
        Some(&TAG_FASTQ) => factor_fastq(input),
        Some(_) => Err(Error::UnknownFormat),
    }
}

fn factor_fasta(input: &[u8]) -> Result<SemanticStreams> {
    let mut b = Builder::new();
    let mut lines = Lines { buf: input, pos: 0 };
    let mut line_lens = Vec::new();
    while let Some((header_line, _)) = lines.next_line()? {
        debug_assert_eq!(header_line[0], TAG_FASTA);
        let nuc_start = b.s.nuc.len();
        let case_start = b.s.case_rl.len();
        let mut case = CaseRuns::default();
        line_lens.clear();
        while lines.peek().is_some_and(|c| c != TAG_FASTA) {
            let (line, _) = lines.next_line()?.expect("peeked");
            b.push_sequence(line, &mut case);
            line_lens.push(line.len() as u64);
        }
        case.finish(&mut b.s.case_rl);
        let seq_len = (b.s.nuc.len() - nuc_start) as u64;
        b.frame(TAG_FASTA, &header_line[1..], seq_len, &line_lens, 0);
        b.s.records.push(RecordSpan {
            nuc_len: seq_len,
            case_len: (b.s.case_rl.len() - case_start) as u64,
        });
    }
    Ok(b.finish(FileKind::Fasta, input.last() == Some(&b'\n')))
}

fn factor_fastq(input: &[u8]) -> Result<SemanticStreams> {
    let mut b = Builder::new();
    let mut lines = Lines { buf: input, pos: 0 };
    let mut record = 0usize;
    let mut last_terminated = false;
    let malformed = |record, reason| Error::MalformedRecord { record, reason };
    while let Some((header_line, terminated)) = lines.next_line()? {
        if header_line.first() != Some(&TAG_FASTQ) {
            return Err(malformed(record, "record does not start with '@'"));
        }
        if !terminated {
            return Err(malformed(record, "header line has no terminator"));
        }
        let (seq, terminated) =
            lines.next_line()?.ok_or_else(|| malformed(record, "missing sequence line"))?;
        if !terminated {
            return Err(malformed(record, "sequence line has no terminator"));
        }
        let (plus, terminated) = lines.next_line()?.ok_or_else(|| malformed(record, "missing '+' line"))?;
        if plus.first() != Some(&b'+') {
            return Err(malformed(record, "third line does not start with '+'"));
        }
        if !terminated {
            return Err(malformed(record, "'+' line has no terminator"));
        }
        let (qual, qual_terminated) = match lines.next_line()? {
            Some(q) => q,
            // an empty quality line at EOF is indistinguishable from an absent one
            None if seq.is_empty() => (&[][..], false),
            None => return Err(malformed(record, "missing quality line")),
        };
        last_terminated = qual_terminated;
        if qual.len() != seq.len() {
            return Err(malformed(record, "sequence and quality lengths differ"));
        }
        let header = &header_line[1..];
        let plus_text = &plus[1..];
        let mut qflag = QF_QUALITY;
        if !plus_text.is_empty() {
            qflag |= if plus_text == header { QF_PLUS_REPEATS_HEADER } else { QF_PLUS_CUSTOM };
        }
        let nuc_start = b.s.nuc.len();
        let case_start = b.s.case_rl.len();
        let mut case = CaseRuns::default();
        b.push_sequence(seq, &mut case);
        case.finish(&mut b.s.case_rl);
        b.s.quality.extend_from_slice(qual);
        b.frame(TAG_FASTQ, header, seq.len() as u64, &[seq.len() as u64], qflag);
        if qflag & QF_PLUS_CUSTOM != 0 {
            b.s.hdr.extend_from_slice(plus_text);
            b.s.hdr.push(b'\n');
        }
        b.s.records.push(RecordSpan {
            nuc_len: (b.s.nuc.len() - nuc_start) as u64,
            case_len: (b.s.case_rl.len() - case_start) as u64,
        });
        record += 1;
    }
    Ok(b.finish(FileKind::Fastq, last_terminated))
}

/// Decode the CTRL stream.
pub fn parse_ctrl(ctrl: &[u8]) -> Result<Framing> {
    let bad = |m: &str| Error::InconsistentStreams(format!("ctrl: {m}"));
    let mut c = Cursor::new(ctrl);
    let kind = match c.u8().map_err(|_| bad("empty"))? {
        0 => FileKind::Empty,
        1 => FileKind::Fasta,
        2 => FileKind::Fastq,
        _ => return Err(bad("unknown file kind")),
    };
    let n = c.u64().map_err(|_| bad("record count"))?;
    let mut records = Vec::with_capacity(n.min(1 << 20) as usize);
    for _ in 0..n {
        let tag = c.u8().map_err(|_| bad("truncated record"))?;
        if tag != TAG_FASTA && tag != TAG_FASTQ {
            return Err(bad("bad record tag"));
        }
        let header_len = c.u64().map_err(|_| bad("header length"))?;
        let seq_len = c.u64().map_err(|_| bad("sequence length"))?;
        let n_runs = c.u64().map_err(|_| bad("line run count"))?;
        let mut line_runs = Vec::with_capacity(n_runs.min(1024) as usize);
        let mut covered = 0u64;
        for _ in 0..n_runs {
            let w = c.u64().map_err(|_| bad("line width"))?;
            let r = c.u64().map_err(|_| bad("line repeat"))?;
            covered = w
                .checked_mul(r)
                .and_then(|x| x.checked_add(covered))
                .ok_or_else(|| bad("line layout overflow"))?;
            line_runs.push((w, r));
        }
        if covered != seq_len {
            return Err(bad("line layout does not cover the sequence"));
        }
        let qflag = c.u8().map_err(|_| bad("quality flag"))?;
        records.push(RecordFrame { tag, header_len, seq_len, line_runs, qflag });
    }
    let final_newline = c.u8().map_err(|_| bad("final newline flag"))? != 0;
    if !c.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(Framing { kind, records, final_newline })
}

/// Record spans recomputed from CTRL and CASE.
pub fn record_spans(ctrl: &[u8], case_rl: &[u8]) -> Result<Vec<RecordSpan>> {
    let framing = parse_ctrl(ctrl)?;
    let mut c = Cursor::new(case_rl);
    let mut spans = Vec::with_capacity(framing.records.len());
    for r in &framing.records {
        let start = c.position();
        skip_case(&mut c, r.seq_len)?;
        spans.push(RecordSpan { nuc_len: r.seq_len, case_len: (c.position() - start) as u64 });
    }
    Ok(spans)
}

fn skip_case(c: &mut Cursor<'_>, seq_len: u64) -> Result<()> {
    let bad = || Error::InconsistentStreams("case runs do not match sequence length".into());
    c.u8().map_err(|_| bad())?;
    let mut sum = 0u64;
    while sum < seq_len {
        let r = c.u64().map_err(|_| bad())?;
        if r == 0 {
            return Err(bad());
        }
        sum += r;
    }
    if sum != seq_len {
        return Err(bad());
    }
    Ok(())
}

/// Lowercase the positions of `seq` that fall into lowercase runs of one
/// record's case data. `offset` is the position of `seq[0]` within the record.
pub fn apply_case(case_record: &[u8], seq_len: u64, offset: u64, seq: &mut [u8]) -> Result<()> {
    let bad = || Error::InconsistentStreams("case runs do not match sequence length".into());
    let mut c = Cursor::new(case_record);
    let mut lower = c.u8().map_err(|_| bad())? != 0;
    let end = offset + seq.len() as u64;
    let mut pos = 0u64;
    while pos < seq_len && pos < end {
        let r = c.u64().map_err(|_| bad())?;
        if r == 0 {
            return Err(bad());
        }
        let run_end = pos + r;
        if lower {
            let lo = pos.max(offset);
            let hi = run_end.min(end);
            if lo < hi {
                for b in &mut seq[(lo - offset) as usize..(hi - offset) as usize] {
                    b.make_ascii_lowercase();
                }
            }
        }
        pos = run_end;
        lower = !lower;
    }
    if pos > seq_len {
        return Err(bad());
    }
    Ok(())
}

/// Rebuild the original file. Exact inverse of [`factor`].
pub fn reassemble(s: &SemanticStreams) -> Result<Vec<u8>> {
    reassemble_with(s, true)
}

/// Rebuild the file; with `apply_case = false` every sequence byte stays
/// uppercase.
pub fn reassemble_with(s: &SemanticStreams, apply_case_runs: bool) -> Result<Vec<u8>> {
    let framing = parse_ctrl(&s.ctrl)?;
    let inconsistent = |m: &str| Error::InconsistentStreams(m.to_string());
    let mut out = Vec::with_capacity(
        s.nuc.len() + s.quality.len() + s.hdr.len() + s.nuc.len() / 40 + 4 * framing.records.len(),
    );
    let mut hdr_pos = 0usize;
    let mut nuc_pos = 0usize;
    let mut qual_pos = 0usize;
    let mut case = Cursor::new(&s.case_rl);

    let mut take_header = |len: Option<u64>| -> Result<&[u8]> {
        let rest = &s.hdr[hdr_pos..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| inconsistent("header stream exhausted"))?;
        if len.is_some_and(|l| l != end as u64) {
            return Err(inconsistent("header length mismatch"));
        }
        hdr_pos += end + 1;
        Ok(&rest[..end])
    };

    for r in &framing.records {
        let header = take_header(Some(r.header_len))?;
        out.push(r.tag);
        out.extend_from_slice(header);
        out.push(b'\n');

        let seq_len = usize::try_from(r.seq_len).map_err(|_| inconsistent("sequence length overflow"))?;
        if nuc_pos + seq_len > s.nuc.len() {
            return Err(inconsistent("nucleotide stream exhausted"));
        }
        let case_start = case.position();
        skip_case(&mut case, r.seq_len)?;
        let case_record = &s.case_rl[case_start..case.position()];

        let seq_start = out.len();
        if r.tag == TAG_FASTA {
            let mut p = nuc_pos;
            for &(w, rep) in &r.line_runs {
                for _ in 0..rep {
                    out.extend_from_slice(&s.nuc[p..p + w as usize]);
                    out.push(b'\n');
                    p += w as usize;
                }
            }
            if apply_case_runs {
                apply_case_lines(case_record, r.seq_len, &mut out[seq_start..])?;
            }
        } else {
            out.extend_from_slice(&s.nuc[nuc_pos..nuc_pos + seq_len]);
            if apply_case_runs {
                apply_case(case_record, r.seq_len, 0, &mut out[seq_start..])?;
            }
            out.push(b'\n');
            out.push(b'+');
            if r.qflag & QF_PLUS_REPEATS_HEADER != 0 {
                out.extend_from_slice(header);
            } else if r.qflag & QF_PLUS_CUSTOM != 0 {
                let text = take_header(None)?;
                out.extend_from_slice(text);
            }
            out.push(b'\n');
            if qual_pos + seq_len > s.quality.len() {
                return Err(inconsistent("quality stream exhausted"));
            }
            out.extend_from_slice(&s.quality[qual_pos..qual_pos + seq_len]);
            out.push(b'\n');
            qual_pos += seq_len;
        }
        nuc_pos += seq_len;
    }
    if nuc_pos != s.nuc.len() || qual_pos != s.quality.len() || hdr_pos != s.hdr.len() || !case.is_empty() {
        return Err(inconsistent("streams longer than the framing describes"));
    }
    if !framing.final_newline && !framing.records.is_empty() {
        out.pop();
    }
    Ok(out)
}

/// Case application over newline-interleaved sequence text.
fn apply_case_lines(case_record: &[u8], seq_len: u64, text: &mut [u8]) -> Result<()> {
    let bad = || Error::InconsistentStreams("case runs do not match sequence length".into());
    let mut c = Cursor::new(case_record);
    let mut lower = c.u8().map_err(|_| bad())? != 0;
    let mut remaining = if seq_len > 0 { c.u64().map_err(|_| bad())? } else { 0 };
    for b in text.iter_mut() {
        if *b == b'\n' {
            continue;
        }
        while remaining == 0 {
            remaining = c.u64().map_err(|_| bad())?;
            lower = !lower;
        }
        if lower {
            b.make_ascii_lowercase();
        }
        remaining -= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(x: &[u8]) -> SemanticStreams {
        let s = factor(x).unwrap();
        assert_eq!(reassemble(&s).unwrap(), x, "input {:?}", String::from_utf8_lossy(x));
        s
    }

    #[test]
    fn single_fasta_record() {
        let s = roundtrip(b">h\nACGT\n");
        assert_eq!(s.hdr, b"h\n");
        assert_eq!(s.nuc, b"ACGT");
        assert!(s.quality.is_empty());
        let f = parse_ctrl(&s.ctrl).unwrap();
        assert_eq!(f.kind, FileKind::Fasta);
        assert_eq!(f.records.len(), 1);
        assert_eq!(f.records[0].seq_len, 4);
        assert_eq!(f.records[0].line_runs, vec![(4, 1)]);
        assert!(f.final_newline);
    }

    #[test]
    fn case_split() {
        let s = roundtrip(b">h\nacGT\n");
        assert_eq!(s.nuc, b"ACGT");
        assert_eq!(s.case_rl, [1, 2, 2]);
    }

    #[test]
    fn minimal_fastq() {
        let s = roundtrip(b"@r\nACGT\n+\n!!!!\n");
        assert_eq!(s.quality, b"!!!!");
        let f = parse_ctrl(&s.ctrl).unwrap();
        assert_eq!(f.kind, FileKind::Fastq);
        assert_eq!(f.records[0].qflag & QF_QUALITY, QF_QUALITY);
    }

    #[test]
    fn edge_layouts() {
        for x in [
            &b""[..],
            b">",
            b">h",
            b">h\n",
            b">h\nACGT",
            b">h\n\n",
            b">h\n\n\nAC\n\n",
            b">a\nAC\nGT\nA\n>b\n>c\nNNNN\nnn",
            b">x y z\nAC-GT*acg-t\n",
            b"@r\n\n+\n\n",
            b"@r\n\n+\n",
            b"@r\nAC\n+r\n!!\n@s\nGT\n+other\n##",
            b"@r\nacgtNN\n+\nIIIIII",
        ] {
            roundtrip(x);
        }
    }

    #[test]
    fn wrapped_two_records() {
        let mut x = Vec::new();
        for (name, len) in [("chr1 test", 150usize), ("chr2", 121)] {
            x.extend_from_slice(format!(">{name}\n").as_bytes());
            let seq: Vec<u8> = (0..len).map(|i| b"ACGTacgtNn"[i * 7 % 10]).collect();
            for line in seq.chunks(60) {
                x.extend_from_slice(line);
                x.push(b'\n');
            }
        }
        let s = roundtrip(&x);
        assert_eq!(s.records.len(), 2);
        assert_eq!(s.records[0].nuc_len, 150);
        assert_eq!(record_spans(&s.ctrl, &s.case_rl).unwrap(), s.records);
    }

    #[test]
    fn uppercase_reassembly() {
        let s = factor(b">h\nacGTn\nAc\n").unwrap();
        assert_eq!(reassemble_with(&s, false).unwrap(), b">h\nACGTN\nAC\n");
    }

    #[test]
    fn errors() {
        assert!(matches!(factor(b"ACGT"), Err(Error::UnknownFormat)));
        assert!(matches!(factor(b">h\r\nACGT\r\n"), Err(Error::NonCanonicalLineEnding { .. })));
        assert!(matches!(factor(b"@r\nACGT\n+\n!!!\n"), Err(Error::MalformedRecord { .. })));
        assert!(matches!(factor(b"@r"), Err(Error::MalformedRecord { .. })));
        assert!(matches!(factor(b"@r\nAC\n+\n!!\n\n"), Err(Error::MalformedRecord { .. })));
        assert!(matches!(factor(b"@r\nAC\nGT\n!!\n"), Err(Error::MalformedRecord { .. })));
    }

    #[test]
    fn inconsistent_streams_detected() {
        let mut s = factor(b">h\nACGT\n").unwrap();
        s.nuc.pop();
        assert!(matches!(reassemble(&s), Err(Error::InconsistentStreams(_))));
        let mut s = factor(b">h\nACGT\n").unwrap();
        s.nuc.push(b'A');
        assert!(matches!(reassemble(&s), Err(Error::InconsistentStreams(_))));
    }

    #[test]
    fn apply_case_on_window() {
        let s = factor(b">h\nacgTTTTaa\n").unwrap();
        let mut win = b"GTTTTA".to_vec();
        apply_case(&s.case_rl, 10, 2, &mut win).unwrap();
        assert_eq!(win, b"gTTTTa");
    }
}
