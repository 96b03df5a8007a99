//! Indexed block container: per-stream codec assignment, checksummed
//! blocks, and random-access slicing by record coordinates.

pub mod format;

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

pub use format::{
    checksum, BlockEntry, CodecId, ContainerIndex, Header, ReferenceId, Role, StreamEntry, StreamId,
};

use crate::bwtcm;
use crate::coder::{quality, LzBackend, Zstd};
use crate::error::{BlockLocation, Error, Result};
use crate::mix::{self, Profile};
use crate::pack::{self, Width};
use crate::stream::{self, SemanticStreams};

pub const DEFAULT_BLOCK_SIZE: usize = 16 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Codec per stream, indexed by `StreamId as usize`.
    pub codecs: [CodecId; 6],
    /// Raw bytes per block (symbols for NUC).
    pub block_size: usize,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub profile: Profile,
    pub lz_level: i32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            codecs: [
                CodecId::LzExt,
                CodecId::LzExt,
                CodecId::BwtCm,
                CodecId::Raw,
                CodecId::QualityO1,
                CodecId::Raw,
            ],
            block_size: DEFAULT_BLOCK_SIZE,
            threads: 0,
            profile: Profile::Lite,
            lz_level: Zstd::default().level,
        }
    }
}

impl Config {
    pub fn with_nuc_codec(mut self, codec: CodecId) -> Self {
        self.codecs[StreamId::Nuc as usize] = codec;
        self
    }

    pub fn codec(&self, id: StreamId) -> CodecId {
        self.codecs[id as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.block_size > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("block size {} out of range", self.block_size)));
        }
        for id in StreamId::ALL {
            if self.codec(id) == CodecId::MarkovMix && id != StreamId::Nuc {
                return Err(Error::InvalidConfig(format!("markov-mix cannot code {}", id.name())));
            }
        }
        Ok(())
    }

    pub(crate) fn ctx(&self) -> CodecCtx {
        CodecCtx { profile: self.profile, lz: Zstd { level: self.lz_level } }
    }
}

/// Run `f` on a pool of `threads` workers (0: the ambient pool).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CodecCtx {
    pub profile: Profile,
    pub lz: Zstd,
}

/// How a block's codec input relates to its raw bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Form {
    Bytes,
    /// One nucleotide code per byte; raw and lz-ext store them bit-packed.
    Codes(Width),
}

pub(crate) fn encode_payload(codec: CodecId, form: Form, data: &[u8], ctx: &CodecCtx) -> Result<Vec<u8>> {
    let packed = || match form {
        Form::Bytes => data.to_vec(),
        Form::Codes(w) => pack::pack_codes(data, w),
    };
    match codec {
        CodecId::Raw => Ok(packed()),
        CodecId::LzExt => ctx.lz.compress(&packed()),
        CodecId::BwtCm => bwtcm::compress(data),
        CodecId::MarkovMix => match form {
            Form::Codes(w) => mix::encode(data, w, ctx.profile),
            Form::Bytes => Err(Error::InvalidConfig("markov-mix needs nucleotide codes".into())),
        },
        CodecId::QualityO1 => Ok(quality::encode(data)),
    }
}

pub(crate) fn decode_payload(codec: CodecId, form: Form, payload: &[u8], n: u64, ctx: &CodecCtx) -> Result<Vec<u8>> {
    let n_usize = usize::try_from(n).map_err(|_| Error::CorruptPayload("block too large".into()))?;
    let packed_len = match form {
        Form::Bytes => n_usize,
        Form::Codes(w) => n_usize.div_ceil(8 / w.bits() as usize),
    };
    let unpacked = |bytes: Vec<u8>| -> Result<Vec<u8>> {
        match form {
            Form::Bytes if bytes.len() == n_usize => Ok(bytes),
            Form::Bytes => Err(Error::CorruptPayload("stored length mismatch".into())),
            Form::Codes(w) => pack::unpack_codes(&bytes, w, n_usize),
        }
    };
    match codec {
        CodecId::Raw => unpacked(payload.to_vec()),
        CodecId::LzExt => unpacked(ctx.lz.decompress(payload, packed_len)?),
        CodecId::BwtCm => bwtcm::decompress_exact(payload, n),
        CodecId::MarkovMix => match form {
            Form::Codes(w) => mix::decode_exact(payload, w, n_usize),
            Form::Bytes => Err(Error::CorruptPayload("markov-mix on a byte stream".into())),
        },
        CodecId::QualityO1 => quality::decode_exact(payload, n_usize),
    }
}

pub(crate) struct EncodedBlock {
    pub payload: Vec<u8>,
    pub raw_len: u64,
    pub checksum: u64,
}

/// Encode a byte stream in blocks of `block_size`.
pub(crate) fn encode_bytes(data: &[u8], codec: CodecId, block_size: usize, ctx: &CodecCtx) -> Result<Vec<EncodedBlock>> {
    data.par_chunks(block_size)
        .map(|b| {
            Ok(EncodedBlock {
                payload: encode_payload(codec, Form::Bytes, b, ctx)?,
                raw_len: b.len() as u64,
                checksum: checksum(b),
            })
        })
        .collect()
}

pub(crate) fn stream_entry(id: StreamId, role: Role, codec: CodecId, blocks: &[EncodedBlock]) -> StreamEntry {
    StreamEntry {
        id,
        role,
        codec,
        raw_len: blocks.iter().map(|b| b.raw_len).sum(),
        blocks: blocks
            .iter()
            .map(|b| BlockEntry { offset: 0, comp_len: b.payload.len() as u64, raw_len: b.raw_len, checksum: b.checksum })
            .collect(),
    }
}

/// NUC width used for a given codec: markov-mix always needs codes.
pub fn nuc_width(nuc: &[u8], codec: CodecId) -> Option<Width> {
    match (pack::choose_width(nuc), codec) {
        (None, CodecId::MarkovMix) => Some(Width::Four),
        (w, _) => w,
    }
}

/// Encode NUC blocks and the block-aligned EXTRA stream.
fn encode_nuc(
    nuc: &[u8],
    width: Option<Width>,
    codec: CodecId,
    extra_codec: CodecId,
    block_size: usize,
    ctx: &CodecCtx,
) -> Result<(Vec<EncodedBlock>, Vec<EncodedBlock>)> {
    let pairs: Vec<(EncodedBlock, EncodedBlock)> = nuc
        .par_chunks(block_size)
        .map(|b| {
            let (data, extra, form) = match width {
                Some(w) => {
                    let (codes, extra) = pack::to_codes(b, w);
                    (codes, extra, Form::Codes(w))
                }
                None => (b.to_vec(), Vec::new(), Form::Bytes),
            };
            let nuc_block = EncodedBlock {
                payload: encode_payload(codec, form, &data, ctx)?,
                raw_len: b.len() as u64,
                checksum: checksum(b),
            };
            let extra_block = EncodedBlock {
                payload: encode_payload(extra_codec, Form::Bytes, &extra, ctx)?,
                raw_len: extra.len() as u64,
                checksum: checksum(&extra),
            };
            Ok((nuc_block, extra_block))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Factor `input`, code every stream, and emit a container.
pub fn compress_file(input: &[u8], config: &Config) -> Result<Vec<u8>> {
    config.validate()?;
    let streams = stream::factor(input)?;
    with_threads(config.threads, || compress_streams(&streams, config))?
}

pub fn compress_streams(s: &SemanticStreams, config: &Config) -> Result<Vec<u8>> {
    config.validate()?;
    let ctx = config.ctx();
    let bs = config.block_size;
    let width = nuc_width(&s.nuc, config.codec(StreamId::Nuc));
    let (nuc, extra) =
        encode_nuc(&s.nuc, width, config.codec(StreamId::Nuc), config.codec(StreamId::Extra), bs, &ctx)?;
    let mut coded: Vec<(StreamId, Vec<EncodedBlock>)> = [
        (StreamId::Ctrl, &s.ctrl),
        (StreamId::Hdr, &s.hdr),
        (StreamId::Case, &s.case_rl),
        (StreamId::Quality, &s.quality),
    ]
    .par_iter()
    .map(|&(id, data)| Ok((id, encode_bytes(data, config.codec(id), bs, &ctx)?)))
    .collect::<Result<_>>()?;
    coded.push((StreamId::Nuc, nuc));
    coded.push((StreamId::Extra, extra));
    coded.sort_by_key(|(id, _)| *id);

    let header = Header { referential: false, nuc_width: width, profile: config.profile, block_size: bs as u32 };
    let mut index = ContainerIndex { records: s.records.clone(), ..Default::default() };
    let mut payloads = Vec::new();
    for (id, blocks) in coded {
        index.streams.push(stream_entry(id, Role::Plain, config.codec(id), &blocks));
        payloads.push(blocks.into_iter().map(|b| b.payload).collect());
    }
    Ok(format::write_container(&header, index, payloads))
}

pub fn decompress_file(container: &[u8]) -> Result<Vec<u8>> {
    ContainerReader::open(container)?.decompress()
}

pub fn decompress_file_with(container: &[u8], threads: usize) -> Result<Vec<u8>> {
    let r = ContainerReader::open(container)?;
    with_threads(threads, || r.decompress())?
}

/// Read access to a container held in memory. Safe to share between
/// threads; per-stream decode counters record how many blocks were decoded.
pub struct ContainerReader<'a> {
    bytes: &'a [u8],
    pub header: Header,
    pub index: ContainerIndex,
    ctx: CodecCtx,
    nuc_offsets: Vec<u64>,
    case_offsets: Vec<u64>,
    counters: Vec<AtomicU64>,
}

impl<'a> ContainerReader<'a> {
    pub fn open(bytes: &'a [u8]) -> Result<Self> {
        let (header, index) = format::read_container(bytes)?;
        let mut nuc_offsets = Vec::with_capacity(index.records.len() + 1);
        let mut case_offsets = Vec::with_capacity(index.records.len() + 1);
        let (mut a, mut b) = (0u64, 0u64);
        for r in &index.records {
            nuc_offsets.push(a);
            case_offsets.push(b);
            a += r.nuc_len;
            b += r.case_len;
        }
        nuc_offsets.push(a);
        case_offsets.push(b);
        let counters = index.streams.iter().map(|_| AtomicU64::new(0)).collect();
        let ctx = CodecCtx { profile: header.profile, lz: Zstd::default() };
        Ok(ContainerReader { bytes, header, index, ctx, nuc_offsets, case_offsets, counters })
    }

    pub fn container_len(&self) -> usize {
        self.bytes.len()
    }

    pub fn find(&self, id: StreamId, role: Role) -> Option<usize> {
        self.index.streams.iter().position(|s| s.id == id && s.role == role)
    }

    fn plain(&self, id: StreamId) -> Result<usize> {
        self.find(id, Role::Plain)
            .ok_or_else(|| Error::CorruptPayload(format!("container has no {} stream", id.name())))
    }

    /// Blocks decoded so far from the plain stream `id`.
    pub fn decode_count(&self, id: StreamId) -> u64 {
        self.find(id, Role::Plain).map_or(0, |i| self.counters[i].load(Ordering::Relaxed))
    }

    pub fn reset_counters(&self) {
        for c in &self.counters {
            c.store(0, Ordering::Relaxed);
        }
    }

    /// Decode and verify block `j` of stream entry `si`.
    pub fn decode_block(&self, si: usize, j: usize) -> Result<Vec<u8>> {
        let s = &self.index.streams[si];
        let b = s.blocks.get(j).ok_or_else(|| Error::RangeOutOfBounds(format!("{} has no block {j}", s.label())))?;
        self.counters[si].fetch_add(1, Ordering::Relaxed);
        let payload = &self.bytes[b.offset as usize..(b.offset + b.comp_len) as usize];
        let mismatch = || Error::ChecksumMismatch(BlockLocation::Block { stream: s.label(), block: j });
        let nuc_width = match (s.id, s.role) {
            (StreamId::Nuc, Role::Plain) => self.header.nuc_width,
            _ => None,
        };
        let form = nuc_width.map_or(Form::Bytes, Form::Codes);
        let data = decode_payload(s.codec, form, payload, b.raw_len, &self.ctx).map_err(|e| match e {
            Error::Io(_) => e,
            _ => mismatch(),
        })?;
        let raw = match nuc_width {
            Some(w) => {
                let extra = self.decode_block(self.plain(StreamId::Extra)?, j)?;
                pack::from_codes(&data, w, &extra).map_err(|_| mismatch())?
            }
            None => data,
        };
        if checksum(&raw) != b.checksum {
            return Err(mismatch());
        }
        Ok(raw)
    }

    /// Decode a whole stream entry, blocks in parallel.
    pub fn decode_stream(&self, si: usize) -> Result<Vec<u8>> {
        let parts: Vec<Vec<u8>> = (0..self.index.streams[si].blocks.len())
            .into_par_iter()
            .map(|j| self.decode_block(si, j))
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    }

    pub fn streams(&self) -> Result<SemanticStreams> {
        if self.header.referential {
            return Err(Error::InvalidConfig("referential container: decode it with its reference".into()));
        }
        let get = |id| self.decode_stream(self.plain(id)?);
        let ((ctrl, hdr), (nuc, (case_rl, quality))) = rayon::join(
            || (get(StreamId::Ctrl), get(StreamId::Hdr)),
            || (get(StreamId::Nuc), rayon::join(|| get(StreamId::Case), || get(StreamId::Quality))),
        );
        Ok(SemanticStreams {
            ctrl: ctrl?,
            hdr: hdr?,
            nuc: nuc?,
            case_rl: case_rl?,
            quality: quality?,
            records: self.index.records.clone(),
        })
    }

    pub fn decompress(&self) -> Result<Vec<u8>> {
        stream::reassemble(&self.streams()?)
    }

    /// Byte range `range` of stream entry `si`, decoding only overlapping blocks.
    fn stream_range(&self, si: usize, range: Range<u64>) -> Result<Vec<u8>> {
        if range.is_empty() {
            return Ok(Vec::new());
        }
        let bs = u64::from(self.header.block_size);
        let first = (range.start / bs) as usize;
        let last = ((range.end - 1) / bs) as usize;
        let parts: Vec<Vec<u8>> = (first..=last).into_par_iter().map(|j| self.decode_block(si, j)).collect::<Result<_>>()?;
        let joined = parts.concat();
        let base = first as u64 * bs;
        joined
            .get((range.start - base) as usize..(range.end - base) as usize)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| Error::RangeOutOfBounds("range beyond stream end".into()))
    }

    /// Symbols `range` of record `record`, case restored.
    pub fn slice(&self, record: usize, range: Range<u64>) -> Result<Vec<u8>> {
        if self.header.referential {
            return Err(Error::InvalidConfig("slicing needs a non-referential container".into()));
        }
        let rec = self.index.records.get(record).ok_or_else(|| {
            Error::RangeOutOfBounds(format!("record {record} of {}", self.index.records.len()))
        })?;
        if range.start > range.end || range.end > rec.nuc_len {
            return Err(Error::RangeOutOfBounds(format!(
                "{}..{} outside record {record} of length {}",
                range.start, range.end, rec.nuc_len
            )));
        }
        let off = self.nuc_offsets[record];
        let mut seq = self.stream_range(self.plain(StreamId::Nuc)?, off + range.start..off + range.end)?;
        if !seq.is_empty() {
            let c0 = self.case_offsets[record];
            let case = self.stream_range(self.plain(StreamId::Case)?, c0..c0 + rec.case_len)?;
            stream::apply_case(&case, rec.nuc_len, range.start, &mut seq)?;
        }
        Ok(seq)
    }

    /// Compressed size of each stream entry, in index order.
    pub fn stream_sizes(&self) -> Vec<(&'static str, CodecId, u64, u64)> {
        self.index.streams.iter().map(|s| (s.label(), s.codec, s.raw_len, s.comp_len())).collect()
    }
}
