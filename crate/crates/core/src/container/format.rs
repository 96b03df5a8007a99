//! Container wire format.
//!
//! ```text
//! header   := "HKT1" u8 version u8 flags u8 checksum_algo u8 nuc_width u8 profile u32le block_size
//! payloads := block bytes, stream by stream, block by block
//! index    := varint n_streams stream* varint n_records (varint nuc_len varint case_len)* reference
//! stream   := u8 id u8 role u8 codec varint raw_len varint n_blocks
//!             (varint offset varint comp_len varint raw_len u64le checksum)*
//! reference:= u8 0 | u8 1 varint name_len name u64le content_hash
//! trailer  := u64le index_offset u64le index_len u64le index_checksum "HKT1"
//! ```
//!
//! `flags` bit 0 marks a referential container. Checksums are xxh3-64 over
//! the raw block bytes (algorithm id 1). NUC raw sizes count symbols; a NUC
//! block is checksummed over its ASCII symbols after the EXTRA block of the
//! same index has been applied.

use crate::error::{BlockLocation, Error, Result};
use crate::mix::Profile;
use crate::pack::Width;
use crate::stream::RecordSpan;
use crate::varint::{self, Cursor};

pub const MAGIC: &[u8; 4] = b"HKT1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 13;
pub const TRAILER_LEN: usize = 28;
pub const CHECKSUM_XXH3: u8 = 1;
const FLAG_REFERENTIAL: u8 = 1;

pub fn checksum(data: &[u8]) -> u64 {
    xxhash_rust::xxh3::xxh3_64(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamId {
    Ctrl = 0,
    Hdr = 1,
    Nuc = 2,
    Case = 3,
    Quality = 4,
    Extra = 5,
}

impl StreamId {
    pub const ALL: [StreamId; 6] =
        [StreamId::Ctrl, StreamId::Hdr, StreamId::Nuc, StreamId::Case, StreamId::Quality, StreamId::Extra];

    pub fn name(self) -> &'static str {
        match self {
            StreamId::Ctrl => "CTRL",
            StreamId::Hdr => "HDR",
            StreamId::Nuc => "NUC",
            StreamId::Case => "CASE",
            StreamId::Quality => "QUALITY",
            StreamId::Extra => "EXTRA",
        }
    }

    pub fn from_u8(v: u8) -> Result<StreamId> {
        StreamId::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::CorruptPayload(format!("unknown stream id {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecId {
    Raw = 0,
    LzExt = 1,
    BwtCm = 2,
    MarkovMix = 3,
    QualityO1 = 4,
}

impl CodecId {
    pub fn name(self) -> &'static str {
        match self {
            CodecId::Raw => "raw",
            CodecId::LzExt => "lz-ext",
            CodecId::BwtCm => "bwt-cm",
            CodecId::MarkovMix => "markov-mix",
            CodecId::QualityO1 => "quality-o1",
        }
    }

    pub fn from_u8(v: u8) -> Result<CodecId> {
        Ok(match v {
            0 => CodecId::Raw,
            1 => CodecId::LzExt,
            2 => CodecId::BwtCm,
            3 => CodecId::MarkovMix,
            4 => CodecId::QualityO1,
            _ => return Err(Error::UnknownCodec(v)),
        })
    }
}

/// What a stream entry holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Plain = 0,
    /// Referential copy/literal descriptors.
    Script = 1,
    /// Referential literal bytes.
    Literals = 2,
}

impl Role {
    fn from_u8(v: u8) -> Result<Role> {
        match v {
            0 => Ok(Role::Plain),
            1 => Ok(Role::Script),
            2 => Ok(Role::Literals),
            _ => Err(Error::CorruptPayload(format!("unknown stream role {v}"))),
        }
    }
}

/// Stable label used in error locations, e.g. `NUC` or `HDR.script`.
pub fn stream_label(id: StreamId, role: Role) -> &'static str {
    use StreamId::*;
    match (role, id) {
        (Role::Plain, _) => id.name(),
        (Role::Script, Ctrl) => "CTRL.script",
        (Role::Script, Hdr) => "HDR.script",
        (Role::Script, Nuc) => "NUC.script",
        (Role::Script, Case) => "CASE.script",
        (Role::Script, Quality) => "QUALITY.script",
        (Role::Script, Extra) => "EXTRA.script",
        (Role::Literals, Ctrl) => "CTRL.literals",
        (Role::Literals, Hdr) => "HDR.literals",
        (Role::Literals, Nuc) => "NUC.literals",
        (Role::Literals, Case) => "CASE.literals",
        (Role::Literals, Quality) => "QUALITY.literals",
        (Role::Literals, Extra) => "EXTRA.literals",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub referential: bool,
    pub nuc_width: Option<Width>,
    pub profile: Profile,
    pub block_size: u32,
}

impl Header {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(if self.referential { FLAG_REFERENTIAL } else { 0 });
        out.push(CHECKSUM_XXH3);
        out.push(self.nuc_width.map_or(0, |w| w.bits() as u8));
        out.push(self.profile.id());
        out.extend_from_slice(&self.block_size.to_le_bytes());
    }

    pub fn parse(buf: &[u8]) -> Result<Header> {
        if buf.len() < 4 || &buf[..4] != MAGIC {
            return Err(Error::CorruptPayload("not a container (bad magic)".into()));
        }
        if buf.len() < HEADER_LEN {
            return Err(Error::TruncatedContainer("header cut short".into()));
        }
        if buf[4] != VERSION {
            return Err(Error::CorruptPayload(format!("unsupported container version {}", buf[4])));
        }
        if buf[5] & !FLAG_REFERENTIAL != 0 {
            return Err(Error::CorruptPayload("unknown header flags".into()));
        }
        if buf[6] != CHECKSUM_XXH3 {
            return Err(Error::CorruptPayload(format!("unknown checksum algorithm {}", buf[6])));
        }
        let nuc_width = match buf[7] {
            0 => None,
            b => Some(Width::from_bits(u32::from(b)).ok_or_else(|| Error::CorruptPayload("bad NUC width".into()))?),
        };
        let block_size = u32::from_le_bytes(buf[9..13].try_into().unwrap());
        if block_size == 0 {
            return Err(Error::CorruptPayload("zero block size".into()));
        }
        Ok(Header {
            referential: buf[5] & FLAG_REFERENTIAL != 0,
            nuc_width,
            profile: Profile::from_id(buf[8])?,
            block_size,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    pub offset: u64,
    pub comp_len: u64,
    pub raw_len: u64,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamEntry {
    pub id: StreamId,
    pub role: Role,
    pub codec: CodecId,
    pub raw_len: u64,
    pub blocks: Vec<BlockEntry>,
}

impl StreamEntry {
    pub fn comp_len(&self) -> u64 {
        self.blocks.iter().map(|b| b.comp_len).sum()
    }

    pub fn label(&self) -> &'static str {
        stream_label(self.id, self.role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceId {
    pub name: String,
    pub hash: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContainerIndex {
    pub streams: Vec<StreamEntry>,
    pub records: Vec<RecordSpan>,
    pub reference: Option<ReferenceId>,
}

impl ContainerIndex {
    pub fn write(&self, out: &mut Vec<u8>) {
        varint::put_u64(out, self.streams.len() as u64);
        for s in &self.streams {
            out.extend_from_slice(&[s.id as u8, s.role as u8, s.codec as u8]);
            varint::put_u64(out, s.raw_len);
            varint::put_u64(out, s.blocks.len() as u64);
            for b in &s.blocks {
                varint::put_u64(out, b.offset);
                varint::put_u64(out, b.comp_len);
                varint::put_u64(out, b.raw_len);
                out.extend_from_slice(&b.checksum.to_le_bytes());
            }
        }
        varint::put_u64(out, self.records.len() as u64);
        for r in &self.records {
            varint::put_u64(out, r.nuc_len);
            varint::put_u64(out, r.case_len);
        }
        match &self.reference {
            None => out.push(0),
            Some(r) => {
                out.push(1);
                varint::put_u64(out, r.name.len() as u64);
                out.extend_from_slice(r.name.as_bytes());
                out.extend_from_slice(&r.hash.to_le_bytes());
            }
        }
    }

    pub fn parse(buf: &[u8]) -> Result<ContainerIndex> {
        let mut c = Cursor::new(buf);
        let n_streams = c.usize()?;
        let mut streams = Vec::with_capacity(n_streams.min(64));
        for _ in 0..n_streams {
            let id = StreamId::from_u8(c.u8()?)?;
            let role = Role::from_u8(c.u8()?)?;
            let codec = CodecId::from_u8(c.u8()?)?;
            let raw_len = c.u64()?;
            let n_blocks = c.usize()?;
            let mut blocks = Vec::with_capacity(n_blocks.min(c.remaining()));
            for _ in 0..n_blocks {
                blocks.push(BlockEntry {
                    offset: c.u64()?,
                    comp_len: c.u64()?,
                    raw_len: c.u64()?,
                    checksum: c.u64_le()?,
                });
            }
            streams.push(StreamEntry { id, role, codec, raw_len, blocks });
        }
        let n_records = c.usize()?;
        let mut records = Vec::with_capacity(n_records.min(c.remaining()));
        for _ in 0..n_records {
            records.push(RecordSpan { nuc_len: c.u64()?, case_len: c.u64()? });
        }
        let reference = match c.u8()? {
            0 => None,
            1 => {
                let len = c.usize()?;
                let name = String::from_utf8(c.bytes(len)?.to_vec())
                    .map_err(|_| Error::CorruptPayload("reference name is not UTF-8".into()))?;
                Some(ReferenceId { name, hash: c.u64_le()? })
            }
            v => return Err(Error::CorruptPayload(format!("bad reference marker {v}"))),
        };
        if !c.is_empty() {
            return Err(Error::CorruptPayload("trailing bytes in index".into()));
        }
        Ok(ContainerIndex { streams, records, reference })
    }
}

/// Serialize a whole container from already encoded block payloads.
/// `payloads[i][j]` is block `j` of `index.streams[i]`; offsets in the
/// index are filled in here.
pub fn write_container(header: &Header, mut index: ContainerIndex, payloads: Vec<Vec<Vec<u8>>>) -> Vec<u8> {
    let body: usize = payloads.iter().flatten().map(Vec::len).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + body + 1024);
    header.write(&mut out);
    for (s, blocks) in index.streams.iter_mut().zip(payloads) {
        for (entry, p) in s.blocks.iter_mut().zip(blocks) {
            entry.offset = out.len() as u64;
            entry.comp_len = p.len() as u64;
            out.extend_from_slice(&p);
        }
    }
    let index_offset = out.len() as u64;
    index.write(&mut out);
    let index_len = out.len() as u64 - index_offset;
    let index_ck = checksum(&out[index_offset as usize..]);
    out.extend_from_slice(&index_offset.to_le_bytes());
    out.extend_from_slice(&index_len.to_le_bytes());
    out.extend_from_slice(&index_ck.to_le_bytes());
    out.extend_from_slice(MAGIC);
    out
}

/// Locate, verify and parse the index.
pub fn read_container(buf: &[u8]) -> Result<(Header, ContainerIndex)> {
    let header = Header::parse(buf)?;
    if buf.len() < HEADER_LEN + TRAILER_LEN || &buf[buf.len() - 4..] != MAGIC {
        return Err(Error::TruncatedContainer("trailer missing".into()));
    }
    let t = &buf[buf.len() - TRAILER_LEN..];
    let word = |i: usize| u64::from_le_bytes(t[8 * i..8 * i + 8].try_into().unwrap());
    let (off, len, ck) = (word(0), word(1), word(2));
    let limit = (buf.len() - TRAILER_LEN) as u64;
    if off < HEADER_LEN as u64 || off.checked_add(len) != Some(limit) {
        return Err(Error::TruncatedContainer("index position does not match file length".into()));
    }
    let raw = &buf[off as usize..limit as usize];
    if checksum(raw) != ck {
        return Err(Error::ChecksumMismatch(BlockLocation::Index));
    }
    let index = ContainerIndex::parse(raw)?;
    validate(&header, &index, off)?;
    Ok((header, index))
}

fn validate(header: &Header, index: &ContainerIndex, index_offset: u64) -> Result<()> {
    let bad = |m: String| Err(Error::CorruptPayload(m));
    let mut end = HEADER_LEN as u64;
    for s in &index.streams {
        let mut raw = 0u64;
        for b in &s.blocks {
            if b.offset != end {
                return bad(format!("{} block offsets are not contiguous", s.label()));
            }
            end = match b.offset.checked_add(b.comp_len) {
                Some(e) if e <= index_offset => e,
                _ => return bad(format!("{} block runs past the index", s.label())),
            };
            raw = raw.checked_add(b.raw_len).ok_or_else(|| Error::CorruptPayload("raw size overflow".into()))?;
        }
        if raw != s.raw_len {
            return bad(format!("{} raw sizes do not add up", s.label()));
        }
        let fixed = s.role == Role::Plain && s.id != StreamId::Extra;
        if fixed {
            let bs = u64::from(header.block_size);
            let n = s.blocks.len();
            if s.blocks.iter().take(n.saturating_sub(1)).any(|b| b.raw_len != bs)
                || s.blocks.last().is_some_and(|b| b.raw_len == 0 || b.raw_len > bs)
            {
                return bad(format!("{} blocks do not follow the block size", s.label()));
            }
        }
    }
    if end != index_offset {
        return bad("unindexed bytes before the index".into());
    }
    Ok(())
}
