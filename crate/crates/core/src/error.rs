use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where a failed integrity check was detected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockLocation {
    Block { stream: &'static str, block: usize },
    Index,
}

impl fmt::Display for BlockLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLocation::Block { stream, block } => write!(f, "stream {stream} block {block}"),
            BlockLocation::Index => f.write_str("container index"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown input format: first byte is neither '>' nor '@'")]
    UnknownFormat,
    #[error("malformed record {record}: {reason}")]
    MalformedRecord { record: usize, reason: &'static str },
    #[error("CRLF line ending at byte {offset}")]
    NonCanonicalLineEnding { offset: usize },
    #[error("inconsistent streams: {0}")]
    InconsistentStreams(String),
    #[error("corrupt extra channel: {0}")]
    CorruptExtra(String),
    #[error("block of {0} bytes exceeds the supported size")]
    BlockTooLarge(u64),
    #[error("corrupt BWT block: {0}")]
    CorruptBlock(String),
    #[error("chunk size mismatch: {0}")]
    ChunkSizeMismatch(String),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(BlockLocation),
    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("truncated container: {0}")]
    TruncatedContainer(String),
    #[error("range out of bounds: {0}")]
    RangeOutOfBounds(String),
    #[error("corrupt patch script: {0}")]
    CorruptScript(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("reference mismatch: {0}")]
    ReferenceMismatch(String),
    #[error("external LZ backend: {0}")]
    Lz(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable, machine-parsable category string.
    pub fn category(&self) -> &'static str {
        match self {
            Error::UnknownFormat => "unknown-format",
            Error::MalformedRecord { .. } => "malformed-record",
            Error::NonCanonicalLineEnding { .. } => "non-canonical-line-ending",
            Error::InconsistentStreams(_) => "inconsistent-streams",
            Error::CorruptExtra(_) => "corrupt-extra",
            Error::BlockTooLarge(_) => "block-too-large",
            Error::CorruptBlock(_) => "corrupt-block",
            Error::ChunkSizeMismatch(_) => "chunk-size-mismatch",
            Error::CorruptPayload(_) => "corrupt-payload",
            Error::ChecksumMismatch(_) => "checksum-mismatch",
            Error::UnknownCodec(_) => "unknown-codec",
            Error::TruncatedContainer(_) => "truncated-container",
            Error::RangeOutOfBounds(_) => "range-out-of-bounds",
            Error::CorruptScript(_) => "corrupt-script",
            Error::InvalidConfig(_) => "invalid-config",
            Error::ReferenceMismatch(_) => "reference-mismatch",
            Error::Lz(_) => "lz-backend",
            Error::Io(_) => "io",
        }
    }
}
