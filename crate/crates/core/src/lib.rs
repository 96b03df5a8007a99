//! Lossless FASTA/FASTQ compression built from semantic stream factorization.
//!
//! An input file is split into six byte streams (control, headers,
//! nucleotides, case, quality, out-of-alphabet extras). Each stream is cut
//! into blocks and coded by an independently chosen codec; the results are
//! stored in an indexed container that supports checksum-verified random
//! access. Two codecs are implemented here from first principles:
//!
//! * [`bwtcm`]: a Burrows-Wheeler transform with an auxiliary anchor table,
//!   followed by a bitwise context-mixing arithmetic coder.
//! * [`mix`]: a blockwise Markov expert-competition coder over nucleotide
//!   symbols with an explicit unknown-symbol path.
//!
//! [`referential`] differences the same streams against a reference file.

pub mod bench;
pub mod bwt;
pub mod bwtcm;
pub mod coder;
pub mod container;
pub mod error;
pub mod mix;
pub mod pack;
pub mod referential;
pub mod sais;
pub mod stream;
pub mod varint;

pub use container::{compress_file, decompress_file, CodecId, Config, ContainerReader, StreamId};
pub use error::{Error, Result};
pub use stream::{factor, reassemble, SemanticStreams};
