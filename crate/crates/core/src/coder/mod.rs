//! Entropy coding primitives shared by the codecs.

pub mod bin;
pub mod lz;
pub mod model;
pub mod quality;
pub mod range;

pub use bin::{BinDecoder, BinEncoder, PROB_BITS, PROB_MAX};
pub use lz::{LzBackend, Zstd};
pub use model::FreqModel;
pub use range::{RangeDecoder, RangeEncoder, MAX_TOTAL};
