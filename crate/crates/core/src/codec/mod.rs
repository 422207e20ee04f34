//! LSB embedding and extraction over the operands of a document.

mod bits;
mod digits;
mod engine;

use thiserror::Error;

use crate::pdf::PdfError;
use crate::registry::ConfigError;

pub use bits::{frame_payload, BitCursor, BitSink};
pub use digits::{
    embed_into_operand, read_lsb_bits, replace_low_bits, within_budget, DigitInteger,
};
pub use engine::{
    capacity, capacity_of, embed_document, extract_document, scan_document, Capacity, EmbedReport,
    OperatorCapacity, ScannedDocument,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StegError {
    #[error(transparent)]
    Pdf(#[from] PdfError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("payload needs {required} bits but the cover holds {available}")]
    InsufficientCapacity { required: u64, available: u64 },
    #[error("document ended after {read} bits, before the announced message length")]
    TruncatedMessage { read: u64 },
    #[error("announced length {length} bytes exceeds the cover capacity of {available} bits")]
    ImplausibleLength { length: u64, available: u64 },
    #[error("payload of {len} bytes does not fit a 32-bit length header")]
    PayloadTooLarge { len: usize },
}

#[cfg(test)]
mod tests;
