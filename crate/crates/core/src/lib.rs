//! Hides payloads in the low bits of the numeric operands of PDF content
//! stream operators and recovers them.
//!
//! ```no_run
//! use opsteg_core::{embed_document, extract_document, parse_document, StegConfig};
//!
//! let cover = parse_document(&std::fs::read("cover.pdf")?)?;
//! let cfg = StegConfig::default();
//! let (stego, report) = embed_document(&cover, b"hello", &cfg)?;
//! std::fs::write("stego.pdf", stego.to_bytes())?;
//! assert_eq!(extract_document(&stego, &cfg)?, b"hello");
//! println!("{report}");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod codec;
pub mod fixture;
pub mod pdf;
pub mod registry;
pub mod scanner;

pub use codec::{
    capacity, embed_document, extract_document, Capacity, DigitInteger, EmbedReport, StegError,
};
pub use pdf::{parse_document, serialize_document, PdfDocument, PdfError};
pub use registry::{default_registry, load_config, ConfigError, StegConfig};
