//! Locates operator instances and their numeric operands in a decoded
//! content stream.
//!
//! Matching uses the per-operator masks
//!
//! ```text
//! (?:[\d\.\-]+\s+){a,b}op[\[\s]        every operator but TJ
//! \[.+?\]\s*?TJ                         TJ
//! [\d\.\-]+                             operands of every operator but TJ
//! [\d\.\-]+(?![^\(]*\))(?![^\<]*\>)     operands of TJ
//! ```
//!
//! run over a copy of the stream in which the interiors of strings, hex
//! strings, comments and inline image data are blanked out. On top of the
//! masks, a site must start at a token boundary, the operator token may also
//! end at any delimiter or at the end of the stream, and a TJ array may not
//! contain brackets of its own.

use std::ops::Range;
use std::sync::LazyLock;

use regex::bytes::Regex;
use thiserror::Error;

use crate::codec::DigitInteger;
use crate::pdf::lexer::{is_delimiter, is_regular, is_whitespace, literal_string_end};
use crate::pdf::ObjectId;
use crate::registry::OPERATORS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScanError {
    #[error("{op} matched without numeric operands")]
    NoOperands { op: String },
    #[error("{token:?} is not a number")]
    InvalidToken { token: String },
    #[error("span {span:?} is outside the stream or no longer holds {expected:?}")]
    SpanOutOfRange {
        span: Range<usize>,
        expected: String,
    },
}

/// One numeric operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperandSlot {
    /// Token as written in the stream.
    pub text: String,
    pub number: DigitInteger,
    /// Byte range of the token in the decoded stream.
    pub span: Range<usize>,
    pub operand_index: usize,
    pub eligible: bool,
}

impl OperandSlot {
    pub fn is_zero(&self) -> bool {
        self.number.is_zero()
    }

    pub fn sign(&self) -> i8 {
        if self.number.negative {
            -1
        } else {
            1
        }
    }

    pub fn digits(&self) -> &str {
        &self.number.digits
    }

    pub fn frac_count(&self) -> usize {
        self.number.frac_count
    }
}

/// One located operator instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSite {
    pub op_name: String,
    pub stream_owner: ObjectId,
    pub match_span: Range<usize>,
    pub operands: Vec<OperandSlot>,
    pub source_order: usize,
}

/// A site that matched a mask but was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanDiagnostic {
    pub owner: ObjectId,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    pub sites: Vec<OperatorSite>,
    pub diagnostics: Vec<ScanDiagnostic>,
}

const TERMINATOR: &str = r"(?:[\s\[\]()<>{}/%]|$)";

static GENERAL_MASKS: LazyLock<Vec<(&'static str, Regex)>> = LazyLock::new(|| {
    OPERATORS
        .iter()
        .filter(|(op, _, _)| *op != "TJ")
        .map(|&(op, a, b)| {
            let pattern = format!(r"(?-u)((?:[\d\.\-]+\s+){{{a},{b}}}{op}){TERMINATOR}");
            (op, Regex::new(&pattern).expect("operator mask compiles"))
        })
        .collect()
});

static TJ_MASK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?-u)(\[[^\[\]]+?\]\s*?TJ){TERMINATOR}")).expect("TJ mask compiles")
});

static OPERAND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?-u)[\d\.\-]+").expect("operand mask compiles"));

const BLANK: u8 = b'_';

/// Copy of `decoded` with string, hex string, comment and inline image
/// contents replaced by `_`. Delimiters stay in place, so offsets match.
pub fn mask_strings(decoded: &[u8]) -> Vec<u8> {
    let mut out = decoded.to_vec();
    let len = decoded.len();
    let mut i = 0;
    while i < len {
        match decoded[i] {
            b'(' => {
                let end = literal_string_end(decoded, i).unwrap_or(len);
                let close = if end <= len && decoded.get(end - 1) == Some(&b')') && end > i + 1 {
                    end - 1
                } else {
                    end
                };
                out[i + 1..close].fill(BLANK);
                i = end;
            }
            b'<' if decoded.get(i + 1) == Some(&b'<') => i += 2,
            b'<' => {
                let end = decoded[i + 1..]
                    .iter()
                    .position(|&b| b == b'>')
                    .map_or(len, |p| i + 1 + p);
                out[i + 1..end].fill(BLANK);
                i = end + 1;
            }
            b'%' => {
                let end = decoded[i..]
                    .iter()
                    .position(|&b| b == b'\n' || b == b'\r')
                    .map_or(len, |p| i + p);
                out[i + 1..end].fill(BLANK);
                i = end;
            }
            b'B' if token_at(decoded, i, b"BI") => {
                let end = inline_image_end(decoded, i + 2);
                out[i + 2..end].fill(BLANK);
                i = end;
            }
            _ => i += 1,
        }
    }
    out
}

/// True if `kw` occurs at `i` as a whole token.
fn token_at(buf: &[u8], i: usize, kw: &[u8]) -> bool {
    buf[i..].starts_with(kw)
        && (i == 0 || !is_regular(buf[i - 1]))
        && buf.get(i + kw.len()).is_none_or(|&b| !is_regular(b))
}

/// Offset of the `EI` token closing an inline image whose `BI` ended at
/// `from`, or the end of the buffer.
fn inline_image_end(buf: &[u8], from: usize) -> usize {
    let mut i = from;
    let mut data = false;
    while i + 1 < buf.len() {
        if !data && token_at(buf, i, b"ID") {
            data = true;
            i += 3;
            continue;
        }
        if data && is_whitespace(buf[i - 1]) && token_at(buf, i, b"EI") {
            return i;
        }
        i += 1;
    }
    buf.len()
}

fn starts_at_boundary(masked: &[u8], start: usize) -> bool {
    start == 0 || {
        let b = masked[start - 1];
        is_whitespace(b) || (is_delimiter(b) && b != b'/')
    }
}

/// Numeric operands of one matched site. `text` is the matched site, `base`
/// its offset in the stream. TJ operands inside `(...)` or `<...>` are
/// excluded by the lookahead rule.
fn operands_in(text: &[u8], base: usize, op: &str) -> Result<Vec<OperandSlot>, ScanError> {
    let is_tj = op == "TJ";
    let body = if is_tj {
        text
    } else {
        text.strip_suffix(op.as_bytes()).unwrap_or(text)
    };
    let mut slots = Vec::new();
    for m in OPERAND.find_iter(body) {
        if is_tj && !tj_lookahead_ok(&body[m.end()..]) {
            continue;
        }
        let token = String::from_utf8_lossy(m.as_bytes()).into_owned();
        let number = DigitInteger::parse(&token).ok_or(ScanError::InvalidToken {
            token: token.clone(),
        })?;
        slots.push(OperandSlot {
            text: token,
            number,
            span: base + m.start()..base + m.end(),
            operand_index: slots.len(),
            eligible: false,
        });
    }
    if slots.is_empty() && !is_tj {
        return Err(ScanError::NoOperands { op: op.to_string() });
    }
    Ok(slots)
}

/// `(?![^\(]*\))(?![^\<]*\>)` evaluated on the text after a token.
fn tj_lookahead_ok(rest: &[u8]) -> bool {
    let closes_first = |open: u8, close: u8| {
        rest.iter()
            .find(|&&b| b == open || b == close)
            .is_some_and(|&b| b == close)
    };
    !closes_first(b'(', b')') && !closes_first(b'<', b'>')
}

/// Extracts the numeric operands of a matched operator sequence; spans are
/// relative to `site_text`.
pub fn extract_operands(site_text: &str, op_name: &str) -> Result<Vec<OperandSlot>, ScanError> {
    operands_in(site_text.as_bytes(), 0, op_name)
}

/// Scans a decoded content stream. Sites come back in stream order with
/// `source_order` numbered from zero.
pub fn scan_stream(decoded: &[u8], owner: ObjectId) -> Vec<OperatorSite> {
    scan_stream_with_diagnostics(decoded, owner).sites
}

pub fn scan_stream_with_diagnostics(decoded: &[u8], owner: ObjectId) -> ScanOutput {
    let masked = mask_strings(decoded);
    let mut out = ScanOutput::default();
    let mut found = Vec::new();

    let mut record = |op: &str, span: Range<usize>, out: &mut ScanOutput| {
        match operands_in(&masked[span.clone()], span.start, op) {
            Ok(mut operands) => {
                for slot in &mut operands {
                    // Operands never lie in masked regions, so the source
                    // bytes equal the masked bytes here.
                    slot.text = String::from_utf8_lossy(&decoded[slot.span.clone()]).into_owned();
                }
                found.push(OperatorSite {
                    op_name: op.to_string(),
                    stream_owner: owner,
                    match_span: span,
                    operands,
                    source_order: 0,
                });
            }
            Err(e) => out.diagnostics.push(ScanDiagnostic {
                owner,
                offset: span.start,
                message: format!("{op} site dropped: {e}"),
            }),
        }
    };

    for (op, re) in GENERAL_MASKS.iter() {
        let mut pos = 0;
        while let Some(caps) = re.captures_at(&masked, pos) {
            let site = caps.get(1).expect("site group");
            if !starts_at_boundary(&masked, site.start()) {
                pos = site.start() + 1;
                continue;
            }
            record(op, site.range(), &mut out);
            pos = site.end();
        }
    }

    let mut pos = 0;
    while let Some(caps) = TJ_MASK.captures_at(&masked, pos) {
        let site = caps.get(1).expect("site group");
        record("TJ", site.range(), &mut out);
        pos = site.end();
    }

    found.sort_by_key(|s| (s.match_span.start, s.match_span.end));
    let mut last_end = 0;
    for site in found {
        if site.match_span.start < last_end {
            out.diagnostics.push(ScanDiagnostic {
                owner,
                offset: site.match_span.start,
                message: format!("{} site overlaps a previous site", site.op_name),
            });
            continue;
        }
        last_end = site.match_span.end;
        out.sites.push(site);
    }
    for (i, site) in out.sites.iter_mut().enumerate() {
        site.source_order = i;
    }
    out
}

/// Replaces the bytes of `slot` with `new_text`.
pub fn splice_operand(
    decoded: &[u8],
    slot: &OperandSlot,
    new_text: &str,
) -> Result<Vec<u8>, ScanError> {
    let span = slot.span.clone();
    if decoded.get(span.clone()) != Some(slot.text.as_bytes()) {
        return Err(ScanError::SpanOutOfRange {
            span,
            expected: slot.text.clone(),
        });
    }
    let mut out = Vec::with_capacity(decoded.len() + new_text.len());
    out.extend_from_slice(&decoded[..span.start]);
    out.extend_from_slice(new_text.as_bytes());
    out.extend_from_slice(&decoded[span.end..]);
    Ok(out)
}

/// Applies non-overlapping replacements sorted by span start in a single
/// pass. Equivalent to splicing each edit from right to left.
pub fn splice_all(decoded: &[u8], edits: &[(Range<usize>, String)]) -> Vec<u8> {
    let growth: isize = edits
        .iter()
        .map(|(r, t)| t.len() as isize - r.len() as isize)
        .sum();
    let mut out = Vec::with_capacity((decoded.len() as isize + growth.max(0)) as usize);
    let mut cursor = 0;
    for (span, text) in edits {
        debug_assert!(span.start >= cursor, "edits must be sorted and disjoint");
        out.extend_from_slice(&decoded[cursor..span.start]);
        out.extend_from_slice(text.as_bytes());
        cursor = span.end;
    }
    out.extend_from_slice(&decoded[cursor..]);
    out
}
