use std::collections::BTreeMap;
use std::fmt;

use crate::pdf::{collect_content_streams, ContentStreamRef, PdfDocument, SkippedStream};
use crate::registry::{mark_eligibility, StegConfig};
use crate::scanner::{scan_stream_with_diagnostics, splice_all, OperatorSite, ScanDiagnostic};

use super::bits::{frame_payload, BitCursor, BitSink};
use super::digits::{embed_into_operand, read_lsb_bits};
use super::StegError;

/// The content streams of a document with their operator sites, eligibility
/// already marked.
#[derive(Debug, Clone)]
pub struct ScannedDocument {
    pub streams: Vec<(ContentStreamRef, Vec<OperatorSite>)>,
    pub skipped: Vec<SkippedStream>,
    pub diagnostics: Vec<ScanDiagnostic>,
}

impl ScannedDocument {
    /// Eligible slots in traversal order with the bit width and budget that
    /// apply to each: `(stream index, site index, slot index, n, p)`.
    fn walk<'a>(
        &'a self,
        cfg: &'a StegConfig,
    ) -> impl Iterator<Item = (usize, usize, usize, u32, crate::registry::Percent)> + 'a {
        self.streams
            .iter()
            .enumerate()
            .flat_map(move |(si, (_, sites))| {
                sites.iter().enumerate().flat_map(move |(ti, site)| {
                    let entry = cfg
                        .entry(&site.op_name)
                        .expect("eligibility checked the operator");
                    site.operands
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| s.eligible)
                        .map(move |(oi, slot)| {
                            let p = entry
                                .budget(slot.operand_index)
                                .expect("eligible slots have a budget");
                            (si, ti, oi, entry.default_n, p)
                        })
                })
            })
    }
}

pub fn scan_document(doc: &PdfDocument, cfg: &StegConfig) -> Result<ScannedDocument, StegError> {
    cfg.validate()?;
    let collected = collect_content_streams(doc);
    let mut out = ScannedDocument {
        streams: Vec::with_capacity(collected.streams.len()),
        skipped: collected.skipped,
        diagnostics: Vec::new(),
    };
    for stream in collected.streams {
        let scan = scan_stream_with_diagnostics(&stream.decoded_bytes, stream.owner);
        let mut sites = scan.sites;
        mark_eligibility(&mut sites, cfg)?;
        out.diagnostics.extend(scan.diagnostics);
        out.streams.push((stream, sites));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OperatorCapacity {
    pub sites: usize,
    pub slots: usize,
    pub bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Capacity {
    pub bits: u64,
    pub eligible_operands: usize,
    pub per_operator: BTreeMap<String, OperatorCapacity>,
}

impl Capacity {
    /// Whole payload bytes that fit after the length header.
    pub fn bytes(&self, header_bits: u32) -> u64 {
        self.bits.saturating_sub(u64::from(header_bits)) / 8
    }
}

pub fn capacity(doc: &PdfDocument, cfg: &StegConfig) -> Result<Capacity, StegError> {
    Ok(capacity_of(&scan_document(doc, cfg)?, cfg))
}

pub fn capacity_of(scanned: &ScannedDocument, cfg: &StegConfig) -> Capacity {
    let mut cap = Capacity::default();
    for (_, sites) in &scanned.streams {
        for site in sites {
            let eligible = site.operands.iter().filter(|s| s.eligible).count();
            if eligible == 0 {
                continue;
            }
            let n = cfg.entry(&site.op_name).map_or(0, |e| e.default_n);
            let row = cap.per_operator.entry(site.op_name.clone()).or_default();
            row.sites += 1;
            row.slots += eligible;
            row.bits += eligible as u64 * u64::from(n);
            cap.eligible_operands += eligible;
            cap.bits += eligible as u64 * u64::from(n);
        }
    }
    cap
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmbedReport {
    pub operands_visited: usize,
    pub operands_modified: usize,
    pub operands_exact_match: usize,
    /// Net byte growth of all rewritten operand tokens.
    pub digits_added: i64,
    pub bits_embedded: u64,
}

impl EmbedReport {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("operands_visited", self.operands_visited.to_string()),
            ("operands_modified", self.operands_modified.to_string()),
            (
                "operands_exact_match",
                self.operands_exact_match.to_string(),
            ),
            ("digits_added", self.digits_added.to_string()),
            ("bits_embedded", self.bits_embedded.to_string()),
        ]
    }
}

impl fmt::Display for EmbedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.key_values() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Hides `payload` in the eligible operands of `doc`.
pub fn embed_document(
    doc: &PdfDocument,
    payload: &[u8],
    cfg: &StegConfig,
) -> Result<(PdfDocument, EmbedReport), StegError> {
    let framed = frame_payload(payload)?;
    let scanned = scan_document(doc, cfg)?;
    let available = capacity_of(&scanned, cfg).bits;
    let required = framed.len() as u64 * 8;
    if required > available {
        return Err(StegError::InsufficientCapacity {
            required,
            available,
        });
    }

    let mut cursor = BitCursor::new(&framed);
    let mut report = EmbedReport::default();
    let mut edits: Vec<Vec<(std::ops::Range<usize>, String)>> =
        vec![Vec::new(); scanned.streams.len()];
    for (si, ti, oi, n, p) in scanned.walk(cfg) {
        if cursor.is_exhausted() {
            break;
        }
        let slot = &scanned.streams[si].1[ti].operands[oi];
        let (bits, consumed) = cursor.take(n);
        report.bits_embedded += consumed as u64;
        report.operands_visited += 1;
        let rewritten = embed_into_operand(&slot.number, bits, n, p);
        if rewritten == slot.number {
            report.operands_exact_match += 1;
            continue;
        }
        let token = rewritten.to_token();
        report.operands_modified += 1;
        report.digits_added += token.len() as i64 - slot.text.len() as i64;
        edits[si].push((slot.span.clone(), token));
    }

    let mut out = doc.clone();
    for ((stream, _), stream_edits) in scanned.streams.iter().zip(&edits) {
        if stream_edits.is_empty() {
            continue;
        }
        let decoded = splice_all(&stream.decoded_bytes, stream_edits);
        out.replace_stream(stream.owner, &decoded)?;
    }
    Ok((out, report))
}

/// Recovers a payload hidden by [`embed_document`] under the same config.
pub fn extract_document(doc: &PdfDocument, cfg: &StegConfig) -> Result<Vec<u8>, StegError> {
    let scanned = scan_document(doc, cfg)?;
    let available = capacity_of(&scanned, cfg).bits;
    let header_bits = cfg.header_bits as usize;
    let mut sink = BitSink::new();
    let mut wanted: Option<usize> = None;
    for (si, ti, oi, n, _) in scanned.walk(cfg) {
        let slot = &scanned.streams[si].1[ti].operands[oi];
        sink.push(read_lsb_bits(&slot.number, n), n);
        if wanted.is_none() && sink.len_bits() >= header_bits {
            let header = sink.bytes(0..header_bits / 8);
            let len = header.iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b));
            let total = header_bits as u64 + len * 8;
            if total > available {
                return Err(StegError::ImplausibleLength {
                    length: len,
                    available,
                });
            }
            wanted = Some(total as usize);
        }
        if wanted.is_some_and(|w| sink.len_bits() >= w) {
            break;
        }
    }
    match wanted {
        Some(w) if sink.len_bits() >= w => Ok(sink.bytes(header_bits / 8..w / 8).to_vec()),
        _ => Err(StegError::TruncatedMessage {
            read: sink.len_bits() as u64,
        }),
    }
}
