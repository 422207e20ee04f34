//! Byte-preserving PDF object model.
//!
//! Objects are discovered by a linear scan for `N G obj ... endobj`; the
//! cross-reference table of the input is only checked, never trusted. Each
//! object keeps its source bytes so that anything the editor does not touch
//! is written back unchanged, and a fresh classic xref table is built on
//! output.

mod content;
mod filter;
pub mod lexer;
mod object;

use std::collections::HashMap;
use std::ops::Range;

use thiserror::Error;

pub use content::{
    collect_content_streams, ContentStreamRef, ContentStreams, SkippedStream, StreamRole,
};
pub use filter::{encode_stream, filter_chain, FLATE};
pub use object::{dict_get, write_dict, Dictionary, Object, ObjectId};

use lexer::Lexer;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdfError {
    #[error("input does not start with a %PDF- header")]
    MalformedHeader,
    #[error("object at byte {offset} has no matching endobj")]
    UnbalancedObject { offset: usize },
    #[error("malformed object at byte {offset}: {message}")]
    MalformedObject {
        offset: usize,
        message: &'static str,
    },
    #[error(
        "object {0} is an object stream (/ObjStm); expand it first, e.g. \
         `qpdf <in> --object-streams=disable --stream-data=uncompress <out>`"
    )]
    ObjectStreamsPresent(ObjectId),
    #[error("encrypted documents are not supported")]
    Encrypted,
    #[error("unsupported stream filter: {0}")]
    UnsupportedFilter(String),
    #[error("corrupt stream data: {0}")]
    CorruptStream(String),
    #[error("no stream object {0}")]
    UnknownObject(ObjectId),
}

/// Where the cross-reference information of the input came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XrefStyle {
    /// A classic `xref` table was present and every in-use entry pointed at
    /// the object it names.
    ClassicTable,
    /// The table was missing, damaged, or stored as a cross-reference stream;
    /// object locations come from the linear scan alone.
    Reconstructed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum LengthEntry {
    Missing,
    /// Span of the integer token inside `head`.
    Direct(Range<usize>),
    Indirect(ObjectId),
}

/// One `N G obj ... endobj` region.
#[derive(Debug, Clone)]
pub struct IndirectObject {
    pub id: ObjectId,
    pub value: Object,
    /// Offset of the object number token in the source file.
    pub byte_offset: usize,
    head: Vec<u8>,
    stream: Option<Vec<u8>>,
    tail: Vec<u8>,
    length: LengthEntry,
    dict_open: Option<usize>,
    /// Whitespace and comments between `endobj` and the next token.
    trailing: Vec<u8>,
}

impl IndirectObject {
    pub fn dict(&self) -> Option<&Dictionary> {
        self.value.as_dict()
    }

    /// Stream payload as stored in the file (filters still applied).
    pub fn stream_bytes(&self) -> Option<&[u8]> {
        self.stream.as_deref()
    }

    pub fn is_stream(&self) -> bool {
        self.stream.is_some()
    }

    fn type_name(&self) -> Option<&[u8]> {
        self.dict()
            .and_then(|d| dict_get(d, "Type"))
            .and_then(Object::as_name)
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.head);
        if let Some(data) = &self.stream {
            out.extend_from_slice(data);
        }
        out.extend_from_slice(&self.tail);
        out.extend_from_slice(&self.trailing);
        if !matches!(out.last(), Some(b'\n' | b'\r')) {
            out.push(b'\n');
        }
    }

    /// Makes the direct `/Length` token (inserting one if absent) read `len`.
    fn set_direct_length(&mut self, len: usize) {
        let text = len.to_string().into_bytes();
        match self.length.clone() {
            LengthEntry::Direct(span) => {
                if self.head[span.clone()] != text[..] {
                    let end = span.start + text.len();
                    self.head.splice(span.clone(), text);
                    self.length = LengthEntry::Direct(span.start..end);
                }
            }
            LengthEntry::Missing => {
                let Some(open) = self.dict_open else { return };
                let at = open + 2;
                let mut insert = b" /Length ".to_vec();
                let start = at + insert.len();
                insert.extend_from_slice(&text);
                self.head.splice(at..at, insert);
                self.length = LengthEntry::Direct(start..start + text.len());
            }
            LengthEntry::Indirect(_) => return,
        }
        if let Object::Dictionary(d) = &mut self.value {
            d.insert(b"Length".to_vec(), Object::Integer(len as i64));
        }
    }

    fn set_integer_value(&mut self, value: usize) {
        if self.value == Object::Integer(value as i64) {
            return;
        }
        self.value = Object::Integer(value as i64);
        self.tail.clear();
        self.stream = None;
        if let Some(span) = integer_value_span(&self.head) {
            self.head.splice(span, value.to_string().into_bytes());
        } else {
            self.head = format!(
                "{} {} obj\n{}\nendobj",
                self.id.number, self.id.generation, value
            )
            .into_bytes();
        }
    }
}

/// A parsed PDF file.
#[derive(Debug, Clone)]
pub struct PdfDocument {
    pub raw_bytes: Vec<u8>,
    /// Objects in ascending source offset, one per object number.
    pub objects: Vec<IndirectObject>,
    pub trailer: Dictionary,
    pub header_version: String,
    pub xref_style: XrefStyle,
    prefix: Vec<u8>,
    index: HashMap<ObjectId, usize>,
}

const TRAILER_DROP_KEYS: &[&str] = &[
    "Prev",
    "XRefStm",
    "Type",
    "W",
    "Index",
    "Length",
    "Filter",
    "DecodeParms",
];

impl PdfDocument {
    pub fn get(&self, id: ObjectId) -> Option<&IndirectObject> {
        self.index.get(&id).map(|&i| &self.objects[i])
    }

    /// Follows a reference, returning direct values unchanged.
    pub fn resolve<'a>(&'a self, obj: &'a Object) -> Option<&'a Object> {
        let mut cur = obj;
        for _ in 0..32 {
            match cur {
                Object::Reference(id) => cur = &self.get(*id)?.value,
                other => return Some(other),
            }
        }
        None
    }

    /// Replaces the decoded content of stream `owner`, re-encoding it with the
    /// stream's own filter chain and updating its `/Length`.
    pub fn replace_stream(&mut self, owner: ObjectId, new_decoded: &[u8]) -> Result<(), PdfError> {
        let idx = *self
            .index
            .get(&owner)
            .ok_or(PdfError::UnknownObject(owner))?;
        let obj = &self.objects[idx];
        if !obj.is_stream() {
            return Err(PdfError::UnknownObject(owner));
        }
        if decode_stream(obj).as_deref() == Ok(new_decoded) {
            return Ok(());
        }
        let dict = obj.dict().cloned().unwrap_or_default();
        let encoded = encode_stream(new_decoded, &filter_chain(&dict)?)?;
        let len = encoded.len();
        self.objects[idx].stream = Some(encoded);
        self.sync_length(idx, len);
        Ok(())
    }

    fn sync_length(&mut self, idx: usize, len: usize) {
        match self.objects[idx].length.clone() {
            LengthEntry::Indirect(target) => match self.index.get(&target) {
                Some(&t) if !self.objects[t].is_stream() => self.objects[t].set_integer_value(len),
                // Dangling reference: fall back to a direct length.
                _ => {
                    let obj = &mut self.objects[idx];
                    let Some(span) = obj.dict_open.and_then(|_| length_value_span(&obj.head))
                    else {
                        return;
                    };
                    obj.length = LengthEntry::Direct(span);
                    obj.set_direct_length(len);
                }
            },
            _ => self.objects[idx].set_direct_length(len),
        }
    }

    /// Writes the document as a single revision with a classic xref table.
    pub fn to_bytes(&self) -> Vec<u8> {
        serialize_document(self)
    }
}

/// Returns the stream payload of `obj` with its filters removed.
pub fn decode_stream(obj: &IndirectObject) -> Result<Vec<u8>, PdfError> {
    let data = obj
        .stream
        .as_deref()
        .ok_or(PdfError::UnknownObject(obj.id))?;
    let empty = Dictionary::new();
    filter::decode_with_dict(obj.dict().unwrap_or(&empty), data)
}

/// Span of the integer in `N G obj <int> endobj`.
fn integer_value_span(head: &[u8]) -> Option<Range<usize>> {
    let mut lx = Lexer::new(head, 0);
    lx.unsigned()?;
    lx.unsigned()?;
    lx.expect_keyword(b"obj", "").ok()?;
    lx.skip_ws();
    let start = lx.pos;
    let len = head[start..]
        .iter()
        .take_while(|b| b.is_ascii_digit())
        .count();
    (len > 0).then_some(start..start + len)
}

/// End of the whitespace and comments starting at `pos`, stopping before an
/// end-of-file marker.
fn trivia_end(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && lexer::is_whitespace(bytes[pos]) {
            pos += 1;
        }
        if bytes.get(pos) != Some(&b'%') || bytes[pos..].starts_with(b"%%EOF") {
            return pos;
        }
        while pos < bytes.len() && !matches!(bytes[pos], b'\n' | b'\r') {
            pos += 1;
        }
    }
}

/// Re-locates the `/Length` value inside an object head.
fn length_value_span(head: &[u8]) -> Option<Range<usize>> {
    let mut lx = Lexer::new(head, 0);
    lx.unsigned()?;
    lx.unsigned()?;
    lx.expect_keyword(b"obj", "").ok()?;
    let (_, spans) = lx.dictionary(0).ok()?;
    spans.value_span("Length")
}

struct ScanState {
    objects: Vec<IndirectObject>,
    /// Every `N G obj` start seen, including superseded revisions.
    starts: HashMap<usize, ObjectId>,
    xref_entries: Vec<(ObjectId, usize)>,
    xref_damaged: bool,
    xref_tables: usize,
    trailers: Vec<(usize, Dictionary)>,
    xref_streams: usize,
    int_objects: Option<HashMap<ObjectId, usize>>,
}

/// Parses a PDF file.
pub fn parse_document(bytes: &[u8]) -> Result<PdfDocument, PdfError> {
    if !bytes.starts_with(b"%PDF-") {
        return Err(PdfError::MalformedHeader);
    }
    let header_version = {
        let rest = &bytes[5..];
        let end = rest
            .iter()
            .position(|&b| lexer::is_whitespace(b) || b == b'%')
            .unwrap_or(rest.len());
        String::from_utf8_lossy(&rest[..end]).into_owned()
    };

    let mut st = ScanState {
        objects: Vec::new(),
        starts: HashMap::new(),
        xref_entries: Vec::new(),
        xref_damaged: false,
        xref_tables: 0,
        trailers: Vec::new(),
        xref_streams: 0,
        int_objects: None,
    };

    let mut lx = Lexer::new(bytes, 0);
    loop {
        lx.skip_ws();
        if lx.at_end() {
            break;
        }
        let start = lx.pos;
        if lx.peek().is_some_and(|b| b.is_ascii_digit()) {
            if let Some(id) = object_header(&mut lx) {
                let obj = parse_indirect(bytes, &mut lx, start, id, &mut st)?;
                st.starts.insert(start, id);
                match obj.type_name() {
                    Some(b"ObjStm") => return Err(PdfError::ObjectStreamsPresent(id)),
                    Some(b"XRef") => {
                        st.xref_streams += 1;
                        if let Some(d) = obj.dict() {
                            st.trailers.push((start, d.clone()));
                        }
                    }
                    _ => st.objects.push(obj),
                }
                continue;
            }
            lx.pos = start;
        }
        let tok = lx.regular_token();
        match tok {
            b"xref" => parse_xref_section(&mut lx, &mut st),
            b"trailer" => match lx.dictionary(0) {
                Ok((dict, _)) => st.trailers.push((start, dict)),
                Err(_) => st.xref_damaged = true,
            },
            b"" => lx.pos += 1,
            _ => {}
        }
    }

    // Later definitions of an object number supersede earlier ones.
    let mut latest: HashMap<u32, usize> = HashMap::new();
    for (i, obj) in st.objects.iter().enumerate() {
        latest.insert(obj.id.number, i);
    }
    let objects: Vec<IndirectObject> = st
        .objects
        .into_iter()
        .enumerate()
        .filter(|(i, obj)| latest[&obj.id.number] == *i)
        .map(|(_, obj)| obj)
        .collect();
    let index: HashMap<ObjectId, usize> =
        objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();

    let mut trailer = st
        .trailers
        .iter()
        .max_by_key(|(off, _)| *off)
        .map(|(_, d)| d.clone())
        .unwrap_or_default();
    if trailer.contains_key(b"Encrypt".as_slice()) {
        return Err(PdfError::Encrypted);
    }
    for key in TRAILER_DROP_KEYS {
        trailer.shift_remove(key.as_bytes());
    }
    if !trailer.contains_key(b"Root".as_slice()) {
        if let Some(cat) = objects
            .iter()
            .rev()
            .find(|o| o.type_name() == Some(b"Catalog"))
        {
            trailer.insert(b"Root".to_vec(), Object::Reference(cat.id));
        }
    }

    let classic = st.xref_tables > 0
        && st.xref_streams == 0
        && !st.xref_damaged
        && st
            .xref_entries
            .iter()
            .all(|(id, off)| st.starts.get(off) == Some(id));

    let prefix = {
        let first = objects.first().map_or(bytes.len(), |o| o.byte_offset);
        let mut lx = Lexer::new(bytes, 0);
        lx.skip_ws();
        if lx.pos == first {
            bytes[..first].to_vec()
        } else {
            format!("%PDF-{header_version}\n%\u{e2}\u{e3}\u{cf}\u{d3}\n").into_bytes()
        }
    };

    let mut doc = PdfDocument {
        raw_bytes: bytes.to_vec(),
        objects,
        trailer,
        header_version,
        xref_style: if classic {
            XrefStyle::ClassicTable
        } else {
            XrefStyle::Reconstructed
        },
        prefix,
        index,
    };
    for i in 0..doc.objects.len() {
        if let Some(len) = doc.objects[i].stream.as_ref().map(Vec::len) {
            doc.sync_length(i, len);
        }
    }
    Ok(doc)
}

fn object_header(lx: &mut Lexer<'_>) -> Option<ObjectId> {
    let save = lx.pos;
    let header = (|| {
        let number = u32::try_from(lx.unsigned()?).ok()?;
        let generation = u16::try_from(lx.unsigned()?).ok()?;
        lx.expect_keyword(b"obj", "").ok()?;
        Some(ObjectId::new(number, generation))
    })();
    if header.is_none() {
        lx.pos = save;
    }
    header
}

fn parse_indirect(
    bytes: &[u8],
    lx: &mut Lexer<'_>,
    start: usize,
    id: ObjectId,
    st: &mut ScanState,
) -> Result<IndirectObject, PdfError> {
    let malformed = |offset, message| PdfError::MalformedObject { offset, message };
    lx.skip_ws();
    let value_start = lx.pos;
    let (value, spans) = if lx.peek_keyword(b"endobj") {
        (Object::Null, None)
    } else if bytes[lx.pos..].starts_with(b"<<") {
        let (d, s) = lx
            .dictionary(0)
            .map_err(|e| malformed(e.offset, e.message))?;
        (Object::Dictionary(d), Some(s))
    } else {
        let v = lx
            .parse_object()
            .map_err(|e| malformed(e.offset, e.message))?;
        (v, None)
    };

    let unbalanced = PdfError::UnbalancedObject { offset: start };
    if lx.peek_keyword(b"stream") {
        let Some(dict) = value.as_dict() else {
            return Err(malformed(value_start, "stream without dictionary"));
        };
        lx.skip_ws();
        lx.pos += b"stream".len();
        if bytes[lx.pos..].starts_with(b"\r\n") {
            lx.pos += 2;
        } else if matches!(bytes.get(lx.pos), Some(b'\n' | b'\r')) {
            lx.pos += 1;
        }
        let data_start = lx.pos;

        let declared = match dict_get(dict, "Length") {
            Some(Object::Integer(n)) if *n >= 0 => Some(*n as usize),
            Some(Object::Reference(r)) => indirect_integer(bytes, st, *r),
            _ => None,
        };
        let data_end = declared
            .map(|n| data_start.saturating_add(n))
            .filter(|&end| {
                end <= bytes.len() && {
                    let mut probe = Lexer::new(bytes, end);
                    probe.peek_keyword(b"endstream")
                }
            })
            .or_else(|| {
                find(bytes, b"endstream", data_start).map(|mut end| {
                    if end > data_start && bytes[end - 1] == b'\n' {
                        end -= 1;
                    }
                    if end > data_start && bytes[end - 1] == b'\r' {
                        end -= 1;
                    }
                    end
                })
            })
            .ok_or(unbalanced.clone())?;

        lx.pos = data_end;
        lx.expect_keyword(b"endstream", "")
            .map_err(|_| unbalanced.clone())?;
        lx.expect_keyword(b"endobj", "").map_err(|_| unbalanced)?;

        let head = bytes[start..data_start].to_vec();
        let spans = spans.expect("stream objects carry a dictionary");
        let length = match dict_get(dict, "Length") {
            Some(Object::Reference(r)) => LengthEntry::Indirect(*r),
            Some(Object::Integer(_)) => spans
                .value_span("Length")
                .map(|r| LengthEntry::Direct(r.start - start..r.end - start))
                .unwrap_or(LengthEntry::Missing),
            // A non-integer length is replaced by the real one on output.
            Some(_) => match spans.value_span("Length") {
                Some(r) => LengthEntry::Direct(r.start - start..r.end - start),
                None => LengthEntry::Missing,
            },
            None => LengthEntry::Missing,
        };
        Ok(IndirectObject {
            id,
            value,
            byte_offset: start,
            head,
            stream: Some(bytes[data_start..data_end].to_vec()),
            tail: bytes[data_end..lx.pos].to_vec(),
            length,
            dict_open: Some(spans.open - start),
            trailing: bytes[lx.pos..trivia_end(bytes, lx.pos)].to_vec(),
        })
    } else {
        lx.expect_keyword(b"endobj", "").map_err(|_| unbalanced)?;
        Ok(IndirectObject {
            id,
            value,
            byte_offset: start,
            head: bytes[start..lx.pos].to_vec(),
            stream: None,
            tail: Vec::new(),
            length: LengthEntry::Missing,
            dict_open: spans.map(|s| s.open - start),
            trailing: bytes[lx.pos..trivia_end(bytes, lx.pos)].to_vec(),
        })
    }
}

/// Value of `N G obj <int> endobj` anywhere in the file, last one wins.
fn indirect_integer(bytes: &[u8], st: &mut ScanState, id: ObjectId) -> Option<usize> {
    let map = st.int_objects.get_or_insert_with(|| {
        let re = regex::bytes::Regex::new(r"(?-u)(\d+)\s+(\d+)\s+obj\s*(\d+)\s*endobj").unwrap();
        let mut map = HashMap::new();
        for cap in re.captures_iter(bytes) {
            let num = |i| -> Option<u64> { std::str::from_utf8(&cap[i]).ok()?.parse().ok() };
            if let (Some(n), Some(g), Some(v)) = (num(1), num(2), num(3)) {
                if let (Ok(n), Ok(g)) = (u32::try_from(n), u16::try_from(g)) {
                    map.insert(ObjectId::new(n, g), v as usize);
                }
            }
        }
        map
    });
    map.get(&id).copied()
}

fn parse_xref_section(lx: &mut Lexer<'_>, st: &mut ScanState) {
    st.xref_tables += 1;
    loop {
        let save = lx.pos;
        let (Some(first), Some(count)) = (lx.unsigned(), lx.unsigned()) else {
            lx.pos = save;
            return;
        };
        for i in 0..count {
            let offset = lx.unsigned();
            let generation = lx.unsigned();
            lx.skip_ws();
            let kind = lx.regular_token();
            match (offset, generation, kind) {
                (Some(off), Some(g), b"n") => {
                    if let (Ok(n), Ok(g)) = (u32::try_from(first + i), u16::try_from(g)) {
                        st.xref_entries.push((ObjectId::new(n, g), off as usize));
                    }
                }
                (Some(_), Some(_), b"f") => {}
                _ => {
                    st.xref_damaged = true;
                    return;
                }
            }
        }
    }
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    haystack
        .get(from..)?
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

/// Serializes `doc`: header, every object in source order, a rebuilt xref
/// table, trailer and `%%EOF`.
pub fn serialize_document(doc: &PdfDocument) -> Vec<u8> {
    let total: usize = doc
        .objects
        .iter()
        .map(|o| {
            o.head.len()
                + o.stream.as_ref().map_or(0, Vec::len)
                + o.tail.len()
                + o.trailing.len()
                + 1
        })
        .sum();
    let mut out = Vec::with_capacity(doc.prefix.len() + total + 64 * doc.objects.len());
    out.extend_from_slice(&doc.prefix);
    if !matches!(out.last(), Some(b'\n' | b'\r')) {
        out.push(b'\n');
    }

    let mut offsets: HashMap<u32, (usize, u16)> = HashMap::new();
    for obj in &doc.objects {
        offsets.insert(obj.id.number, (out.len(), obj.id.generation));
        obj.write_to(&mut out);
    }

    let size = doc
        .objects
        .iter()
        .map(|o| o.id.number)
        .max()
        .map_or(1, |m| m + 1);
    let xref_at = out.len();
    out.extend_from_slice(format!("xref\n0 {size}\n").as_bytes());
    out.extend_from_slice(b"0000000000 65535 f \n");
    for number in 1..size {
        match offsets.get(&number) {
            Some((off, generation)) => {
                out.extend_from_slice(format!("{off:010} {generation:05} n \n").as_bytes())
            }
            None => out.extend_from_slice(b"0000000000 65535 f \n"),
        }
    }

    let mut trailer = doc.trailer.clone();
    trailer.insert(b"Size".to_vec(), Object::Integer(size as i64));
    out.extend_from_slice(b"trailer\n");
    write_dict(&trailer, &mut out);
    out.extend_from_slice(format!("\nstartxref\n{xref_at}\n%%EOF\n").as_bytes());
    out
}

#[cfg(test)]
mod tests;
