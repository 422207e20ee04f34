//! Generates small, valid PDF files with known content streams, together with
//! a census of the operator instances they contain.
//!
//! The spec text is line oriented:
//!
//! ```text
//! # comment
//! filter flate          compress every content stream (default: none)
//! page                  start a page with one content stream
//! pages 3               start three pages that share the following lines
//! stream                start another content stream on the current page
//! form                  start a form XObject
//! charproc              start a Type3 glyph procedure
//! image                 add a JPEG image XObject
//! 10x 288 720 Td        the line `288 720 Td`, ten times
//! BT /F1 12 Tf ET       any other line is copied verbatim
//! ```
//!
//! Content lines before the first directive belong to an implicit first page.
//! The writer does not share code with the document parser or serializer, so
//! fixtures can serve as independent test input for both.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use thiserror::Error;

use crate::registry::{Reliability, StegConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("fixture line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("a fixture needs at least one page")]
    NoPages,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FixtureFilter {
    #[default]
    None,
    Flate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageSpec {
    /// One entry per content stream; more than one makes `/Contents` an array.
    pub streams: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureSpec {
    pub pages: Vec<PageSpec>,
    pub forms: Vec<Vec<String>>,
    pub charprocs: Vec<Vec<String>>,
    pub images: usize,
    pub filter: FixtureFilter,
}

/// One operator instance as the census sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusSite {
    pub op: String,
    pub operands: Vec<String>,
}

/// Operator instances per content stream, streams in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    pub streams: Vec<Vec<CensusSite>>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub bytes: Vec<u8>,
    pub census: Census,
}

enum Target {
    Pages {
        first: usize,
        count: usize,
    },
    Stream {
        page_from: usize,
        page_to: usize,
        stream: usize,
    },
    Form(usize),
    CharProc(usize),
}

pub fn parse_fixture_spec(text: &str) -> Result<FixtureSpec, FixtureError> {
    let mut spec = FixtureSpec::default();
    let mut target: Option<Target> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let perr = |message: String| FixtureError::Parse { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = trimmed.split_whitespace();
        let head = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        match (head, rest.as_slice()) {
            ("filter", ["flate"]) => spec.filter = FixtureFilter::Flate,
            ("filter", ["none"]) => spec.filter = FixtureFilter::None,
            ("filter", _) => return Err(perr("filter must be `flate` or `none`".into())),
            ("page", []) | ("pages", [_]) => {
                let count = match rest.first() {
                    Some(n) => n
                        .parse::<usize>()
                        .map_err(|_| perr(format!("bad page count {n:?}")))?,
                    None => 1,
                };
                if count == 0 {
                    return Err(FixtureError::NoPages);
                }
                let first = spec.pages.len();
                spec.pages.extend((0..count).map(|_| PageSpec {
                    streams: vec![Vec::new()],
                }));
                target = Some(Target::Pages { first, count });
            }
            ("stream", []) => {
                let (page_from, page_to) = match target {
                    Some(Target::Pages { first, count }) => (first, first + count),
                    Some(Target::Stream {
                        page_from, page_to, ..
                    }) => (page_from, page_to),
                    _ => return Err(perr("`stream` must follow a page".into())),
                };
                let stream = spec.pages[page_from].streams.len();
                for page in &mut spec.pages[page_from..page_to] {
                    page.streams.push(Vec::new());
                }
                target = Some(Target::Stream {
                    page_from,
                    page_to,
                    stream,
                });
            }
            ("form", []) => {
                spec.forms.push(Vec::new());
                target = Some(Target::Form(spec.forms.len() - 1));
            }
            ("charproc", []) => {
                spec.charprocs.push(Vec::new());
                target = Some(Target::CharProc(spec.charprocs.len() - 1));
            }
            ("image", []) => spec.images += 1,
            ("page" | "stream" | "form" | "charproc" | "image" | "pages", _) => {
                return Err(perr(format!("unexpected arguments to `{head}`")));
            }
            _ => {
                let (times, content) = repeat_prefix(trimmed).map_err(perr)?;
                if target.is_none() {
                    spec.pages.push(PageSpec {
                        streams: vec![Vec::new()],
                    });
                    target = Some(Target::Pages {
                        first: spec.pages.len() - 1,
                        count: 1,
                    });
                }
                let lines = std::iter::repeat_n(content.to_string(), times);
                match target.as_ref().expect("target set above") {
                    Target::Pages { first, count } => {
                        for page in &mut spec.pages[*first..first + count] {
                            page.streams[0].extend(lines.clone());
                        }
                    }
                    Target::Stream {
                        page_from,
                        page_to,
                        stream,
                    } => {
                        for page in &mut spec.pages[*page_from..*page_to] {
                            page.streams[*stream].extend(lines.clone());
                        }
                    }
                    Target::Form(i) => spec.forms[*i].extend(lines),
                    Target::CharProc(i) => spec.charprocs[*i].extend(lines),
                }
            }
        }
    }
    if spec.pages.is_empty() {
        return Err(FixtureError::NoPages);
    }
    Ok(spec)
}

/// Splits `10x line` or `10× line` into the count and the line.
fn repeat_prefix(line: &str) -> Result<(usize, &str), String> {
    let Some((head, rest)) = line.split_once(char::is_whitespace) else {
        return Ok((1, line));
    };
    let count = head.strip_suffix('x').or_else(|| head.strip_suffix('×'));
    match count {
        Some(n) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => {
            let times = n
                .parse()
                .map_err(|_| format!("repeat count {n:?} too large"))?;
            Ok((times, rest.trim()))
        }
        _ => Ok((1, line)),
    }
}

pub fn generate_fixture(text: &str) -> Result<Fixture, FixtureError> {
    Ok(build_fixture(&parse_fixture_spec(text)?))
}

/// Object numbers are handed out in writing order, so offsets ascend with
/// object number.
struct Writer {
    out: Vec<u8>,
    offsets: Vec<usize>,
    filter: FixtureFilter,
}

impl Writer {
    fn begin(&mut self) -> u32 {
        self.offsets.push(self.out.len());
        let num = self.offsets.len() as u32;
        writeln!(self.out, "{num} 0 obj").expect("write to Vec");
        num
    }

    fn object(&mut self, body: &str) -> u32 {
        let num = self.begin();
        self.out.extend_from_slice(body.as_bytes());
        self.out.extend_from_slice(b"\nendobj\n");
        num
    }

    fn stream(&mut self, dict_entries: &str, data: &[u8]) -> u32 {
        let num = self.begin();
        write!(
            self.out,
            "<< {dict_entries} /Length {} >>\nstream\n",
            data.len()
        )
        .expect("write to Vec");
        self.out.extend_from_slice(data);
        self.out.extend_from_slice(b"\nendstream\nendobj\n");
        num
    }

    fn content(&mut self, dict_entries: &str, lines: &[String]) -> u32 {
        let mut text = lines.join("\n");
        text.push('\n');
        match self.filter {
            FixtureFilter::None => self.stream(dict_entries, text.as_bytes()),
            FixtureFilter::Flate => {
                let mut enc = ZlibEncoder::new(Vec::new(), Compression::best());
                enc.write_all(text.as_bytes()).expect("write to Vec");
                let data = enc.finish().expect("write to Vec");
                self.stream(&format!("{dict_entries} /Filter /FlateDecode"), &data)
            }
        }
    }
}

pub fn build_fixture(spec: &FixtureSpec) -> Fixture {
    let mut w = Writer {
        out: b"%PDF-1.7\n%\xE2\xE3\xCF\xD3\n".to_vec(),
        offsets: Vec::new(),
        filter: spec.filter,
    };
    let mut census = Census::default();

    // Numbers 1..=3 are fixed: catalog, page tree, text font.
    let page_count = spec.pages.len();
    let streams_per_page: Vec<usize> = spec.pages.iter().map(|p| p.streams.len()).collect();
    let after_fixed = 4;
    let type3 = (!spec.charprocs.is_empty()).then_some(after_fixed);
    let first_charproc = after_fixed + u32::from(type3.is_some());
    let first_form = first_charproc + spec.charprocs.len() as u32;
    let first_image = first_form + spec.forms.len() as u32;
    let first_page = first_image + spec.images as u32;
    let mut page_ids = Vec::with_capacity(page_count);
    let mut next = first_page;
    for &streams in &streams_per_page {
        page_ids.push(next);
        next += 1 + streams as u32;
    }

    w.object("<< /Type /Catalog /Pages 2 0 R >>");
    let kids: String = page_ids.iter().map(|id| format!("{id} 0 R ")).collect();
    w.object(&format!(
        "<< /Type /Pages /Kids [ {kids}] /Count {page_count} >>"
    ));
    w.object("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>");

    let mut resources = String::from("<< /Font << /F1 3 0 R");
    if let Some(t3) = type3 {
        let n = spec.charprocs.len();
        let procs: String = (0..n)
            .map(|i| format!("/g{i} {} 0 R ", first_charproc + i as u32))
            .collect();
        let names: String = (0..n).map(|i| format!("/g{i} ")).collect();
        let widths: String = (0..n).map(|_| "1000 ").collect();
        w.object(&format!(
            "<< /Type /Font /Subtype /Type3 /FontBBox [0 0 1000 1000] \
             /FontMatrix [0.001 0 0 0.001 0 0] /CharProcs << {procs}>> \
             /Encoding << /Type /Encoding /Differences [65 {names}] >> \
             /FirstChar 65 /LastChar {} /Widths [{widths}] /Resources << >> >>",
            64 + n
        ));
        write!(resources, " /F3 {t3} 0 R").expect("write to String");
        for lines in &spec.charprocs {
            w.content("", lines);
            census.streams.push(census_of(lines));
        }
    }
    resources.push_str(" >>");
    if !spec.forms.is_empty() || spec.images > 0 {
        resources.push_str(" /XObject <<");
        for i in 0..spec.forms.len() {
            write!(resources, " /Fm{i} {} 0 R", first_form + i as u32).expect("write to String");
        }
        for i in 0..spec.images {
            write!(resources, " /Im{i} {} 0 R", first_image + i as u32).expect("write to String");
        }
        resources.push_str(" >>");
    }
    resources.push_str(" >>");

    for lines in &spec.forms {
        w.content("/Type /XObject /Subtype /Form /BBox [0 0 612 792]", lines);
        census.streams.push(census_of(lines));
    }
    for _ in 0..spec.images {
        w.stream(
            "/Type /XObject /Subtype /Image /Width 1 /Height 1 /ColorSpace /DeviceGray \
             /BitsPerComponent 8 /Filter /DCTDecode",
            TINY_JPEG,
        );
    }
    for (page, &id) in spec.pages.iter().zip(&page_ids) {
        let first_stream = id + 1;
        let contents = if page.streams.len() == 1 {
            format!("{first_stream} 0 R")
        } else {
            let refs: String = (0..page.streams.len())
                .map(|i| format!("{} 0 R ", first_stream + i as u32))
                .collect();
            format!("[ {refs}]")
        };
        let written = w.object(&format!(
            "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources {resources} /Contents {contents} >>"
        ));
        debug_assert_eq!(written, id);
        for lines in &page.streams {
            w.content("", lines);
            census.streams.push(census_of(lines));
        }
    }

    let xref_at = w.out.len();
    let size = w.offsets.len() + 1;
    write!(w.out, "xref\n0 {size}\n0000000000 65535 f \n").expect("write to Vec");
    for off in &w.offsets {
        writeln!(w.out, "{off:010} 00000 n ").expect("write to Vec");
    }
    write!(
        w.out,
        "trailer\n<< /Size {size} /Root 1 0 R >>\nstartxref\n{xref_at}\n%%EOF\n"
    )
    .expect("write to Vec");
    Fixture {
        bytes: w.out,
        census,
    }
}

/// A structurally plausible baseline JPEG header; the image is never decoded.
const TINY_JPEG: &[u8] = &[
    0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, b'J', b'F', b'I', b'F', 0x00, 0x01, 0x01, 0x00, 0x00, 0x01,
    0x00, 0x01, 0x00, 0x00, 0xFF, 0xD9,
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Array(Vec<Tok>),
    Other(String),
}

fn is_number(tok: &str) -> bool {
    let body = tok.strip_prefix('-').unwrap_or(tok);
    body.bytes().any(|b| b.is_ascii_digit())
        && body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && body.bytes().filter(|&b| b == b'.').count() <= 1
}

/// Tokenizes content text: strings, hex strings, names, arrays, numbers and
/// keywords. Dictionaries and comments come back as opaque tokens.
fn tokenize(text: &str) -> Vec<Tok> {
    fn inner(b: &[u8], i: &mut usize, stop_at_bracket: bool) -> Vec<Tok> {
        let mut toks = Vec::new();
        while *i < b.len() {
            let c = b[*i];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' | b'\x0c' | 0 => *i += 1,
                b'%' => {
                    while *i < b.len() && b[*i] != b'\n' {
                        *i += 1;
                    }
                    toks.push(Tok::Other("%".into()));
                }
                b'(' => {
                    let mut depth = 0;
                    while *i < b.len() {
                        match b[*i] {
                            b'\\' => *i += 1,
                            b'(' => depth += 1,
                            b')' => {
                                depth -= 1;
                                if depth == 0 {
                                    *i += 1;
                                    break;
                                }
                            }
                            _ => {}
                        }
                        *i += 1;
                    }
                    toks.push(Tok::Other("()".into()));
                }
                b'<' if b.get(*i + 1) == Some(&b'<') => {
                    *i += 2;
                    toks.push(Tok::Other("<<".into()));
                }
                b'>' if b.get(*i + 1) == Some(&b'>') => {
                    *i += 2;
                    toks.push(Tok::Other(">>".into()));
                }
                b'<' => {
                    while *i < b.len() && b[*i] != b'>' {
                        *i += 1;
                    }
                    *i += 1;
                    toks.push(Tok::Other("<>".into()));
                }
                b'[' => {
                    *i += 1;
                    toks.push(Tok::Array(inner(b, i, true)));
                }
                b']' => {
                    *i += 1;
                    if stop_at_bracket {
                        return toks;
                    }
                    toks.push(Tok::Other("]".into()));
                }
                _ => {
                    let start = *i;
                    *i += 1;
                    while *i < b.len() && !b" \t\r\n\x0c\0()<>[]{}/%".contains(&b[*i]) {
                        *i += 1;
                    }
                    let word = String::from_utf8_lossy(&b[start..*i]).into_owned();
                    toks.push(if is_number(&word) {
                        Tok::Number(word)
                    } else {
                        Tok::Other(word)
                    });
                }
            }
        }
        toks
    }
    let mut i = 0;
    inner(text.as_bytes(), &mut i, false)
}

/// Operator instances of one content stream, found by tokenizing it.
pub fn census_of(lines: &[String]) -> Vec<CensusSite> {
    let bounds: BTreeMap<&str, (usize, usize)> = crate::registry::OPERATORS
        .iter()
        .map(|&(op, a, b)| (op, (a, b)))
        .collect();
    let mut sites = Vec::new();
    let toks = tokenize(&lines.join("\n"));
    let mut numbers: Vec<String> = Vec::new();
    let mut last_array: Option<Vec<String>> = None;
    for tok in toks {
        match tok {
            Tok::Number(n) => {
                numbers.push(n);
                last_array = None;
            }
            Tok::Array(items) => {
                numbers.clear();
                let flat_ok = items.iter().all(|t| !matches!(t, Tok::Array(_)));
                last_array = flat_ok.then(|| {
                    items
                        .into_iter()
                        .filter_map(|t| match t {
                            Tok::Number(n) => Some(n),
                            _ => None,
                        })
                        .collect()
                });
            }
            Tok::Other(word) => {
                if word == "TJ" {
                    if let Some(ops) = last_array.take() {
                        sites.push(CensusSite {
                            op: word,
                            operands: ops,
                        });
                    }
                } else if let Some(&(a, b)) = bounds.get(word.as_str()) {
                    if numbers.len() >= a {
                        let take = numbers.len().min(b);
                        let operands = numbers[numbers.len() - take..].to_vec();
                        sites.push(CensusSite { op: word, operands });
                    }
                }
                numbers.clear();
                last_array = None;
            }
        }
    }
    sites
}

fn nonzero(token: &str) -> bool {
    token.bytes().any(|b| (b'1'..=b'9').contains(&b))
}

impl Census {
    pub fn sites(&self) -> impl Iterator<Item = &CensusSite> {
        self.streams.iter().flatten()
    }

    /// Eligibility of every operand under `cfg`, in traversal order.
    pub fn eligibility<'a>(
        &'a self,
        cfg: &'a StegConfig,
    ) -> impl Iterator<Item = (&'a CensusSite, usize, bool)> + 'a {
        self.sites().flat_map(move |site| {
            let entry = cfg.entry(&site.op);
            let op_ok = entry.is_some_and(|e| {
                e.enabled && (cfg.include_low_reliability || e.reliability != Reliability::Low)
            });
            site.operands.iter().enumerate().map(move |(i, tok)| {
                let ok = op_ok && entry.and_then(|e| e.budget(i)).is_some() && nonzero(tok);
                (site, i, ok)
            })
        })
    }

    pub fn eligible_slots(&self, cfg: &StegConfig) -> usize {
        self.eligibility(cfg).filter(|(_, _, ok)| *ok).count()
    }

    pub fn capacity_bits(&self, cfg: &StegConfig) -> u64 {
        self.eligibility(cfg)
            .filter(|(_, _, ok)| *ok)
            .map(|(site, _, _)| u64::from(cfg.entry(&site.op).map_or(0, |e| e.default_n)))
            .sum()
    }
}
