//! Byte-level tokenizer and value parser for PDF object syntax.

use std::ops::Range;

use super::object::{Dictionary, Object, ObjectId};

pub fn is_whitespace(b: u8) -> bool {
    matches!(b, b'\0' | b'\t' | b'\n' | b'\x0c' | b'\r' | b' ')
}

pub fn is_delimiter(b: u8) -> bool {
    matches!(
        b,
        b'(' | b')' | b'<' | b'>' | b'[' | b']' | b'{' | b'}' | b'/' | b'%'
    )
}

pub fn is_regular(b: u8) -> bool {
    !is_whitespace(b) && !is_delimiter(b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub message: &'static str,
}

type LexResult<T> = Result<T, LexError>;

/// Value spans of a top-level dictionary, relative to the lexer buffer.
#[derive(Debug, Clone, Default)]
pub struct DictSpans {
    pub open: usize,
    pub close: usize,
    pub values: Vec<(Vec<u8>, Range<usize>)>,
}

impl DictSpans {
    pub fn value_span(&self, key: &str) -> Option<Range<usize>> {
        self.values
            .iter()
            .rev()
            .find(|(k, _)| k == key.as_bytes())
            .map(|(_, r)| r.clone())
    }
}

const MAX_DEPTH: usize = 256;

pub struct Lexer<'a> {
    buf: &'a [u8],
    pub pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(buf: &'a [u8], pos: usize) -> Self {
        Lexer { buf, pos }
    }

    fn err<T>(&self, message: &'static str) -> LexResult<T> {
        Err(LexError {
            offset: self.pos,
            message,
        })
    }

    pub fn peek(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            if is_whitespace(b) {
                self.pos += 1;
            } else if b == b'%' {
                while let Some(c) = self.peek() {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Reads a run of regular characters without skipping whitespace first.
    pub fn regular_token(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.peek().is_some_and(is_regular) {
            self.pos += 1;
        }
        &self.buf[start..self.pos]
    }

    /// True if the next token (after whitespace) is exactly `kw`.
    pub fn peek_keyword(&mut self, kw: &[u8]) -> bool {
        self.skip_ws();
        let save = self.pos;
        let tok = self.regular_token();
        self.pos = save;
        tok == kw
    }

    pub fn expect_keyword(&mut self, kw: &[u8], message: &'static str) -> LexResult<()> {
        self.skip_ws();
        let save = self.pos;
        if self.regular_token() == kw {
            Ok(())
        } else {
            self.pos = save;
            self.err(message)
        }
    }

    /// Parses an unsigned integer token, restoring the position on failure.
    pub fn unsigned(&mut self) -> Option<u64> {
        self.skip_ws();
        let save = self.pos;
        let tok = self.regular_token();
        if !tok.is_empty() && tok.iter().all(u8::is_ascii_digit) {
            if let Some(v) = std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()) {
                return Some(v);
            }
        }
        self.pos = save;
        None
    }

    pub fn parse_object(&mut self) -> LexResult<Object> {
        self.parse_value(0)
    }

    fn parse_value(&mut self, depth: usize) -> LexResult<Object> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        self.skip_ws();
        match self.peek() {
            None => self.err("unexpected end of data"),
            Some(b'/') => {
                self.pos += 1;
                Ok(Object::Name(decode_name(self.regular_token())))
            }
            Some(b'(') => Ok(Object::String(self.literal_string()?)),
            Some(b'<') => {
                if self.buf.get(self.pos + 1) == Some(&b'<') {
                    let (dict, _) = self.dictionary(depth)?;
                    Ok(Object::Dictionary(dict))
                } else {
                    Ok(Object::HexString(self.hex_string()?))
                }
            }
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return self.err("unterminated array"),
                        Some(b']') => {
                            self.pos += 1;
                            break;
                        }
                        _ => items.push(self.parse_value(depth + 1)?),
                    }
                }
                Ok(Object::Array(items))
            }
            Some(b) if is_regular(b) => self.keyword_or_number(),
            Some(_) => self.err("unexpected delimiter"),
        }
    }

    fn keyword_or_number(&mut self) -> LexResult<Object> {
        let start = self.pos;
        let tok = self.regular_token();
        match tok {
            b"true" => return Ok(Object::Boolean(true)),
            b"false" => return Ok(Object::Boolean(false)),
            b"null" => return Ok(Object::Null),
            _ => {}
        }
        let text = std::str::from_utf8(tok).map_err(|_| LexError {
            offset: start,
            message: "invalid token",
        })?;
        if let Ok(int) = text.parse::<i64>() {
            // `N G R` reference lookahead.
            if int >= 0 && !text.starts_with('+') && !text.starts_with('-') {
                let save = self.pos;
                if let Some(generation) = self.unsigned() {
                    self.skip_ws();
                    if self.regular_token() == b"R" && generation <= u16::MAX as u64 {
                        if let Ok(number) = u32::try_from(int) {
                            return Ok(Object::Reference(ObjectId::new(number, generation as u16)));
                        }
                    }
                }
                self.pos = save;
            }
            return Ok(Object::Integer(int));
        }
        if is_real(text) {
            return Ok(Object::Real(text.to_string()));
        }
        Err(LexError {
            offset: start,
            message: "unexpected keyword",
        })
    }

    /// Parses `<< ... >>`, recording the byte span of each value.
    pub fn dictionary(&mut self, depth: usize) -> LexResult<(Dictionary, DictSpans)> {
        self.skip_ws();
        if !self.buf[self.pos..].starts_with(b"<<") {
            return self.err("expected dictionary");
        }
        let open = self.pos;
        self.pos += 2;
        let mut dict = Dictionary::new();
        let mut spans = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return self.err("unterminated dictionary"),
                Some(b'>') => {
                    if self.buf.get(self.pos + 1) == Some(&b'>') {
                        self.pos += 2;
                        break;
                    }
                    return self.err("stray '>' in dictionary");
                }
                Some(b'/') => {
                    self.pos += 1;
                    let key = decode_name(self.regular_token());
                    self.skip_ws();
                    let vstart = self.pos;
                    let value = self.parse_value(depth + 1)?;
                    spans.push((key.clone(), vstart..self.pos));
                    dict.insert(key, value);
                }
                Some(_) => return self.err("dictionary key is not a name"),
            }
        }
        Ok((
            dict,
            DictSpans {
                open,
                close: self.pos,
                values: spans,
            },
        ))
    }

    fn literal_string(&mut self) -> LexResult<Vec<u8>> {
        let end = literal_string_end(self.buf, self.pos).ok_or(LexError {
            offset: self.pos,
            message: "unterminated string",
        })?;
        let inner = self.buf[self.pos + 1..end - 1].to_vec();
        self.pos = end;
        Ok(inner)
    }

    fn hex_string(&mut self) -> LexResult<Vec<u8>> {
        let start = self.pos + 1;
        match self.buf[start..].iter().position(|&b| b == b'>') {
            Some(len) => {
                self.pos = start + len + 1;
                Ok(self.buf[start..start + len].to_vec())
            }
            None => self.err("unterminated hex string"),
        }
    }
}

/// Returns the index one past the `)` closing the literal string opening at
/// `open`, honouring nesting and backslash escapes.
pub fn literal_string_end(buf: &[u8], open: usize) -> Option<usize> {
    debug_assert_eq!(buf.get(open), Some(&b'('));
    let mut depth = 0usize;
    let mut i = open;
    while i < buf.len() {
        match buf[i] {
            b'\\' => i += 1,
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn is_real(text: &str) -> bool {
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    let mut points = 0;
    let mut digits = 0;
    for c in body.chars() {
        match c {
            '.' => points += 1,
            '0'..='9' => digits += 1,
            _ => return false,
        }
    }
    points <= 1 && digits > 0
}

fn decode_name(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == b'#' && i + 2 < raw.len() {
            let hex = std::str::from_utf8(&raw[i + 1..i + 3])
                .ok()
                .and_then(|h| u8::from_str_radix(h, 16).ok());
            if let Some(b) = hex {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(raw[i]);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &[u8]) -> Object {
        Lexer::new(text, 0).parse_object().unwrap()
    }

    #[test]
    fn parses_references_and_numbers() {
        assert_eq!(parse(b"12 0 R"), Object::Reference(ObjectId::new(12, 0)));
        assert_eq!(parse(b"12 0 obj"), Object::Integer(12));
        assert_eq!(parse(b"-.5"), Object::Real("-.5".into()));
        assert_eq!(
            parse(b"[1 2 R 3]"),
            Object::Array(vec![
                Object::Reference(ObjectId::new(1, 2)),
                Object::Integer(3)
            ])
        );
    }

    #[test]
    fn nested_strings_and_escapes() {
        assert_eq!(parse(br"(a(b)\)c)"), Object::String(br"a(b)\)c".to_vec()));
        assert_eq!(parse(b"<48 65>"), Object::HexString(b"48 65".to_vec()));
    }

    #[test]
    fn dictionary_spans_cover_values() {
        let src = b"<< /Length 42 /Filter /FlateDecode >>";
        let mut lx = Lexer::new(src, 0);
        let (dict, spans) = lx.dictionary(0).unwrap();
        assert_eq!(dict.len(), 2);
        let span = spans.value_span("Length").unwrap();
        assert_eq!(&src[span], b"42");
        assert_eq!(spans.close, src.len());
    }

    #[test]
    fn name_escapes_decode() {
        assert_eq!(parse(b"/A#20B"), Object::Name(b"A B".to_vec()));
    }

    #[test]
    fn comments_are_whitespace() {
        assert_eq!(parse(b"% hi\n 7"), Object::Integer(7));
    }
}
