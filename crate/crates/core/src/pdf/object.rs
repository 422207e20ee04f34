use std::fmt;

use indexmap::IndexMap;

/// Object number and generation of an indirect object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId {
    pub number: u32,
    pub generation: u16,
}

impl ObjectId {
    pub const fn new(number: u32, generation: u16) -> Self {
        ObjectId { number, generation }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.number, self.generation)
    }
}

/// Dictionary keyed by decoded name bytes, in source order.
pub type Dictionary = IndexMap<Vec<u8>, Object>;

/// A parsed PDF value.
///
/// Reals, strings and names keep their source spelling so that values the
/// editor never touches serialize back byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Null,
    Boolean(bool),
    Integer(i64),
    /// Real number in its original spelling.
    Real(String),
    /// Name without the leading slash, `#xx` escapes resolved.
    Name(Vec<u8>),
    /// Raw bytes between the outer parentheses, escapes untouched.
    String(Vec<u8>),
    /// Raw bytes between `<` and `>`.
    HexString(Vec<u8>),
    Array(Vec<Object>),
    Dictionary(Dictionary),
    Reference(ObjectId),
}

impl Object {
    pub fn as_dict(&self) -> Option<&Dictionary> {
        match self {
            Object::Dictionary(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_name(&self) -> Option<&[u8]> {
        match self {
            Object::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Object::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_reference(&self) -> Option<ObjectId> {
        match self {
            Object::Reference(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Object]> {
        match self {
            Object::Array(a) => Some(a),
            _ => None,
        }
    }

    /// Appends the PDF syntax for this value to `out`.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        match self {
            Object::Null => out.extend_from_slice(b"null"),
            Object::Boolean(b) => out.extend_from_slice(if *b { b"true" } else { b"false" }),
            Object::Integer(i) => out.extend_from_slice(i.to_string().as_bytes()),
            Object::Real(r) => out.extend_from_slice(r.as_bytes()),
            Object::Name(n) => write_name(n, out),
            Object::String(s) => {
                out.push(b'(');
                out.extend_from_slice(s);
                out.push(b')');
            }
            Object::HexString(s) => {
                out.push(b'<');
                out.extend_from_slice(s);
                out.push(b'>');
            }
            Object::Array(items) => {
                out.push(b'[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(b' ');
                    }
                    item.write_to(out);
                }
                out.push(b']');
            }
            Object::Dictionary(dict) => write_dict(dict, out),
            Object::Reference(id) => {
                out.extend_from_slice(format!("{} {} R", id.number, id.generation).as_bytes())
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }
}

pub fn write_dict(dict: &Dictionary, out: &mut Vec<u8>) {
    out.extend_from_slice(b"<<");
    for (key, value) in dict {
        out.push(b' ');
        write_name(key, out);
        out.push(b' ');
        value.write_to(out);
    }
    out.extend_from_slice(b" >>");
}

fn write_name(name: &[u8], out: &mut Vec<u8>) {
    out.push(b'/');
    for &b in name {
        if b.is_ascii_graphic() && !super::lexer::is_delimiter(b) && b != b'#' {
            out.push(b);
        } else {
            out.extend_from_slice(format!("#{b:02X}").as_bytes());
        }
    }
}

/// Looks up `key` in `dict` by its textual name.
pub fn dict_get<'a>(dict: &'a Dictionary, key: &str) -> Option<&'a Object> {
    dict.get(key.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_escape_delimiters() {
        let obj = Object::Name(b"A B/C".to_vec());
        assert_eq!(obj.to_bytes(), b"/A#20B#2FC");
    }

    #[test]
    fn dictionary_keeps_insertion_order() {
        let mut d = Dictionary::new();
        d.insert(b"Size".to_vec(), Object::Integer(4));
        d.insert(b"Root".to_vec(), Object::Reference(ObjectId::new(1, 0)));
        assert_eq!(
            Object::Dictionary(d).to_bytes(),
            b"<< /Size 4 /Root 1 0 R >>".to_vec()
        );
    }
}
