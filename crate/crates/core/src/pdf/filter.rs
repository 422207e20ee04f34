//! Stream filters. Only the identity and `/FlateDecode` without a predictor
//! are supported; everything else is reported as unsupported.

use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use super::object::{dict_get, Dictionary, Object};
use super::PdfError;

pub const FLATE: &[u8] = b"FlateDecode";

/// Reads the `/Filter` entry of a stream dictionary as an ordered list of
/// filter names.
pub fn filter_chain(dict: &Dictionary) -> Result<Vec<Vec<u8>>, PdfError> {
    match dict_get(dict, "Filter") {
        None | Some(Object::Null) => Ok(Vec::new()),
        Some(Object::Name(n)) => Ok(vec![n.clone()]),
        Some(Object::Array(items)) => items
            .iter()
            .map(|o| {
                o.as_name()
                    .map(<[u8]>::to_vec)
                    .ok_or_else(|| unsupported(b"<non-name filter>"))
            })
            .collect(),
        Some(_) => Err(unsupported(b"<indirect filter>")),
    }
}

fn unsupported(name: &[u8]) -> PdfError {
    PdfError::UnsupportedFilter(String::from_utf8_lossy(name).into_owned())
}

fn check_chain(chain: &[Vec<u8>]) -> Result<(), PdfError> {
    match chain {
        [] => Ok(()),
        [only] if only == FLATE => Ok(()),
        [only] => Err(unsupported(only)),
        _ => Err(unsupported(&chain.join(&b' '))),
    }
}

fn has_predictor(dict: &Dictionary) -> bool {
    let parms = match dict_get(dict, "DecodeParms") {
        Some(Object::Array(items)) => items.first(),
        other => other,
    };
    match parms {
        None | Some(Object::Null) => false,
        Some(Object::Dictionary(p)) => {
            !matches!(dict_get(p, "Predictor"), None | Some(Object::Integer(1)))
        }
        Some(_) => true,
    }
}

/// Removes the filters declared in `dict` from `raw`.
pub fn decode_with_dict(dict: &Dictionary, raw: &[u8]) -> Result<Vec<u8>, PdfError> {
    let chain = filter_chain(dict)?;
    check_chain(&chain)?;
    if !chain.is_empty() && has_predictor(dict) {
        return Err(PdfError::UnsupportedFilter(
            "FlateDecode with predictor".into(),
        ));
    }
    decode_bytes(raw, &chain)
}

fn decode_bytes(raw: &[u8], chain: &[Vec<u8>]) -> Result<Vec<u8>, PdfError> {
    check_chain(chain)?;
    if chain.is_empty() {
        return Ok(raw.to_vec());
    }
    let mut out = Vec::with_capacity(raw.len() * 4);
    ZlibDecoder::new(raw)
        .read_to_end(&mut out)
        .map_err(|e| PdfError::CorruptStream(e.to_string()))?;
    Ok(out)
}

/// Applies `chain` to `plaintext`. The result inverts under [`decode_with_dict`]
/// for a dictionary declaring the same chain.
pub fn encode_stream(plaintext: &[u8], chain: &[Vec<u8>]) -> Result<Vec<u8>, PdfError> {
    check_chain(chain)?;
    if chain.is_empty() {
        return Ok(plaintext.to_vec());
    }
    let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
    enc.write_all(plaintext)
        .and_then(|_| enc.finish())
        .map_err(|e| PdfError::CorruptStream(e.to_string()))
}
