use std::collections::{HashMap, HashSet};

use super::object::{dict_get, Dictionary, Object, ObjectId};
use super::{decode_stream, filter_chain, PdfDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    PageContents,
    FormXObject,
    Type3CharProc,
}

/// A renderable content stream with its filters removed.
#[derive(Debug, Clone)]
pub struct ContentStreamRef {
    pub owner: ObjectId,
    pub decoded_bytes: Vec<u8>,
    pub filter_chain: Vec<Vec<u8>>,
    pub role: StreamRole,
}

/// A stream object that was not returned for scanning, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedStream {
    pub owner: ObjectId,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ContentStreams {
    pub streams: Vec<ContentStreamRef>,
    pub skipped: Vec<SkippedStream>,
}

/// Finds every page content stream, form XObject and Type3 glyph procedure,
/// in ascending source offset of the owning object. Other streams, and
/// content streams whose filters cannot be removed, are listed in `skipped`.
pub fn collect_content_streams(doc: &PdfDocument) -> ContentStreams {
    let roles = content_roles(doc);
    let mut out = ContentStreams::default();
    for obj in doc.objects.iter().filter(|o| o.is_stream()) {
        let Some(&role) = roles.get(&obj.id) else {
            let what = obj
                .dict()
                .and_then(|d| dict_get(d, "Subtype").or_else(|| dict_get(d, "Type")))
                .and_then(Object::as_name)
                .map(|n| String::from_utf8_lossy(n).into_owned())
                .unwrap_or_else(|| "untyped".into());
            out.skipped.push(SkippedStream {
                owner: obj.id,
                reason: format!("not a content stream ({what})"),
            });
            continue;
        };
        let decoded = decode_stream(obj)
            .and_then(|d| Ok((d, filter_chain(obj.dict().unwrap_or(&Dictionary::new()))?)));
        match decoded {
            Ok((decoded_bytes, filter_chain)) => out.streams.push(ContentStreamRef {
                owner: obj.id,
                decoded_bytes,
                filter_chain,
                role,
            }),
            Err(e) => out.skipped.push(SkippedStream {
                owner: obj.id,
                reason: e.to_string(),
            }),
        }
    }
    out
}

fn content_roles(doc: &PdfDocument) -> HashMap<ObjectId, StreamRole> {
    let mut roles = HashMap::new();

    let mut pages = Vec::new();
    let root = doc
        .trailer
        .get(b"Root".as_slice())
        .and_then(|r| doc.resolve(r))
        .and_then(Object::as_dict);
    if let Some(tree) = root.and_then(|r| dict_get(r, "Pages")) {
        let mut seen = HashSet::new();
        walk_pages(doc, tree, &mut pages, &mut seen);
    }
    if pages.is_empty() {
        pages.extend(
            doc.objects
                .iter()
                .filter(|o| o.type_name() == Some(b"Page"))
                .filter_map(|o| o.dict()),
        );
    }
    for page in pages {
        let Some(contents) = dict_get(page, "Contents") else {
            continue;
        };
        let refs: Vec<ObjectId> = match contents {
            Object::Reference(id) => match doc.get(*id) {
                Some(o) if o.is_stream() => vec![*id],
                Some(o) => o
                    .value
                    .as_array()
                    .map(|a| a.iter().filter_map(Object::as_reference).collect())
                    .unwrap_or_default(),
                None => Vec::new(),
            },
            Object::Array(items) => items.iter().filter_map(Object::as_reference).collect(),
            _ => Vec::new(),
        };
        for id in refs {
            roles.entry(id).or_insert(StreamRole::PageContents);
        }
    }

    for obj in &doc.objects {
        let Some(dict) = obj.dict() else { continue };
        let subtype = dict_get(dict, "Subtype").and_then(Object::as_name);
        if obj.is_stream() && subtype == Some(b"Form") {
            roles.entry(obj.id).or_insert(StreamRole::FormXObject);
        }
        if subtype == Some(b"Type3") {
            let procs = dict_get(dict, "CharProcs")
                .and_then(|c| doc.resolve(c))
                .and_then(Object::as_dict);
            for id in procs
                .into_iter()
                .flat_map(|p| p.values())
                .filter_map(Object::as_reference)
            {
                roles.entry(id).or_insert(StreamRole::Type3CharProc);
            }
        }
    }
    roles
}

fn walk_pages<'a>(
    doc: &'a PdfDocument,
    node: &'a Object,
    pages: &mut Vec<&'a Dictionary>,
    seen: &mut HashSet<ObjectId>,
) {
    if let Object::Reference(id) = node {
        if !seen.insert(*id) {
            return;
        }
    }
    let Some(dict) = doc.resolve(node).and_then(Object::as_dict) else {
        return;
    };
    match dict_get(dict, "Kids")
        .and_then(|k| doc.resolve(k))
        .and_then(Object::as_array)
    {
        Some(kids) => {
            for kid in kids {
                walk_pages(doc, kid, pages, seen);
            }
        }
        None => pages.push(dict),
    }
}
