use super::*;
use crate::fixture::generate_fixture;

fn wrap(objects: &[&str]) -> Vec<u8> {
    wrap_with(objects, "")
}

/// Like `wrap`, with `between` written after every `endobj` line.
fn wrap_with(objects: &[&str], between: &str) -> Vec<u8> {
    let mut out = b"%PDF-1.4\n".to_vec();
    let mut offsets = Vec::new();
    for (i, body) in objects.iter().enumerate() {
        offsets.push(out.len());
        out.extend_from_slice(format!("{} 0 obj\n{body}\nendobj\n{between}", i + 1).as_bytes());
    }
    let xref = out.len();
    out.extend_from_slice(
        format!("xref\n0 {}\n0000000000 65535 f \n", objects.len() + 1).as_bytes(),
    );
    for off in offsets {
        out.extend_from_slice(format!("{off:010} 00000 n \n").as_bytes());
    }
    out.extend_from_slice(
        format!(
            "trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{xref}\n%%EOF\n",
            objects.len() + 1
        )
        .as_bytes(),
    );
    out
}

const SAMPLE_STREAM: &str = "BT\n/F1 12 Tf\n288 720 Td\n(ABC) Tj\nET";

fn sample_object(length: usize) -> String {
    format!("<< /Length {length} >>\nstream\n{SAMPLE_STREAM}\nendstream")
}

fn reparse(doc: &PdfDocument) -> PdfDocument {
    parse_document(&serialize_document(doc)).expect("serialized output parses")
}

/// Checks every stream /Length and every xref offset of a serialized file.
fn assert_structurally_valid(bytes: &[u8]) {
    let doc = parse_document(bytes).unwrap();
    for obj in doc.objects.iter().filter(|o| o.is_stream()) {
        let len = match dict_get(obj.dict().unwrap(), "Length").unwrap() {
            Object::Integer(n) => *n as usize,
            Object::Reference(r) => doc.get(*r).unwrap().value.as_integer().unwrap() as usize,
            other => panic!("bad length {other:?}"),
        };
        assert_eq!(len, obj.stream_bytes().unwrap().len(), "object {}", obj.id);
    }
    // ASCII view with one char per byte, so string offsets are byte offsets.
    let text: String = bytes
        .iter()
        .map(|&b| if b.is_ascii() { b as char } else { '?' })
        .collect();
    let start: usize = text
        .trim_end()
        .lines()
        .rev()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(text[start..].starts_with("xref"));
    for (n, line) in text[start..].lines().skip(2).enumerate() {
        if line.starts_with("trailer") {
            break;
        }
        if line.ends_with(" n ") {
            let off: usize = line[..10].parse().unwrap();
            assert!(
                text[off..].starts_with(&format!("{n} 0 obj")),
                "xref entry {n}"
            );
        }
    }
    assert!(bytes.ends_with(b"%%EOF\n"));
}

#[test]
fn sample_object_8() {
    let bytes = format!(
        "%PDF-1.7\n8 0 obj\n{}\nendobj\ntrailer\n<< >>\n%%EOF\n",
        sample_object(SAMPLE_STREAM.len())
    );
    let doc = parse_document(bytes.as_bytes()).unwrap();
    assert_eq!(doc.header_version, "1.7");
    assert_eq!(doc.objects.len(), 1);
    let obj = &doc.objects[0];
    assert_eq!(obj.id, ObjectId::new(8, 0));
    let data = obj.stream_bytes().unwrap();
    assert!(data.windows(8).any(|w| w == b"(ABC) Tj"));
    assert_eq!(decode_stream(obj).unwrap(), SAMPLE_STREAM.as_bytes());
}

#[test]
fn empty_input_has_no_header() {
    assert_eq!(parse_document(b"").unwrap_err(), PdfError::MalformedHeader);
    assert_eq!(
        parse_document(b"hello").unwrap_err(),
        PdfError::MalformedHeader
    );
}

#[test]
fn missing_endobj_is_unbalanced() {
    let err = parse_document(b"%PDF-1.4\n1 0 obj\n<< /A 1 >>\n").unwrap_err();
    assert_eq!(err, PdfError::UnbalancedObject { offset: 9 });
}

#[test]
fn object_streams_are_rejected() {
    let bytes = wrap(&["<< /Type /ObjStm /N 0 /First 0 /Length 0 >>\nstream\n\nendstream"]);
    assert!(matches!(
        parse_document(&bytes),
        Err(PdfError::ObjectStreamsPresent(id)) if id == ObjectId::new(1, 0)
    ));
}

#[test]
fn encrypted_documents_are_rejected() {
    let bytes = b"%PDF-1.4\n1 0 obj\n<< >>\nendobj\ntrailer\n<< /Encrypt 1 0 R >>\n%%EOF";
    assert_eq!(parse_document(bytes).unwrap_err(), PdfError::Encrypted);
}

#[test]
fn classic_xref_is_recorded() {
    let doc = parse_document(&wrap(&["<< /Type /Catalog >>"])).unwrap();
    assert_eq!(doc.xref_style, XrefStyle::ClassicTable);
    let mut broken = wrap(&["<< /Type /Catalog >>"]);
    let at = broken.windows(10).position(|w| w == b"0000000009").unwrap();
    broken[at + 9] = b'7';
    assert_eq!(
        parse_document(&broken).unwrap().xref_style,
        XrefStyle::Reconstructed
    );
}

#[test]
fn generated_fixture_roundtrips() {
    let fx =
        generate_fixture("page\n1 0 0 1 50 50 cm\nstream\n2x 10 20 m\nform\n0.5 g\nimage").unwrap();
    let doc = parse_document(&fx.bytes).unwrap();
    let again = reparse(&doc);
    assert_eq!(again.objects.len(), doc.objects.len());
    for (a, b) in doc.objects.iter().zip(&again.objects) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.value, b.value);
        assert_eq!(
            a.stream_bytes().map(<[u8]>::len),
            b.stream_bytes().map(<[u8]>::len)
        );
    }
    // A file already in canonical layout is reproduced byte for byte.
    assert_eq!(serialize_document(&doc), fx.bytes);
    assert_structurally_valid(&serialize_document(&doc));
}

#[test]
fn two_pages_in_file_order() {
    let fx = generate_fixture("page\n1 w\npage\n2 w").unwrap();
    let doc = parse_document(&fx.bytes).unwrap();
    let found = collect_content_streams(&doc);
    assert_eq!(found.streams.len(), 2);
    assert!(found.streams[0].owner.number < found.streams[1].owner.number);
    assert_eq!(found.streams[0].decoded_bytes, b"1 w\n");
    assert!(found
        .streams
        .iter()
        .all(|s| s.role == StreamRole::PageContents));
    assert!(found.skipped.is_empty());
}

#[test]
fn image_only_document_has_no_content_streams() {
    let bytes = wrap(&[
        "<< /Type /Catalog >>",
        "<< /Type /XObject /Subtype /Image /Width 1 /Height 1 /Filter /DCTDecode /Length 2 >>\nstream\n\u{1}\u{2}\nendstream",
    ]);
    let found = collect_content_streams(&parse_document(&bytes).unwrap());
    assert!(found.streams.is_empty());
    assert_eq!(found.skipped.len(), 1);
    assert_eq!(found.skipped[0].owner, ObjectId::new(2, 0));
}

#[test]
fn contents_array_keeps_order() {
    let fx = generate_fixture("page\n1 w\nstream\n2 w\nstream\n3 w").unwrap();
    let found = collect_content_streams(&parse_document(&fx.bytes).unwrap());
    let texts: Vec<_> = found
        .streams
        .iter()
        .map(|s| s.decoded_bytes.clone())
        .collect();
    assert_eq!(
        texts,
        [b"1 w\n".to_vec(), b"2 w\n".to_vec(), b"3 w\n".to_vec()]
    );
}

#[test]
fn forms_and_charprocs_have_roles() {
    let fx = generate_fixture("page\n1 w\nform\n2 w\ncharproc\n1000 0 d0").unwrap();
    let found = collect_content_streams(&parse_document(&fx.bytes).unwrap());
    let roles: Vec<_> = found.streams.iter().map(|s| s.role).collect();
    assert_eq!(
        roles,
        [
            StreamRole::Type3CharProc,
            StreamRole::FormXObject,
            StreamRole::PageContents
        ]
    );
}

#[test]
fn unsupported_content_filter_is_skipped() {
    let bytes = wrap(&[
        "<< /Type /Catalog /Pages 2 0 R >>",
        "<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        "<< /Type /Page /Parent 2 0 R /Contents 4 0 R >>",
        "<< /Filter /LZWDecode /Length 1 >>\nstream\nx\nendstream",
    ]);
    let found = collect_content_streams(&parse_document(&bytes).unwrap());
    assert!(found.streams.is_empty());
    assert!(found.skipped[0].reason.contains("LZWDecode"));
}

#[test]
fn flate_stream_decodes() {
    let fx = generate_fixture("filter flate\nBT /F1 12 Tf ET").unwrap();
    let doc = parse_document(&fx.bytes).unwrap();
    let found = collect_content_streams(&doc);
    assert_eq!(found.streams[0].decoded_bytes, b"BT /F1 12 Tf ET\n");
    assert_eq!(found.streams[0].filter_chain, [FLATE.to_vec()]);
}

#[test]
fn dct_filter_is_unsupported() {
    let bytes = wrap(&["<< /Filter /DCTDecode /Length 1 >>\nstream\nx\nendstream"]);
    let doc = parse_document(&bytes).unwrap();
    assert!(matches!(
        decode_stream(&doc.objects[0]),
        Err(PdfError::UnsupportedFilter(_))
    ));
}

#[test]
fn replace_stream_grows_length() {
    let body = "x".repeat(100);
    let bytes = wrap(&[&format!("<< /Length 100 >>\nstream\n{body}\nendstream")]);
    let mut doc = parse_document(&bytes).unwrap();
    let id = ObjectId::new(1, 0);
    doc.replace_stream(id, "y".repeat(120).as_bytes()).unwrap();
    let out = serialize_document(&doc);
    assert_structurally_valid(&out);
    let again = parse_document(&out).unwrap();
    assert_eq!(
        dict_get(again.objects[0].dict().unwrap(), "Length"),
        Some(&Object::Integer(120))
    );
    assert_eq!(
        again.objects[0].stream_bytes().unwrap(),
        "y".repeat(120).as_bytes()
    );
}

#[test]
fn replace_stream_unknown_object() {
    let mut doc = parse_document(&wrap(&["<< >>"])).unwrap();
    assert_eq!(
        doc.replace_stream(ObjectId::new(9, 0), b""),
        Err(PdfError::UnknownObject(ObjectId::new(9, 0)))
    );
    assert_eq!(
        doc.replace_stream(ObjectId::new(1, 0), b""),
        Err(PdfError::UnknownObject(ObjectId::new(1, 0)))
    );
}

#[test]
fn replace_stream_reencodes_flate() {
    let fx = generate_fixture("filter flate\n5 w").unwrap();
    let mut doc = parse_document(&fx.bytes).unwrap();
    let owner = collect_content_streams(&doc).streams[0].owner;
    doc.replace_stream(owner, b"5.5 w\n").unwrap();
    let out = serialize_document(&doc);
    assert_structurally_valid(&out);
    let again = parse_document(&out).unwrap();
    assert_eq!(
        collect_content_streams(&again).streams[0].decoded_bytes,
        b"5.5 w\n"
    );
}

#[test]
fn indirect_length_is_followed_and_updated() {
    let bytes = wrap(&["<< /Length 2 0 R >>\nstream\nabcd\nendstream", "4"]);
    let mut doc = parse_document(&bytes).unwrap();
    assert_eq!(doc.objects[0].stream_bytes().unwrap(), b"abcd");
    doc.replace_stream(ObjectId::new(1, 0), b"abcdefgh")
        .unwrap();
    let out = serialize_document(&doc);
    assert_structurally_valid(&out);
    let again = parse_document(&out).unwrap();
    assert_eq!(
        again.get(ObjectId::new(2, 0)).unwrap().value,
        Object::Integer(8)
    );
}

#[test]
fn wrong_length_is_repaired() {
    let bytes = wrap(&["<< /Length 99 >>\nstream\nabcd\nendstream"]);
    let doc = parse_document(&bytes).unwrap();
    assert_eq!(doc.objects[0].stream_bytes().unwrap(), b"abcd");
    assert_structurally_valid(&serialize_document(&doc));
}

#[test]
fn later_revision_supersedes() {
    let mut bytes = wrap(&["<< /Type /Catalog /V 1 >>"]);
    bytes.extend_from_slice(b"1 0 obj\n<< /Type /Catalog /V 2 >>\nendobj\n");
    let doc = parse_document(&bytes).unwrap();
    assert_eq!(doc.objects.len(), 1);
    assert_eq!(
        dict_get(doc.objects[0].dict().unwrap(), "V"),
        Some(&Object::Integer(2))
    );
}

#[test]
fn comments_between_objects_survive() {
    let bytes = wrap_with(
        &["<< /Type /Catalog >>", "<< /A 1 >>"],
        "%% note 7 0 obj\n\n",
    );
    let doc = parse_document(&bytes).unwrap();
    assert_eq!(doc.objects.len(), 2);
    assert_eq!(serialize_document(&doc), bytes);
}

#[test]
fn indirect_length_is_rewritten_in_place() {
    let bytes = wrap(&[
        "<< /Type /Catalog >>",
        &format!("<< /Length 3 0 R >>\nstream\n{SAMPLE_STREAM}\nendstream"),
        &format!("  {}  ", SAMPLE_STREAM.len()),
    ]);
    let mut doc = parse_document(&bytes).unwrap();
    let longer = format!("{SAMPLE_STREAM}\n1 w");
    doc.replace_stream(ObjectId::new(2, 0), longer.as_bytes())
        .unwrap();
    let out = serialize_document(&doc);
    let expected = format!("3 0 obj\n  {}  \nendobj", longer.len());
    assert!(out
        .windows(expected.len())
        .any(|w| w == expected.as_bytes()));
    assert_structurally_valid(&out);
}
