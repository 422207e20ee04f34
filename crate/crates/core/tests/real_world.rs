use opsteg_core::codec::scan_document;
use opsteg_core::{capacity, embed_document, extract_document, parse_document, StegConfig};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn load(name: &str) -> Vec<u8> {
    std::fs::read(format!("{DATA}/{name}")).unwrap()
}

#[test]
fn lapacke_fills_to_capacity() {
    let cover = load("lapacke.pdf");
    let doc = parse_document(&cover).unwrap();
    let cfg = StegConfig::default();
    let cap = capacity(&doc, &cfg).unwrap();
    let len = cap.bytes(cfg.header_bits) as usize;
    assert!(len > 0);
    let payload: Vec<u8> = (0..len).map(|i| (i * 37 % 251) as u8).collect();
    let (stego, report) = embed_document(&doc, &payload, &cfg).unwrap();
    assert_eq!(report.bits_embedded, 32 + 8 * len as u64);
    let again = parse_document(&stego.to_bytes()).unwrap();
    assert_eq!(extract_document(&again, &cfg).unwrap(), payload);
    // One byte more no longer fits.
    assert!(embed_document(&doc, &vec![0; len + 1], &cfg).is_err());
}

#[test]
fn unmodified_large_file_reserializes_identically_outside_the_xref() {
    let cover = load("issue-604.pdf");
    let doc = parse_document(&cover).unwrap();
    let out = doc.to_bytes();
    let xref = |b: &[u8]| b.windows(5).rposition(|w| w == b"\nxref").unwrap();
    assert_eq!(cover[..xref(&cover)], out[..xref(&out)]);
}

#[test]
fn large_file_census() {
    let doc = parse_document(&load("issue-604.pdf")).unwrap();
    let scanned = scan_document(&doc, &StegConfig::default()).unwrap();
    assert_eq!(scanned.streams.len(), 420);
    assert_eq!(scanned.skipped.len(), 53);
    let eligible: usize = scanned
        .streams
        .iter()
        .flat_map(|(_, sites)| sites)
        .flat_map(|s| &s.operands)
        .filter(|o| o.eligible)
        .count();
    assert_eq!(eligible, 259_757);
}
