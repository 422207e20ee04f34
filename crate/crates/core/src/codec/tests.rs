use proptest::prelude::*;

use super::*;
use crate::fixture::generate_fixture;
use crate::pdf::parse_document;
use crate::registry::{load_config, Percent, StegConfig};

fn fixture_doc(spec: &str) -> crate::pdf::PdfDocument {
    parse_document(&generate_fixture(spec).unwrap().bytes).unwrap()
}

/// Scans every value that differs from `o·10^k` only in its low `n` bits and
/// returns the first extension level with a nonzero in-budget candidate.
fn brute_force(o: u128, n: u32, s: u128, mantissa: u128, scale: u32) -> (u128, usize) {
    let modulus = 1u128 << n;
    for k in 0..12 {
        let ok = o * 10u128.pow(k);
        let lo = ok.saturating_sub(modulus - 1);
        let hits: Vec<u128> = (lo..=ok + modulus - 1)
            .filter(|v| v % modulus == s && v / modulus == ok / modulus && *v > 0)
            .filter(|v| 100 * 10u128.pow(scale) * v.abs_diff(ok) <= mantissa * ok)
            .collect();
        assert!(hits.len() <= 1);
        if let Some(&v) = hits.first() {
            return (v, k as usize);
        }
    }
    panic!("no extension level found for O={o}");
}

#[test]
fn matches_brute_force_on_a_sample_grid() {
    for p in ["0.05", "0.5", "1", "5", "15"] {
        let pct: Percent = p.parse().unwrap();
        for o in (1u32..=600).chain([999, 1024, 4095, 5000]) {
            for n in 1..=3 {
                for s in 0..(1u64 << n) {
                    let slot = DigitInteger::parse(&o.to_string()).unwrap();
                    let got = embed_into_operand(&slot, s, n, pct);
                    let (v, k) =
                        brute_force(o.into(), n, s.into(), pct.mantissa().into(), pct.scale());
                    assert_eq!(got.frac_count, k, "O={o} n={n} s={s} p={p}");
                    assert_eq!(got.value(), v.into(), "O={o} n={n} s={s} p={p}");
                }
            }
        }
    }
}

#[test]
fn forty_slots_carry_one_byte() {
    let doc = fixture_doc("20x 288 720 Td");
    let cap = capacity(&doc, &StegConfig::default()).unwrap();
    assert_eq!(cap.bits, 40);
    assert_eq!(cap.bytes(32), 1);
    let (stego, report) = embed_document(&doc, &[0xA5], &StegConfig::default()).unwrap();
    assert_eq!(report.bits_embedded, 40);
    assert_eq!(report.operands_visited, 40);
    assert_eq!(report.operands_modified + report.operands_exact_match, 40);
    let again = parse_document(&stego.to_bytes()).unwrap();
    assert_eq!(
        extract_document(&again, &StegConfig::default()).unwrap(),
        [0xA5]
    );
}

#[test]
fn four_thousand_slots() {
    let doc = fixture_doc("4000x 0.5 w");
    let cap = capacity(&doc, &StegConfig::default()).unwrap();
    assert_eq!(cap.bits, 4000);
    assert_eq!(cap.bytes(32), (4000 - 32) / 8);
    assert_eq!(cap.per_operator["w"].slots, 4000);
}

#[test]
fn no_eligible_slots() {
    let doc = fixture_doc("0 0 0 RG\n0 w\n(12 34 m) Tj");
    let cap = capacity(&doc, &StegConfig::default()).unwrap();
    assert_eq!((cap.bits, cap.bytes(32)), (0, 0));
    assert!(cap.per_operator.is_empty());
    assert_eq!(
        extract_document(&doc, &StegConfig::default()),
        Err(StegError::TruncatedMessage { read: 0 })
    );
}

#[test]
fn empty_payload_uses_header_only() {
    let doc = fixture_doc("100x 12.5 w");
    let (stego, report) = embed_document(&doc, b"", &StegConfig::default()).unwrap();
    assert_eq!(report.bits_embedded, 32);
    assert_eq!(report.operands_visited, 32);
    assert_eq!(
        extract_document(&stego, &StegConfig::default()).unwrap(),
        b""
    );
}

#[test]
fn insufficient_capacity() {
    let doc = fixture_doc("100x 12.5 w");
    let err = embed_document(&doc, &[0; 9], &StegConfig::default()).unwrap_err();
    assert_eq!(
        err,
        StegError::InsufficientCapacity {
            required: 104,
            available: 100
        }
    );
}

#[test]
fn clean_cover_reports_implausible_length() {
    // Every low bit reads 1, so the length header is 0xFFFFFFFF.
    let doc = fixture_doc("200x 3 w");
    assert!(matches!(
        extract_document(&doc, &StegConfig::default()),
        Err(StegError::ImplausibleLength {
            length: 0xFFFF_FFFF,
            available: 200
        })
    ));
}

#[test]
fn wider_groups_and_padding() {
    // 3-bit groups over 40 framed bits leave a final group with one real bit.
    let cfg = load_config(b"op w n=3").unwrap();
    let doc = fixture_doc("50x 123.25 w");
    let (stego, report) = embed_document(&doc, &[0x3C], &cfg).unwrap();
    assert_eq!(report.operands_visited, 14);
    assert_eq!(report.bits_embedded, 40);
    assert_eq!(extract_document(&stego, &cfg).unwrap(), [0x3C]);
}

#[test]
fn digits_added_matches_token_growth() {
    let doc = fixture_doc("300x 98 w\n300x 1 0 0 1 306 396 cm");
    let payload: Vec<u8> = (0..60u8).collect();
    let before = crate::pdf::collect_content_streams(&doc).streams[0]
        .decoded_bytes
        .len() as i64;
    let (stego, report) = embed_document(&doc, &payload, &StegConfig::default()).unwrap();
    let after = crate::pdf::collect_content_streams(&stego).streams[0]
        .decoded_bytes
        .len() as i64;
    assert_eq!(after - before, report.digits_added);
    assert!(report.digits_added > 0);
}

#[test]
fn report_key_values() {
    let report = EmbedReport {
        operands_visited: 3,
        digits_added: -1,
        ..Default::default()
    };
    let text = report.to_string();
    assert!(text.contains("operands_visited=3\n"));
    assert!(text.contains("digits_added=-1\n"));
}

fn arb_operand() -> impl Strategy<Value = String> {
    (any::<bool>(), 0u32..100_000, 0usize..4).prop_map(|(neg, v, frac)| {
        let digits = format!("{v:0>width$}", width = frac + 1);
        let (int, f) = digits.split_at(digits.len() - frac);
        let sign = if neg { "-" } else { "" };
        if f.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{f}")
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedding_respects_budget_and_sign(token in arb_operand(), n in 1u32..=4, s in any::<u64>(), p in prop::sample::select(vec!["0.05", "0.2", "1", "5", "15"])) {
        let slot = DigitInteger::parse(&token).unwrap();
        prop_assume!(!slot.is_zero());
        let pct: Percent = p.parse().unwrap();
        let s = s & ((1 << n) - 1);
        let out = embed_into_operand(&slot, s, n, pct);
        prop_assert_eq!(read_lsb_bits(&out, n), s);
        prop_assert_eq!(out.negative, slot.negative);
        prop_assert!(!out.is_zero());
        prop_assert!(out.frac_count <= out.digits.len());
        prop_assert!(out.frac_count >= slot.frac_count);
        let base = slot.value() * num_bigint::BigUint::from(10u32).pow((out.frac_count - slot.frac_count) as u32);
        prop_assert!(within_budget(&base, &out.value(), pct));
        // Pre-extension insertion bound.
        let o = slot.value();
        let modulus = num_bigint::BigUint::from(1u32 << n);
        let first = (&o / &modulus) * &modulus + num_bigint::BigUint::from(s);
        let delta = if first > o { &first - &o } else { &o - &first };
        prop_assert!(delta < modulus);
    }

    #[test]
    fn roundtrip_on_random_covers(
        lines in prop::collection::vec((prop::sample::select(vec!["w", "Td", "cm", "rg", "TJ", "Tf", "re"]), prop::collection::vec(arb_operand(), 6)), 40..120),
        payload in prop::collection::vec(any::<u8>(), 0..8),
    ) {
        let mut spec = String::new();
        for (op, ops) in &lines {
            let line = match *op {
                "TJ" => format!("[({}) {} (x) {}] TJ", ops[0], ops[1], ops[2]),
                "w" | "Tf" => format!("{} {op}", ops[0]),
                "Td" => format!("{} {} Td", ops[0], ops[1]),
                "rg" => format!("{} {} {} rg", ops[0], ops[1], ops[2]),
                _ => format!("{} {op}", ops[..if *op == "re" { 4 } else { 6 }].join(" ")),
            };
            spec.push_str(&line);
            spec.push('\n');
        }
        let doc = fixture_doc(&spec);
        let cfg = StegConfig::default();
        let cap = capacity(&doc, &cfg).unwrap();
        let result = embed_document(&doc, &payload, &cfg);
        if (payload.len() as u64 + 4) * 8 > cap.bits {
            let is_insufficient = matches!(result, Err(StegError::InsufficientCapacity { .. }));
            prop_assert!(is_insufficient);
        } else {
            let (stego, _) = result.unwrap();
            let reparsed = parse_document(&stego.to_bytes()).unwrap();
            prop_assert_eq!(extract_document(&reparsed, &cfg).unwrap(), payload);
            // Embedding never removes eligible slots.
            prop_assert_eq!(capacity(&reparsed, &cfg).unwrap().bits, cap.bits);
        }
    }
}
