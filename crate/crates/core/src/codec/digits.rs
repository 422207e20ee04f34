//! Operands viewed as decimal digit strings, and LSB insertion on the integer
//! those digits spell once the decimal point is dropped.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::registry::Percent;

/// A decimal operand split into sign, digits and the count of digits after
/// the point. `-0.866` is `{ negative, "0866", 3 }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitInteger {
    pub negative: bool,
    pub digits: String,
    pub frac_count: usize,
}

impl DigitInteger {
    /// Parses a PDF numeric token made of an optional leading `-`, digits
    /// and at most one point. Returns `None` for `-`, `.`, `1.2.3`, `5-` etc.
    pub fn parse(token: &str) -> Option<Self> {
        let (negative, body) = match token.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, token),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int) || !all_digits(frac) || int.len() + frac.len() == 0 {
            return None;
        }
        Some(DigitInteger {
            negative,
            digits: format!("{int}{frac}"),
            frac_count: frac.len(),
        })
    }

    /// The integer O spelled by the digits.
    pub fn value(&self) -> BigUint {
        BigUint::parse_bytes(self.digits.as_bytes(), 10).expect("digits are decimal")
    }

    pub fn is_zero(&self) -> bool {
        self.digits.bytes().all(|b| b == b'0')
    }

    /// Canonical spelling: optional `-`, at least one integer digit, and a
    /// point only when there are fractional digits.
    pub fn to_token(&self) -> String {
        let split = self.digits.len() - self.frac_count;
        let (int, frac) = self.digits.split_at(split);
        let mut out = String::with_capacity(self.digits.len() + 3);
        if self.negative {
            out.push('-');
        }
        out.push_str(if int.is_empty() { "0" } else { int });
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        out
    }

    fn with_value(&self, value: &BigUint) -> DigitInteger {
        let text = value.to_str_radix(10);
        let digits = if text.len() < self.digits.len() {
            format!("{text:0>width$}", width = self.digits.len())
        } else {
            text
        };
        DigitInteger {
            negative: self.negative,
            digits,
            frac_count: self.frac_count,
        }
    }
}

impl fmt::Display for DigitInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_token())
    }
}

fn low_mask(n: u32) -> BigUint {
    (BigUint::one() << n) - BigUint::one()
}

/// True when `|candidate - base| <= p% of base`, compared exactly:
/// `|Δ| * 100 * 10^scale <= mantissa * base`.
pub fn within_budget(base: &BigUint, candidate: &BigUint, p: Percent) -> bool {
    let delta = if candidate >= base {
        candidate - base
    } else {
        base - candidate
    };
    let lhs = delta * BigUint::from(100u32) * BigUint::from(10u32).pow(p.scale());
    let rhs = base * BigUint::from(p.mantissa());
    lhs <= rhs
}

/// `o` with its low `n` bits replaced by the low `n` bits of `bits`.
pub fn replace_low_bits(o: &BigUint, bits: u64, n: u32) -> BigUint {
    let s = BigUint::from(bits) & low_mask(n);
    (o >> n << n) | s
}

/// Writes the `n`-bit group `bits` into the low bits of `slot`.
///
/// If the low bits already match, the slot is returned unchanged. Otherwise
/// the bits are substituted; when the substitution is zero or moves the
/// value by more than `p` percent, one more fractional digit is appended
/// (O becomes 10·O) and the substitution is retried.
///
/// Callers must pass a slot with a nonzero value, `n >= 1` and `p > 0`.
pub fn embed_into_operand(slot: &DigitInteger, bits: u64, n: u32, p: Percent) -> DigitInteger {
    assert!((1..=64).contains(&n), "bits per operand out of range");
    assert!(p.is_positive(), "budget must be positive");
    let mask = low_mask(n);
    let s = BigUint::from(bits) & &mask;
    let mut current = slot.clone();
    let mut o = current.value();
    assert!(!o.is_zero(), "zero-valued operands cannot carry bits");

    if (&o & &mask) == s {
        return current;
    }
    loop {
        let candidate = replace_low_bits(&o, bits, n);
        if !candidate.is_zero() && within_budget(&o, &candidate, p) {
            return current.with_value(&candidate);
        }
        o *= 10u32;
        current.digits.push('0');
        current.frac_count += 1;
    }
}

/// The low `n` bits of the slot's integer, most significant first when read
/// as a number of width `n`.
pub fn read_lsb_bits(slot: &DigitInteger, n: u32) -> u64 {
    let low = slot.value() & low_mask(n);
    low.iter_u64_digits().next().unwrap_or(0)
}
