//! Per-operator embedding policy: which operands may carry bits, how far each
//! may drift (percent of its value), how many bits it carries, and whether
//! the operator is considered reliable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scanner::OperatorSite;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config mismatch: {0}")]
    Mismatch(String),
}

/// A relative budget in percent, held as an exact decimal
/// (`mantissa / 10^scale` percent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Percent {
    mantissa: u64,
    scale: u32,
}

impl Percent {
    pub const fn new(mantissa: u64, scale: u32) -> Self {
        Percent { mantissa, scale }
    }

    pub fn mantissa(self) -> u64 {
        self.mantissa
    }

    pub fn scale(self) -> u32 {
        self.scale
    }

    pub fn is_positive(self) -> bool {
        self.mantissa > 0
    }

    pub fn as_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }
}

impl FromStr for Percent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let valid = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !valid(int) || !valid(frac) || frac.len() > 12 {
            return Err(format!("invalid percentage {s:?}"));
        }
        let mantissa = format!("{int}{frac}")
            .parse::<u64>()
            .map_err(|_| format!("percentage {s:?} out of range"))?;
        Ok(Percent::new(mantissa, frac.len() as u32))
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = format!("{:0width$}", self.mantissa, width = self.scale as usize + 1);
        let (int, frac) = digits.split_at(digits.len() - self.scale as usize);
        if frac.is_empty() {
            write!(f, "{int}")
        } else {
            write!(f, "{int}.{frac}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reliability {
    Good,
    Low,
}

/// Which operand positions of an operator may carry bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UsableIndices {
    List(Vec<usize>),
    All,
    /// Every numeric element of a `TJ` array.
    AllNumeric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Budgets {
    PerIndex(BTreeMap<usize, Percent>),
    /// One budget for every operand position.
    Uniform(Percent),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub op_name: &'static str,
    pub min_operands: usize,
    /// `usize::MAX` for `TJ`.
    pub max_operands: usize,
    pub budgets: Budgets,
    pub default_n: u32,
    pub reliability: Reliability,
    pub enabled: bool,
}

impl RegistryEntry {
    pub fn usable_indices(&self) -> UsableIndices {
        match &self.budgets {
            Budgets::PerIndex(map) => UsableIndices::List(map.keys().copied().collect()),
            Budgets::Uniform(_) if self.op_name == "TJ" => UsableIndices::AllNumeric,
            Budgets::Uniform(_) => UsableIndices::All,
        }
    }

    /// Budget for operand `index`, or `None` if that position never carries bits.
    pub fn budget(&self, index: usize) -> Option<Percent> {
        match &self.budgets {
            Budgets::PerIndex(map) => map.get(&index).copied(),
            Budgets::Uniform(p) => Some(*p),
        }
    }

    pub fn is_tj(&self) -> bool {
        self.op_name == "TJ"
    }
}

/// Operator names with their numeric operand counts, in table order.
pub const OPERATORS: [(&str, usize, usize); 32] = [
    ("c", 6, 6),
    ("v", 4, 4),
    ("y", 4, 4),
    ("l", 2, 2),
    ("m", 2, 2),
    ("re", 4, 4),
    ("cm", 6, 6),
    ("i", 1, 1),
    ("M", 1, 1),
    ("w", 1, 1),
    ("G", 1, 1),
    ("g", 1, 1),
    ("K", 4, 4),
    ("k", 4, 4),
    ("RG", 3, 3),
    ("rg", 3, 3),
    ("sc", 1, 4),
    ("SC", 1, 4),
    ("scn", 1, 4),
    ("SCN", 1, 4),
    ("Tc", 1, 1),
    ("Td", 2, 2),
    ("TD", 2, 2),
    ("Tf", 1, 1),
    ("TL", 1, 1),
    ("Tm", 6, 6),
    ("Ts", 1, 1),
    ("Tw", 1, 1),
    ("Tz", 1, 1),
    ("TJ", 0, usize::MAX),
    ("d0", 2, 2),
    ("d1", 6, 6),
];

pub fn operand_bounds(op: &str) -> Option<(usize, usize)> {
    OPERATORS
        .iter()
        .find(|(name, _, _)| *name == op)
        .map(|&(_, a, b)| (a, b))
}

fn pct(s: &str) -> Percent {
    s.parse().expect("built-in percentages are valid")
}

fn per_index(pairs: &[(usize, &str)]) -> Budgets {
    Budgets::PerIndex(pairs.iter().map(|&(i, p)| (i, pct(p))).collect())
}

fn all_indices(count: usize, p: &str) -> Budgets {
    Budgets::PerIndex((0..count).map(|i| (i, pct(p))).collect())
}

/// The built-in operator table. Where a range of cutoffs is published the
/// lower bound is used.
pub fn default_registry() -> Vec<RegistryEntry> {
    OPERATORS
        .iter()
        .map(|&(op, min, max)| {
            let mut reliability = Reliability::Good;
            let mut enabled = true;
            let budgets = match op {
                "c" | "v" | "y" | "w" => all_indices(max, "1"),
                "l" | "m" => all_indices(max, "0.05"),
                "re" => all_indices(max, "0.2"),
                "cm" => per_index(&[
                    (0, "0.1"),
                    (1, "0.1"),
                    (2, "0.1"),
                    (3, "0.1"),
                    (4, "0.05"),
                    (5, "0.05"),
                ]),
                "i" | "M" => {
                    enabled = false;
                    Budgets::PerIndex(BTreeMap::new())
                }
                "G" | "g" | "K" | "k" | "RG" | "rg" => all_indices(max, "5"),
                "sc" | "SC" | "scn" | "SCN" => Budgets::Uniform(pct("5")),
                "Tc" | "Tw" => {
                    reliability = Reliability::Low;
                    all_indices(max, "1")
                }
                "Td" | "TD" | "TL" => all_indices(max, "2"),
                "Tf" | "Tz" => all_indices(max, "0.5"),
                "Tm" => per_index(&[(0, "5"), (1, "5"), (2, "5"), (3, "5"), (4, "2"), (5, "2")]),
                "Ts" => all_indices(max, "5"),
                "TJ" => Budgets::Uniform(pct("15")),
                // w_y is fixed to zero for glyph widths.
                "d0" => per_index(&[(0, "1")]),
                "d1" => per_index(&[(0, "1"), (2, "1"), (3, "1"), (4, "1"), (5, "1")]),
                other => unreachable!("operator {other} missing from table"),
            };
            RegistryEntry {
                op_name: op,
                min_operands: min,
                max_operands: max,
                budgets,
                default_n: 1,
                reliability,
                enabled,
            }
        })
        .collect()
}

pub const HEADER_BITS: u32 = 32;
pub const DEFAULT_VERSION_TAG: &str = "opsteg-v1";
pub const MAX_BITS_PER_OPERAND: u32 = 32;

/// Resolved embedding configuration. Embedder and extractor must agree on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StegConfig {
    pub entries: Vec<RegistryEntry>,
    pub include_low_reliability: bool,
    pub header_bits: u32,
    pub version_tag: String,
}

impl Default for StegConfig {
    fn default() -> Self {
        StegConfig {
            entries: default_registry(),
            include_low_reliability: true,
            header_bits: HEADER_BITS,
            version_tag: DEFAULT_VERSION_TAG.to_string(),
        }
    }
}

impl StegConfig {
    pub fn entry(&self, op: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.op_name == op)
    }

    fn entry_mut(&mut self, op: &str) -> Option<&mut RegistryEntry> {
        self.entries.iter_mut().find(|e| e.op_name == op)
    }

    /// Checks the invariants every entry must satisfy.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.header_bits != HEADER_BITS {
            return Err(ConfigError::Mismatch(format!(
                "header_bits must be {HEADER_BITS}, got {}",
                self.header_bits
            )));
        }
        for e in &self.entries {
            if e.min_operands > e.max_operands {
                return Err(ConfigError::Mismatch(format!(
                    "{}: min operands above max",
                    e.op_name
                )));
            }
            if e.default_n == 0 || e.default_n > MAX_BITS_PER_OPERAND {
                return Err(ConfigError::Mismatch(format!(
                    "{}: n must be in 1..={MAX_BITS_PER_OPERAND}",
                    e.op_name
                )));
            }
            let budgets_ok = match &e.budgets {
                Budgets::PerIndex(map) => map.values().all(|p| p.is_positive()),
                Budgets::Uniform(p) => p.is_positive(),
            };
            if !budgets_ok {
                return Err(ConfigError::Mismatch(format!(
                    "{}: budgets must be > 0",
                    e.op_name
                )));
            }
            let any_usable = match &e.budgets {
                Budgets::PerIndex(map) => !map.is_empty(),
                Budgets::Uniform(_) => true,
            };
            if e.enabled && !any_usable {
                return Err(ConfigError::Mismatch(format!(
                    "{} is enabled but has no budget; give it p0=<percent>",
                    e.op_name
                )));
            }
        }
        Ok(())
    }
}

/// Sets `eligible` on every operand slot: the operator must be enabled, the
/// position must have a budget, the operand must be nonzero, and low
/// reliability operators are skipped unless the config includes them.
pub fn mark_eligibility(sites: &mut [OperatorSite], cfg: &StegConfig) -> Result<(), ConfigError> {
    for site in sites {
        let entry = cfg
            .entry(&site.op_name)
            .ok_or_else(|| ConfigError::Mismatch(format!("unknown operator {}", site.op_name)))?;
        let op_ok =
            entry.enabled && (cfg.include_low_reliability || entry.reliability != Reliability::Low);
        for slot in &mut site.operands {
            slot.eligible = op_ok && entry.budget(slot.operand_index).is_some() && !slot.is_zero();
        }
    }
    Ok(())
}

fn parse_bool(v: &str, line: usize) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::Parse {
            line,
            message: format!("expected true or false, got {v:?}"),
        }),
    }
}

/// Parses the line-oriented config format:
///
/// ```text
/// # comment
/// include_low_reliability=false
/// version_tag=team-a
/// op Tf n=2
/// op cm p4=0.1 p5=0.1
/// op i enabled=true p0=0.5
/// ```
pub fn load_config(bytes: &[u8]) -> Result<StegConfig, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut cfg = StegConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let perr = |message: String| ConfigError::Parse { line, message };
        if let Some(rest) = body
            .strip_prefix("op ")
            .or_else(|| body.strip_prefix("op\t"))
        {
            let mut words = rest.split_whitespace();
            let name = words
                .next()
                .ok_or_else(|| perr("missing operator name".into()))?;
            let entry = cfg
                .entry_mut(name)
                .ok_or_else(|| ConfigError::Mismatch(format!("unknown operator {name:?}")))?;
            for word in words {
                let (key, value) = word
                    .split_once('=')
                    .ok_or_else(|| perr(format!("expected key=value, got {word:?}")))?;
                apply_op_setting(entry, key, value, line)?;
            }
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| perr(format!("unrecognised line {body:?}")))?;
        match key.trim() {
            "include_low_reliability" => {
                cfg.include_low_reliability = parse_bool(value.trim(), line)?
            }
            "version_tag" => {
                let tag = value.trim();
                if tag.is_empty() {
                    return Err(perr("version_tag must not be empty".into()));
                }
                cfg.version_tag = tag.to_string();
            }
            other => return Err(perr(format!("unknown key {other:?}"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_op_setting(
    entry: &mut RegistryEntry,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let perr = |message: String| ConfigError::Parse { line, message };
    let percent = |v: &str| v.parse::<Percent>().map_err(perr);
    match key {
        "n" => {
            entry.default_n = value
                .parse()
                .map_err(|_| perr(format!("invalid bit count {value:?}")))?;
        }
        "enabled" => entry.enabled = parse_bool(value, line)?,
        "p" => {
            let p = percent(value)?;
            match &mut entry.budgets {
                Budgets::Uniform(u) => *u = p,
                Budgets::PerIndex(map) if map.is_empty() => {
                    map.extend((0..entry.max_operands).map(|i| (i, p)));
                }
                Budgets::PerIndex(map) => map.values_mut().for_each(|v| *v = p),
            }
        }
        _ => {
            let idx = key
                .strip_prefix('p')
                .and_then(|i| i.parse::<usize>().ok())
                .ok_or_else(|| perr(format!("unknown setting {key:?}")))?;
            let p = percent(value)?;
            if idx >= entry.max_operands {
                return Err(ConfigError::Mismatch(format!(
                    "{} has no operand index {idx}",
                    entry.op_name
                )));
            }
            match &mut entry.budgets {
                Budgets::PerIndex(map) => {
                    map.insert(idx, p);
                }
                Budgets::Uniform(_) => {
                    return Err(ConfigError::Mismatch(format!(
                        "{} takes a single budget; use p=<percent>",
                        entry.op_name
                    )))
                }
            }
        }
    }
    Ok(())
}
