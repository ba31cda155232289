//! Flat `key = value` dataset configuration files.
//!
//! A configuration names every knob of one dataset: world element counts,
//! fact/rule totals (fixed or scaled by depth), the depth and condition
//! ranges, expression draw weights, the operand range, the sample count,
//! and the seed. Lines starting with `#` are comments; keys may appear in
//! any order but at most once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lns_core::model::Value;
use lns_core::seed;
use lns_core::synth::{CountSpec, SynthesisConfig};
use thiserror::Error;

/// A parsed dataset configuration.
#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub synthesis: SynthesisConfig,
    /// When set, sample depths are not drawn at random: the id space is
    /// split into equal contiguous blocks, one per depth in range, so every
    /// depth receives the same number of samples.
    pub stratified_depth: bool,
}

/// What can go wrong while reading a configuration file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` was already set")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {detail}")]
    BadValue {
        line: usize,
        key: String,
        detail: String,
    },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("`{0}` and `{1}` cannot both be set")]
    ConflictingKeys(&'static str, &'static str),
    #[error(transparent)]
    Invalid(#[from] lns_core::synth::ConfigError),
}

const KEYS: &[&str] = &[
    "entities",
    "attributes",
    "relationships",
    "facts",
    "rules",
    "depth_scaled_facts",
    "depth_scaled_rules",
    "depth_min",
    "depth_max",
    "depth_stratified",
    "condition_min",
    "condition_max",
    "expr_weights",
    "agg_weights",
    "operand_min",
    "operand_max",
    "size",
    "seed",
];

struct Raw<'a> {
    entries: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Raw<'a> {
    fn scan(text: &'a str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries.insert(key, (line, value)).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Raw { entries })
    }

    fn get<T>(
        &self,
        key: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(&(line, value)) => parse(value).map(Some).map_err(|detail| {
                ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    detail,
                }
            }),
        }
    }

    fn require<T>(
        &self,
        key: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        self.get(key, parse)?.ok_or(ConfigError::MissingKey(key))
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|e| e.to_string())
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse::<u64>().map_err(|e| e.to_string())
}

fn parse_value(s: &str) -> Result<Value, String> {
    s.parse::<Value>().map_err(|e| e.to_string())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected `true` or `false`, got `{other}`")),
    }
}

fn parse_weights<const N: usize>(s: &str) -> Result<[u32; N], String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != N {
        return Err(format!("expected {N} weights, got {}", parts.len()));
    }
    let mut out = [0u32; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse::<u32>().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn count_spec(
    raw: &Raw<'_>,
    fixed_key: &'static str,
    scaled_key: &'static str,
) -> Result<CountSpec, ConfigError> {
    let fixed = raw.get(fixed_key, parse_usize)?;
    let scaled = raw.get(scaled_key, parse_usize)?;
    match (fixed, scaled) {
        (Some(_), Some(_)) => Err(ConfigError::ConflictingKeys(fixed_key, scaled_key)),
        (Some(n), None) => Ok(CountSpec::Fixed(n)),
        (None, Some(n)) => Ok(CountSpec::PerDepth(n)),
        (None, None) => Err(ConfigError::MissingKey(fixed_key)),
    }
}

impl DatasetConfig {
    /// Parses configuration text. All keys except `seed` (default 0) and
    /// `depth_stratified` (default false) are required.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = Raw::scan(text)?;
        let synthesis = SynthesisConfig {
            n_entities: raw.require("entities", parse_usize)?,
            n_attributes: raw.require("attributes", parse_usize)?,
            n_relations: raw.require("relationships", parse_usize)?,
            n_facts: count_spec(&raw, "facts", "depth_scaled_facts")?,
            n_rules: count_spec(&raw, "rules", "depth_scaled_rules")?,
            depth_range: (
                raw.require("depth_min", parse_usize)?,
                raw.require("depth_max", parse_usize)?,
            ),
            condition_count: (
                raw.require("condition_min", parse_usize)?,
                raw.require("condition_max", parse_usize)?,
            ),
            expr_weights: raw.require("expr_weights", parse_weights::<4>)?,
            agg_weights: raw.require("agg_weights", parse_weights::<3>)?,
            operand_range: (
                raw.require("operand_min", parse_value)?,
                raw.require("operand_max", parse_value)?,
            ),
            size: raw.require("size", parse_usize)?,
            seed: raw.get("seed", parse_u64)?.unwrap_or(0),
        };
        synthesis.validate()?;
        let stratified_depth = raw.get("depth_stratified", parse_bool)?.unwrap_or(false);
        Ok(DatasetConfig {
            synthesis,
            stratified_depth,
        })
    }

    /// Canonical re-rendering: fixed key order, normalized spacing. Two
    /// configurations that parse identically render identically, so this
    /// is what the fingerprint hashes.
    pub fn canonical(&self) -> String {
        let s = &self.synthesis;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("entities", s.n_entities.to_string());
        kv("attributes", s.n_attributes.to_string());
        kv("relationships", s.n_relations.to_string());
        match s.n_facts {
            CountSpec::Fixed(n) => kv("facts", n.to_string()),
            CountSpec::PerDepth(n) => kv("depth_scaled_facts", n.to_string()),
        }
        match s.n_rules {
            CountSpec::Fixed(n) => kv("rules", n.to_string()),
            CountSpec::PerDepth(n) => kv("depth_scaled_rules", n.to_string()),
        }
        kv("depth_min", s.depth_range.0.to_string());
        kv("depth_max", s.depth_range.1.to_string());
        kv("depth_stratified", self.stratified_depth.to_string());
        kv("condition_min", s.condition_count.0.to_string());
        kv("condition_max", s.condition_count.1.to_string());
        kv(
            "expr_weights",
            s.expr_weights.map(|w| w.to_string()).join(" "),
        );
        kv("agg_weights", s.agg_weights.map(|w| w.to_string()).join(" "));
        kv("operand_min", s.operand_range.0.to_string());
        kv("operand_max", s.operand_range.1.to_string());
        kv("size", s.size.to_string());
        kv("seed", s.seed.to_string());
        out
    }

    /// Hex fingerprint of the canonical rendering; stored on every record
    /// so a dataset file can be traced back to the exact configuration.
    pub fn fingerprint_hex(&self) -> String {
        format!("{:016x}", seed::fingerprint(self.canonical().as_bytes()))
    }
}
