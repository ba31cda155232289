//! The dataset file format: one JSON record per sample, one per line,
//! sorted by id. Records carry both the formal trees (so tools can score
//! without re-deriving anything) and the rendered text shown to models.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lns_core::gold::GoldStep;
use lns_core::model::{Fact, Query, Rule, Value};
use lns_core::vocab::WorldElements;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One base fact: formal form, parse tree, and rendered text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedFact {
    /// 1-based; `fact_3` in citations refers to `facts[2]`.
    pub id: usize,
    pub formal: String,
    pub tree: Fact,
    pub templated: String,
    /// Fluent rewrite, present only when it passed re-validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined: Option<String>,
}

impl RenderedFact {
    /// The text a prompt should show: the refined wording when one
    /// survived validation, otherwise the template rendering.
    pub fn text(&self) -> &str {
        self.refined.as_deref().unwrap_or(&self.templated)
    }
}

/// One rule: formal form, parse tree, and rendered text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedRule {
    /// 1-based; `rule_5` in citations refers to `rules[4]`.
    pub id: usize,
    pub formal: String,
    pub tree: Rule,
    pub templated: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined: Option<String>,
}

impl RenderedRule {
    pub fn text(&self) -> &str {
        self.refined.as_deref().unwrap_or(&self.templated)
    }
}

/// The question posed at the end of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedQuery {
    pub formal: String,
    pub tree: Query,
    pub text: String,
}

/// One complete synthesized sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// 1-based position in the dataset.
    pub id: usize,
    /// Fingerprint of the generating configuration (hex).
    pub config: String,
    pub elements: WorldElements,
    pub facts: Vec<RenderedFact>,
    pub rules: Vec<RenderedRule>,
    pub query: RenderedQuery,
    pub answer: Value,
    pub gold_steps: Vec<GoldStep>,
    /// Length of the gold derivation chain.
    pub realized_depth: usize,
}

/// What can go wrong reading or writing a dataset file.
#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> RecordError {
    RecordError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `records` as JSON lines, sorted by id.
pub fn write_jsonl(path: &Path, records: &[SampleRecord]) -> Result<(), RecordError> {
    let mut ordered: Vec<&SampleRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.id);
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for record in ordered {
        let line = serde_json::to_string(record).expect("records always serialize");
        out.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads a JSON-lines dataset; parse failures name the offending line.
pub fn read_jsonl(path: &Path) -> Result<Vec<SampleRecord>, RecordError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| RecordError::Json {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// The exemplar file written next to `dataset`: same record format, used
/// as few-shot material by the prompt builder.
pub fn exemplars_path(dataset: &Path) -> std::path::PathBuf {
    let stem = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    dataset.with_file_name(format!("{stem}.exemplars.jsonl"))
}
