//! JSONL dataset files: one [`DatasetRecord`] object per line.
//!
//! Formulas are stored in the CNF text format, so files are diff-friendly
//! and bit-exact for a fixed seed. Field order is fixed by the struct.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Category, Formula, PairSample, ParseError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}, field {field}: {source}")]
    Formula {
        line: usize,
        field: &'static str,
        #[source]
        source: ParseError,
    },
}

/// One JSONL line. `label` is the isomorphism ground truth; `label2`
/// carries the phase-2 easy/hard target when present; `phase1_correct`
/// records the relabeling outcome on phase-2 training sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub alpha: String,
    pub beta: String,
    pub category: Category,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label2: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase1_correct: Option<u8>,
    pub seed: u64,
}

impl From<&PairSample> for DatasetRecord {
    fn from(sample: &PairSample) -> Self {
        DatasetRecord {
            id: sample.id,
            alpha: sample.alpha.render(),
            beta: sample.beta.render(),
            category: sample.category,
            label: sample.label,
            label2: None,
            phase1_correct: None,
            seed: sample.seed,
        }
    }
}

impl DatasetRecord {
    /// Parses the stored formulas back into a [`PairSample`].
    pub fn to_sample(&self) -> Result<PairSample, ParseError> {
        Ok(PairSample {
            id: self.id,
            alpha: Formula::parse(&self.alpha)?,
            beta: Formula::parse(&self.beta)?,
            category: self.category,
            label: self.label,
            seed: self.seed,
        })
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes records as JSONL, one object per line, in slice order.
pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("record serialization cannot fail");
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads a JSONL dataset, reporting the offending line on failure.
/// Blank lines are ignored.
pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line)
            .map_err(|source| DatasetError::Json { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

/// Parses every record's formulas, reporting the offending line and field.
pub fn parse_records(records: &[DatasetRecord]) -> Result<Vec<PairSample>, DatasetError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Formula::parse(&r.alpha).map_err(|source| DatasetError::Formula {
                line: i + 1,
                field: "alpha",
                source,
            })?;
            r.to_sample().map_err(|source| DatasetError::Formula {
                line: i + 1,
                field: "beta",
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn record(id: u64) -> DatasetRecord {
        DatasetRecord {
            id,
            alpha: "(a|b)&(a|c)".into(),
            beta: "(x|y)&(x|z)".into(),
            category: Category::Iso,
            label: 1,
            label2: None,
            phase1_correct: None,
            seed: 42,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let records = vec![record(0), record(1)];
        write_jsonl(&path, &records).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn optional_fields_omitted_when_absent() {
        let line = serde_json::to_string(&record(0)).unwrap();
        assert!(!line.contains("label2"));
        assert!(!line.contains("phase1_correct"));
        let mut r = record(0);
        r.label2 = Some(1);
        r.phase1_correct = Some(0);
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.contains("\"label2\":1"));
        assert!(line.contains("\"phase1_correct\":0"));
    }

    #[test]
    fn field_order_is_stable() {
        let line = serde_json::to_string(&record(7)).unwrap();
        assert_eq!(
            line,
            "{\"id\":7,\"alpha\":\"(a|b)&(a|c)\",\"beta\":\"(x|y)&(x|z)\",\
             \"category\":\"iso\",\"label\":1,\"seed\":42}"
        );
    }

    #[test]
    fn bad_json_reports_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\":0}\n").unwrap();
        match read_jsonl(&path).unwrap_err() {
            DatasetError::Json { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_formula_reports_line_and_field() {
        let mut r = record(0);
        r.beta = "(a|".into();
        match parse_records(&[r]).unwrap_err() {
            DatasetError::Formula { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, "beta");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sample_round_trips_through_record() {
        let sample = record(3).to_sample().unwrap();
        let back = DatasetRecord::from(&sample);
        assert_eq!(back, record(3));
    }
}
