//! Output records shared by the CLI and the acceptance suite.
//!
//! Every number leaves the crate inside a [`Record`] carrying the truncation,
//! the discarded tail weight, the method that produced it and the tolerance it
//! was computed to. JSON output wraps records in an envelope with
//! `schema_version`; CSV output flattens them one per row.

use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Levels kept per mode.
    pub truncation: Vec<usize>,
    pub tail_weight: f64,
    pub method: String,
    pub tolerance: f64,
}

impl Metadata {
    pub fn new(truncation: Vec<usize>, tail_weight: f64, method: impl Into<String>, tolerance: f64) -> Self {
        Self {
            truncation,
            tail_weight,
            method: method.into(),
            tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub label: String,
    pub quantity: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub metadata: Metadata,
}

impl Record {
    pub fn new(label: impl Into<String>, quantity: impl Into<String>, value: f64, metadata: Metadata) -> Self {
        Self {
            label: label.into(),
            quantity: quantity.into(),
            value,
            reference: None,
            passed: None,
            metadata,
        }
    }

    pub fn against(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn check(mut self, passed: bool) -> Self {
        self.passed = Some(passed);
        self
    }
}

/// `{"schema_version": 1, "command": ..., "records": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub command: String,
    pub records: Vec<T>,
}

impl<T> Envelope<T> {
    pub fn new(command: impl Into<String>, records: Vec<T>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            records,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// CSV columns, in order; `truncation` joins per-mode levels with `x`.
pub const CSV_COLUMNS: [&str; 10] = [
    "schema_version",
    "label",
    "quantity",
    "value",
    "reference",
    "passed",
    "truncation",
    "tail_weight",
    "method",
    "tolerance",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    label: &'a str,
    quantity: &'a str,
    value: f64,
    reference: Option<f64>,
    passed: Option<bool>,
    truncation: String,
    tail_weight: f64,
    method: &'a str,
    tolerance: f64,
}

pub fn to_csv(records: &[Record]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.serialize(CsvRow {
            schema_version: SCHEMA_VERSION,
            label: &r.label,
            quantity: &r.quantity,
            value: r.value,
            reference: r.reference,
            passed: r.passed,
            truncation: r
                .metadata
                .truncation
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            tail_weight: r.metadata.tail_weight,
            method: &r.metadata.method,
            tolerance: r.metadata.tolerance,
        })
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Name of a serde unit variant, e.g. `Method::CuttingPlane` → `cutting_plane`.
pub fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("unknown"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Method;

    fn sample() -> Record {
        Record::new(
            "fock:3",
            "upper",
            4.5,
            Metadata::new(vec![40], 0.0, "cutting_plane", 1e-3),
        )
        .against(4.46)
        .check(true)
    }

    #[test]
    fn csv_layout() {
        let text = to_csv(&[sample()]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "1,fock:3,upper,4.5,4.46,true,40,0.0,cutting_plane,0.001"
        );
    }

    #[test]
    fn json_envelope_has_schema_version() {
        let text = to_json(&Envelope::new("measure", vec![sample()])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["records"][0]["metadata"]["truncation"][0], 40);
    }

    #[test]
    fn method_names() {
        assert_eq!(variant_name(&Method::CuttingPlane), "cutting_plane");
    }
}
