use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Format;
use crate::format::{to_csv, to_json};

pub const SCHEMA_VERSION: &str = "1";

/// Build identifier recorded in every report.
pub fn build_id() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub build: String,
}

/// Output document of every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: &str, inputs: Value, results: Value, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            inputs,
            results,
            provenance: Provenance {
                seed,
                build: build_id(),
            },
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report is plain data")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(&self.to_value()),
            Format::Csv => to_csv(&self.to_value()),
        }
    }
}
