use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::{CliError, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV artifact; `rows` are already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<&'static str>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting, so equal values print equal bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub subcommand: &'static str,
    pub report: Value,
    pub tables: Vec<Table>,
    /// Failed checks; a non-empty list means exit code 1.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn new(subcommand: &'static str, report: impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            subcommand,
            report: serde_json::to_value(report)?,
            tables: Vec::new(),
            failures: Vec::new(),
        })
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn document(&self, config: &RunConfig) -> Result<Value, CliError> {
        Ok(json!({
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "seed": config.seed,
            "passed": self.passed(),
            "failures": self.failures,
            "config": serde_json::to_value(config)?,
            "report": self.report,
        }))
    }

    /// Writes `<subcommand>.json` and one `<subcommand>_<table>.csv` per table.
    pub fn write(&self, config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json_path = dir.join(format!("{}.json", self.subcommand));
        let mut text = serde_json::to_string_pretty(&self.document(config)?)?;
        text.push('\n');
        fs::write(&json_path, text)?;
        written.push(json_path);
        let echo = serde_json::to_string(config)?;
        for t in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.subcommand, t.name));
            let mut buf = format!(
                "# decaylab {} schema_version={SCHEMA_VERSION} seed={}\n# config: {echo}\n",
                self.subcommand, config.seed
            )
            .into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(&t.header)?;
                for r in &t.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            fs::write(&path, buf)?;
            written.push(path);
        }
        Ok(written)
    }

    /// Error outcome carrying the message in the JSON report.
    pub fn from_error(subcommand: &'static str, err: &CliError) -> Self {
        Self {
            subcommand,
            report: json!({ "error": err.to_string() }),
            tables: Vec::new(),
            failures: vec![err.to_string()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_carries_config_echo() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outcome::new("lorenz", json!({"x": 1})).unwrap();
        let mut t = Table::new("rows", vec!["a", "b"]);
        t.push(vec![num(0.1), num(2.0)]);
        out.tables.push(t);
        let files = out.write(&RunConfig::default(), dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(&files[1]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# decaylab lorenz schema_version=1 seed=0"));
        assert!(lines[1].starts_with("# config: {"));
        assert_eq!(&lines[2..], &["a,b", "0.1,2"]);
        let doc: Value = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["passed"], true);
    }
}
