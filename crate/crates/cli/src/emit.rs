//! Report assembly and output: a stable JSON envelope (all numbers as
//! strings), or CSV for tabular payloads.

use crate::{Failure, Format};
use serde_json::{Map, Value};
use std::io::Write;
use std::path::PathBuf;

/// A flat table for CSV emission.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

/// What a subcommand hands back to the emitter.
pub struct Outcome {
    pub payload: Value,
    pub probable_prime_used: bool,
    pub table: Option<Table>,
    /// A violated invariant: the report is still emitted, then the
    /// process exits with code 3.
    pub violation: Option<String>,
}

impl Outcome {
    pub fn new(payload: Value) -> Self {
        Outcome { payload, probable_prime_used: false, table: None, violation: None }
    }

    pub fn probable(mut self, used: bool) -> Self {
        self.probable_prime_used = used;
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_violation(mut self, violation: Option<String>) -> Self {
        self.violation = violation;
        self
    }
}

/// Serialize into the stringified-number JSON form.
pub fn json_of<T: serde::Serialize>(value: &T) -> Result<Value, Failure> {
    let raw = serde_json::to_value(value)
        .map_err(|e| Failure { code: 3, message: format!("serialization failed: {e}") })?;
    Ok(stringify_numbers(raw))
}

/// Every JSON number becomes its decimal string, recursively; precision
/// is whatever the shortest round-trip rendering carries.
fn stringify_numbers(value: Value) -> Value {
    match value {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(items) => Value::Array(items.into_iter().map(stringify_numbers).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, stringify_numbers(v))).collect())
        }
        other => other,
    }
}

/// The versioned report envelope.
pub fn envelope(
    command: &str,
    config: Value,
    threads: Option<usize>,
    outcome: &Outcome,
    wall_ms: u128,
) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::String("schinzel-lab-report/1".into()));
    map.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    map.insert("command".into(), Value::String(command.into()));
    map.insert("config".into(), config);
    map.insert(
        "threads".into(),
        Value::String(threads.map_or_else(|| "default".into(), |n| n.to_string())),
    );
    let mut provenance = Map::new();
    provenance.insert(
        "probable_prime_used".into(),
        Value::String(outcome.probable_prime_used.to_string()),
    );
    map.insert("provenance".into(), Value::Object(provenance));
    map.insert("wall_ms".into(), Value::String(wall_ms.to_string()));
    map.insert("results".into(), outcome.payload.clone());
    Value::Object(map)
}

/// Write the chosen format to `--out` or stdout.
pub fn write_report(
    format: Format,
    out: Option<&PathBuf>,
    command: &str,
    report: &Value,
    table: Option<&Table>,
) -> Result<(), Failure> {
    let bytes = match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| Failure { code: 3, message: format!("JSON rendering failed: {e}") })?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let table = table.ok_or_else(|| {
                Failure::usage(format!("csv output is not available for `{command}`"))
            })?;
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(&table.header)
                .and_then(|()| table.rows.iter().try_for_each(|row| writer.write_record(row)))
                .map_err(|e| Failure::usage(format!("csv rendering failed: {e}")))?;
            writer
                .into_inner()
                .map_err(|e| Failure::usage(format!("csv rendering failed: {e}")))?
        }
    };
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}"))),
    }
}
