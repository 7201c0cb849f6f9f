use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Primary output. CSV rows are streamed; JSON is gathered into one object
/// and written by [`Sink::finish`].
///
/// A table is `{"rows": [...], <summary keys>}` in JSON and a header plus
/// rows in CSV, with summary lines on stderr. A record is a flat JSON
/// object, or a one-row CSV table.
pub enum Sink {
    Csv { out: csv::Writer<Box<dyn Write + Send>>, columns: Vec<String> },
    Json { out: Box<dyn Write + Send>, object: Map<String, Value>, columns: Vec<String>, rows: Vec<Value> },
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Sink {
    pub fn new(format: Format, out: Box<dyn Write + Send>) -> Self {
        match format {
            Format::Csv => Sink::Csv { out: csv::Writer::from_writer(out), columns: Vec::new() },
            Format::Json => Sink::Json { out, object: Map::new(), columns: Vec::new(), rows: Vec::new() },
        }
    }

    pub fn table(&mut self, columns: &[&str]) -> io::Result<()> {
        match self {
            Sink::Csv { out, columns: cols } => {
                *cols = columns.iter().map(|c| c.to_string()).collect();
                out.write_record(columns)?;
            }
            Sink::Json { columns: cols, .. } => *cols = columns.iter().map(|c| c.to_string()).collect(),
        }
        Ok(())
    }

    pub fn row(&mut self, values: Vec<Value>) -> io::Result<()> {
        match self {
            Sink::Csv { out, columns } => {
                debug_assert_eq!(columns.len(), values.len());
                out.write_record(values.iter().map(csv_field))?;
            }
            Sink::Json { columns, rows, .. } => {
                debug_assert_eq!(columns.len(), values.len());
                let obj: Map<String, Value> = columns.iter().cloned().zip(values).collect();
                rows.push(Value::Object(obj));
            }
        }
        Ok(())
    }

    /// A table-level value: a JSON key, or a stderr line under CSV.
    pub fn summary(&mut self, key: &str, value: Value) {
        match self {
            Sink::Csv { .. } => eprintln!("{key}: {}", csv_field(&value)),
            Sink::Json { object, .. } => {
                object.insert(key.to_string(), value);
            }
        }
    }

    pub fn record(&mut self, fields: Vec<(&str, Value)>) -> io::Result<()> {
        match self {
            Sink::Csv { .. } => {
                let names: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
                self.table(&names)?;
                self.row(fields.into_iter().map(|(_, v)| v).collect())
            }
            Sink::Json { object, .. } => {
                for (k, v) in fields {
                    object.insert(k.to_string(), v);
                }
                Ok(())
            }
        }
    }

    pub fn finish(self) -> io::Result<()> {
        match self {
            Sink::Csv { mut out, .. } => out.flush(),
            Sink::Json { mut out, mut object, columns, rows } => {
                if !columns.is_empty() {
                    object.insert("rows".into(), Value::Array(rows));
                }
                serde_json::to_writer(&mut out, &Value::Object(object))?;
                writeln!(out)?;
                out.flush()
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub artifact_version: String,
    pub wall_time: f64,
    pub worker_count: usize,
}

impl RunManifest {
    pub fn write(&self, path: Option<&Path>) -> io::Result<()> {
        let text = serde_json::to_string(self)?;
        match path {
            Some(p) => std::fs::write(p, text + "\n"),
            None => {
                eprintln!("manifest: {text}");
                Ok(())
            }
        }
    }
}

/// Flattens serialized arguments to strings for the manifest.
pub fn parameters_of(args: &impl Serialize) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Ok(Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            if !v.is_null() {
                out.insert(k, csv_field(&v));
            }
        }
    }
    out
}
