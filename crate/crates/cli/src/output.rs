use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use crate::config::Format;

/// A rectangular numeric table with named columns.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.clone(), json_number(*v)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// NaN and infinities become `null`.
pub fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Formats with round-trip precision.
fn csv_number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

pub fn open(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes named tables: CSV blocks each headed by `# {metadata}` or one
/// JSON document `{"meta": .., "<name>": [rows]}`.
pub fn write_tables(w: &mut dyn Write, format: Format, meta: &Value, tables: &[(&str, Table)]) -> io::Result<()> {
    match format {
        Format::Csv => {
            for (i, (name, t)) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                let mut m = meta.clone();
                m["table"] = Value::String(name.to_string());
                writeln!(w, "# {m}")?;
                writeln!(w, "{}", t.columns.join(","))?;
                for r in &t.rows {
                    let line: Vec<String> = r.iter().map(|v| csv_number(*v)).collect();
                    writeln!(w, "{}", line.join(","))?;
                }
            }
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("meta".into(), meta.clone());
            for (name, t) in tables {
                doc.insert(name.to_string(), t.to_json());
            }
            serde_json::to_writer_pretty(&mut *w, &Value::Object(doc))?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Writes a JSON report with the metadata attached under `meta`.
pub fn write_report(w: &mut dyn Write, meta: &Value, mut report: Value) -> io::Result<()> {
    report["meta"] = meta.clone();
    serde_json::to_writer_pretty(&mut *w, &report)?;
    writeln!(w)?;
    w.flush()
}
