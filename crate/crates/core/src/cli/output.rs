//! Output documents: CSV tables and JSON with every float in shortest
//! round-trip scientific notation.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Column-major numeric table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Inverse of [`Table::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty table")?;
        let mut t = Table::new(header.split(',').map(|c| c.trim().to_string()));
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != t.columns.len() {
                return Err(format!("row {} has {} cells, expected {}", i + 1, row.len(), t.columns.len()));
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::from(r.clone())).collect();
        serde_json::json!({ "columns": self.columns, "rows": rows })
    }
}

/// Pretty JSON whose floats print as `{:e}`.
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct Document {
    pub command: String,
    pub summary: Value,
    pub data: Option<Table>,
}

impl Document {
    pub fn summary_json(&self) -> String {
        to_json_string(&serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "summary": self.summary,
        }))
    }

    pub fn full_json(&self) -> String {
        let mut v = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "summary": self.summary,
        });
        if let Some(t) = &self.data {
            v["data"] = t.to_json();
        }
        to_json_string(&v)
    }
}

/// Write `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Sibling path holding the JSON summary of a CSV output.
pub fn summary_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

/// Emit a document. JSON goes to one place; CSV data goes to the output and
/// its summary next to it (`<output>.summary.json`, or stderr without an
/// output path).
pub fn emit(doc: &Document, format: Format, output: Option<&Path>) -> io::Result<()> {
    match (format, &doc.data) {
        (Format::Json, _) | (Format::Csv, None) => {
            let text = doc.full_json();
            match output {
                Some(p) => write_atomic(p, &text),
                None => io::stdout().lock().write_all(text.as_bytes()),
            }
        }
        (Format::Csv, Some(t)) => {
            let csv = t.to_csv();
            match output {
                Some(p) => {
                    write_atomic(p, &csv)?;
                    write_atomic(&summary_path(p), &doc.summary_json())
                }
                None => {
                    io::stdout().lock().write_all(csv.as_bytes())?;
                    io::stderr().lock().write_all(doc.summary_json().as_bytes())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![0.1 + 0.2, -1.0 / 3.0]);
        t.push(vec![2.870e9, f64::MIN_POSITIVE]);
        t.push(vec![0.0, 1e300]);
        let back = Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_floats_are_scientific() {
        let s = to_json_string(&serde_json::json!({ "x": 2.87e9, "n": 3 }));
        assert!(s.contains("\"x\": 2.87e9"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(2.87e9));
    }
}
