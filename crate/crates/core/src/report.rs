//! Rendering of reports as text, JSON and CSV, and atomic output.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::verification::CheckReport;

pub const SCHEMA: &str = "v1";

/// JSON formatter printing every double with 17 significant digits.
#[derive(Debug, Default)]
struct ExactFloats(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", number(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
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

/// A double with 17 significant digits, round-trip exact.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(io::Error::other(e)))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// A table with named columns, for CSV output and JSON `rows`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| Error::Io(io::Error::other(e));
        w.write_record(&self.columns).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().cloned())
                            .collect::<Map<String, Value>>(),
                    )
                })
                .collect(),
        )
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => number(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Rows of a check report as a table: coordinates then margin.
pub fn check_table(report: &CheckReport) -> Table {
    let mut cols: Vec<&str> = report.coordinates.iter().map(String::as_str).collect();
    if report.rows.is_empty() {
        let mut t = Table::new(&["component", "margin", "pass"]);
        for c in &report.components {
            t.push(vec![c.name.clone().into(), c.min_margin.into(), c.pass.into()]);
        }
        return t;
    }
    cols.push("margin");
    let mut t = Table::new(&cols);
    for r in &report.rows {
        let mut row: Vec<Value> = r.coords.iter().map(|&x| Value::from(x)).collect();
        row.push(Value::from(r.margin));
        t.push(row);
    }
    t
}

/// The common JSON envelope.
pub struct Envelope<'a> {
    pub name: &'a str,
    pub config: Value,
    pub pass: bool,
    pub min_margin: Option<f64>,
    pub argmin: Value,
    pub elapsed_ms: Option<f64>,
    pub rows: Option<Value>,
    /// Extra top-level fields, inserted before `details`.
    pub extra: Map<String, Value>,
    pub details: Value,
}

impl Envelope<'_> {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), SCHEMA.into());
        m.insert("name".into(), self.name.into());
        m.insert("config".into(), self.config.clone());
        m.insert("pass".into(), self.pass.into());
        m.insert("min_margin".into(), self.min_margin.into());
        m.insert("argmin".into(), self.argmin.clone());
        if let Some(ms) = self.elapsed_ms {
            m.insert("elapsed_ms".into(), ms.into());
        }
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        m.insert("details".into(), self.details.clone());
        if let Some(rows) = &self.rows {
            m.insert("rows".into(), rows.clone());
        }
        Value::Object(m)
    }
}

/// Envelope for a check report; grid and components go under `details`.
pub fn check_envelope<'a>(
    report: &'a CheckReport,
    config: Value,
    with_rows: bool,
    timings: bool,
) -> Result<Envelope<'a>> {
    let mut details = Map::new();
    details.insert("tolerance".into(), report.tolerance.into());
    details.insert("grid".into(), serde_json::to_value(&report.grid).map_err(json_err)?);
    details.insert("components".into(), serde_json::to_value(&report.components).map_err(json_err)?);
    details.insert("values".into(), Value::Object(report.details.clone()));
    Ok(Envelope {
        name: &report.name,
        config,
        pass: report.pass,
        min_margin: Some(report.min_margin),
        argmin: serde_json::to_value(&report.argmin).map_err(json_err)?,
        elapsed_ms: timings.then_some(report.elapsed.as_secs_f64() * 1e3),
        rows: with_rows.then(|| check_table(report).to_json_rows()),
        extra: Map::new(),
        details: Value::Object(details),
    })
}

pub fn json_err(e: serde_json::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Human-readable rendering of a check report.
pub fn check_text(report: &CheckReport, timings: bool) -> String {
    let mut out = String::new();
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    out.push_str(&format!(
        "{}: {verdict}  min_margin = {:.6e}{}  (tolerance {:e})\n",
        report.name,
        report.min_margin,
        point_text(&report.argmin),
        report.tolerance
    ));
    for axis in &report.grid {
        out.push_str(&format!("  grid {}\n", axis.describe()));
    }
    for c in &report.components {
        let tag = match (c.expected_negative, c.pass) {
            (true, true) => "FAILS AS EXPECTED",
            (true, false) => "CONTROL HOLDS",
            (false, true) => "pass",
            (false, false) => "FAIL",
        };
        out.push_str(&format!(
            "  {:<44} {:>18}  {:.6e}{}\n",
            c.name,
            tag,
            c.min_margin,
            point_text(&c.argmin)
        ));
    }
    for (k, v) in &report.details {
        out.push_str(&format!("  {k} = {}\n", value_text(v)));
    }
    if timings {
        out.push_str(&format!("  elapsed {:.3} ms\n", report.elapsed.as_secs_f64() * 1e3));
    }
    out
}

fn point_text(p: &crate::verification::Point) -> String {
    if p.0.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = p.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(" at {}", parts.join(", "))
}

pub fn value_text(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

/// Write to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let mut out = io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                // A closed pipe (`| head`) is not an error.
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.flush()?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json(&json!({"x": 0.1, "n": 3, "y": f64::NAN})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn csv_cells() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5.into(), "x".into()]);
        t.push(vec![Value::Null, 2.into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5000000000000000e0,x\n,2\n");
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        emit("hello\n", Some(&p)).unwrap();
        emit("again\n", Some(&p)).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "again\n");
    }
}
