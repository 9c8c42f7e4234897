//! Report serialization: JSON with fixed-width floats and CSV tables.
//!
//! Floats are printed as `{:.16e}` (17 significant digits), which
//! round-trips every binary64 value through its decimal form; non-finite
//! values become JSON `null`, with a boolean flag alongside wherever an
//! infinity is meaningful. Nothing in a report depends on the clock, so
//! re-running a scenario on the same config reproduces the bytes exactly.

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Tool identity attached to every report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

/// One gated quantity; `ok` is `value <= gate` or `value >= gate` depending
/// on `comparison`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub gate: f64,
    pub comparison: &'static str,
    pub ok: bool,
}

impl Check {
    pub fn upper(name: &'static str, value: f64, gate: f64) -> Self {
        Self {
            name,
            value,
            gate,
            comparison: "<=",
            ok: value <= gate,
        }
    }

    pub fn lower(name: &'static str, value: f64, gate: f64) -> Self {
        Self {
            name,
            value,
            gate,
            comparison: ">=",
            ok: value >= gate,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub provenance: Provenance,
    pub result: T,
    pub checks: Vec<Check>,
    pub ok: bool,
}

/// Pretty printer whose float output is pinned to 17 significant digits.
struct SciPretty<'a> {
    inner: PrettyFormatter<'a>,
}

impl SciPretty<'_> {
    fn new() -> Self {
        Self {
            inner: PrettyFormatter::new(),
        }
    }
}

fn write_sci<W>(writer: &mut W, value: f64) -> io::Result<()>
where
    W: ?Sized + Write,
{
    if value.is_finite() {
        write!(writer, "{value:.16e}")
    } else {
        writer.write_all(b"null")
    }
}

impl Formatter for SciPretty<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write_sci(writer, value)
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write_sci(writer, f64::from(value))
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Serializes with the scientific float formatter and a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciPretty::new());
    value
        .serialize(&mut ser)
        .map_err(|e| format!("serializing report: {e}"))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Formats one numeric table cell; the same formatting the JSON floats use,
/// so the CSV re-parses to identical bits.
pub fn cell(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        String::from("nan")
    }
}

/// A named CSV table: a documented header row plus pre-formatted cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub struct Emitted {
    pub report_path: PathBuf,
    pub table_paths: Vec<PathBuf>,
}

/// Writes the JSON report and, when asked, the CSV tables.
pub fn write_outputs<T: Serialize>(
    out_dir: &Path,
    slug: &str,
    report: &Report<T>,
    tables: &[Table],
    emit_tables: bool,
) -> Result<Emitted, String> {
    fs::create_dir_all(out_dir)
        .map_err(|e| format!("creating output directory {}: {e}", out_dir.display()))?;
    let report_path = out_dir.join(format!("{slug}_report.json"));
    let bytes = to_json_bytes(report)?;
    fs::write(&report_path, bytes)
        .map_err(|e| format!("writing {}: {e}", report_path.display()))?;
    let mut table_paths = Vec::new();
    if emit_tables {
        for table in tables {
            let path = out_dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv())
                .map_err(|e| format!("writing {}: {e}", path.display()))?;
            table_paths.push(path);
        }
    }
    Ok(Emitted {
        report_path,
        table_paths,
    })
}

/// The standard checks table every scenario can emit.
pub fn checks_table(checks: &[Check]) -> Table {
    Table {
        name: "checks",
        header: vec!["name", "value", "gate", "comparison", "ok"],
        rows: checks
            .iter()
            .map(|c| {
                vec![
                    c.name.to_string(),
                    cell(c.value),
                    cell(c.gate),
                    c.comparison.to_string(),
                    c.ok.to_string(),
                ]
            })
            .collect(),
    }
}
