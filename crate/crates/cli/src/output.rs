//! Data files and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

pub const fn column(name: &'static str, unit: &'static str, description: &'static str) -> Column {
    Column { name, unit, description }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// 17 significant digits, `name[unit]` headers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            columns: &'a [Column],
            rows: &'a [Vec<f64>],
        }
        let mut s = serde_json::to_string_pretty(&Doc { columns: &self.columns, rows: &self.rows }).unwrap();
        s.push('\n');
        s
    }
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    pub report: Option<serde_json::Value>,
    /// Scalars echoed in the manifest.
    pub summary: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<Column>>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    scenario: &'a str,
    code_version: &'static str,
    /// Not covered by any checksum.
    created_unix_s: u64,
    config: &'a BTreeMap<String, String>,
    files: Vec<FileEntry>,
    summary: &'a BTreeMap<String, serde_json::Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(dir: &Path, name: &str, body: &str) -> io::Result<(PathBuf, String)> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok((path, sha256_hex(body.as_bytes())))
}

/// Writes `<stem>.<ext>`, `<stem>_report.json` (if any) and
/// `<stem>_manifest.json` into `dir`. Returns the written paths.
pub fn write_output(
    dir: &Path,
    command: &str,
    stem: &str,
    format: Format,
    config: &BTreeMap<String, String>,
    output: &Output,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let body = match format {
        Format::Csv => output.table.to_csv(),
        Format::Json => output.table.to_json(),
    };
    let data_name = format!("{stem}.{}", format.extension());
    let (data_path, data_sum) = write_file(dir, &data_name, &body)?;
    let mut paths = vec![data_path];
    let mut files =
        vec![FileEntry { path: data_name, sha256: data_sum, columns: Some(output.table.columns.clone()) }];
    if let Some(report) = &output.report {
        let name = format!("{stem}_report.json");
        let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
        text.push('\n');
        let (path, sum) = write_file(dir, &name, &text)?;
        paths.push(path);
        files.push(FileEntry { path: name, sha256: sum, columns: None });
    }
    let created_unix_s =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        command,
        scenario: stem,
        code_version: env!("CARGO_PKG_VERSION"),
        created_unix_s,
        config,
        files,
        summary: &output.summary,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    text.push('\n');
    let (path, _) = write_file(dir, &format!("{stem}_manifest.json"), &text)?;
    paths.push(path);
    Ok(paths)
}
