//! CSV tables with a `#` header block, and the JSON run manifest.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::Table;

use crate::config::{parse_text, ConfigErrors};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV body; values are already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<C: AsRef<str>>(columns: &[C]) -> Self {
        CsvTable {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn cell(x: impl Display) -> String {
    let s = x.to_string();
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Everything that ends up in the header block and the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub master_seed: u64,
    pub seed_rule: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    /// Effective configuration (with the seed filled in) as TOML.
    pub config: String,
    pub csv: String,
}

pub fn render_csv(manifest: &RunManifest, table: &CsvTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {} {}\n", manifest.tool, manifest.version));
    out.push_str(&format!("# subcommand: {}\n", manifest.subcommand));
    out.push_str(&format!("# master_seed: {}\n", manifest.master_seed));
    out.push_str(&format!("# seed_rule: {}\n", manifest.seed_rule));
    out.push_str(&format!("# wall_time_seconds: {}\n", manifest.wall_time_seconds));
    out.push_str("# config:\n");
    for line in manifest.config.lines() {
        out.push_str("#   ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&table.body());
    out
}

/// The CSV without its `#` header block.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Recover the configuration echoed in a CSV header.
pub fn header_config(text: &str) -> Result<Table, ConfigErrors> {
    let echoed: String = text
        .lines()
        .skip_while(|l| *l != "# config:")
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.strip_prefix("#   ").unwrap_or("")))
        .collect();
    parse_text(&echoed)
}

/// Write `<dir>/<subcommand>.csv` and `<dir>/<subcommand>.manifest.json`.
pub fn write_outputs(dir: &Path, manifest: &mut RunManifest, table: &CsvTable) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", manifest.subcommand));
    manifest.csv = csv_path.display().to_string();
    fs::write(&csv_path, render_csv(manifest, table))?;
    let json = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
    fs::write(dir.join(format!("{}.manifest.json", manifest.subcommand)), json + "\n")?;
    Ok(csv_path)
}
