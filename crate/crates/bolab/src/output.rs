//! CSV tables, the manifest and a gnuplot script for one run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, RunError};
use crate::manifest::RunManifest;

/// A numeric table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Shortest round-trip formatting, so equal values give equal bytes.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.into_inner().map_err(|e| RunError::Output(e.to_string()))
    }
}

/// gnuplot script plotting every column of every table against the first.
pub fn plot_script(tables: &[Table]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    for t in tables.iter().filter(|t| t.columns.len() > 1 && !t.rows.is_empty()) {
        let _ = writeln!(s, "\nset output '{}.png'", t.name);
        let _ = writeln!(s, "set xlabel '{}'", t.columns[0]);
        let _ = write!(s, "plot ");
        for i in 2..=t.columns.len() {
            let src = if i == 2 { format!("'{}'", t.file_name()) } else { "''".to_string() };
            let sep = if i == t.columns.len() { "\n" } else { ", \\\n     " };
            let _ = write!(s, "{src} using 1:{i} with linespoints{sep}");
        }
    }
    s
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Writes all tables, `manifest.json` and `plot.gp` into `dir`.
pub fn write_run(dir: &Path, tables: &[Table], manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    for t in tables {
        write(&dir.join(t.file_name()), &t.to_csv()?)?;
    }
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    write(&dir.join("manifest.json"), &json)?;
    write(&dir.join("plot.gp"), plot_script(tables).as_bytes())
}
