use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::{Error, Result};

/// Version of the column layout written to CSV and manifest files.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Least-squares fit of `log y = slope log x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `None` when the fit is degenerate.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// Points that entered the fit.
    pub points: usize,
    /// Fewer than two usable points: all values zero, non-finite or at one abscissa.
    pub degenerate: bool,
}

/// Fits a line through `(log x, log y)`, skipping pairs that are not finite and positive.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> SlopeFit {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    let degenerate = SlopeFit { slope: None, intercept: None, r_squared: None, points: n, degenerate: true };
    if n < 2 {
        return degenerate;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return degenerate;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    SlopeFit {
        slope: Some(slope),
        intercept: Some(my - slope * mx),
        r_squared: Some(r_squared),
        points: n,
        degenerate: false,
    }
}

/// A flat array of `f64` written as raw little-endian bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub name: String,
    /// Row-major shape, e.g. `[components, n_points]`.
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub schema_version: u32,
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub snapshots: Vec<FieldSnapshot>,
    /// Config that produced the table, echoed into the manifest.
    pub config: Option<ExperimentConfig>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            snapshots: Vec::new(),
            config: None,
        }
    }

    /// Appends a row; rejects wrong arity and non-finite numbers.
    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Output(format!(
                "row has {} cells, table `{}` has {} columns",
                row.len(),
                self.name,
                self.columns.len()
            )));
        }
        if let Some(i) = row.iter().position(|c| matches!(c, Cell::Float(v) if !v.is_finite())) {
            return Err(Error::Output(format!("non-finite value in column `{}`", self.columns[i])));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a column, `None` where the cell is missing or not numeric.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column_index(name)?)
    }

    /// Rows whose `column` equals `value`.
    pub fn filter_rows(&self, column: &str, value: &Cell) -> Vec<usize> {
        let Some(i) = self.column_index(column) else { return Vec::new() };
        (0..self.rows.len()).filter(|&r| &self.rows[r][i] == value).collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| Error::Output(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(|e| Error::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Output(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub table: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub fits: BTreeMap<String, SlopeFit>,
    pub config_hash: Option<String>,
    /// The config as TOML, parseable by `parse_config_str`.
    pub config: Option<String>,
    pub code_version: String,
    pub platform: String,
    pub timestamp: String,
    pub files: Vec<String>,
}

/// Writes `<name>.csv`, `<name>.manifest.json` and one `.f64` file plus a `.txt`
/// sidecar per snapshot into `dir`. Returns the paths written.
pub fn emit_results(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let csv_path = dir.join(format!("{}.csv", table.name));
    fs::write(&csv_path, table.to_csv_string()?)?;
    files.push(csv_path);

    for snap in &table.snapshots {
        let expected: usize = snap.shape.iter().product();
        if expected != snap.data.len() {
            return Err(Error::Output(format!(
                "snapshot `{}` has {} values but shape {:?}",
                snap.name,
                snap.data.len(),
                snap.shape
            )));
        }
        let bin = dir.join(format!("{}.f64", snap.name));
        let bytes: Vec<u8> = snap.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&bin, bytes)?;
        let sidecar = dir.join(format!("{}.txt", snap.name));
        let shape: Vec<String> = snap.shape.iter().map(|s| s.to_string()).collect();
        fs::write(
            &sidecar,
            format!(
                "file: {}\ndtype: float64\nbyte_order: little\nshape: [{}]\norder: row-major\ndescription: {}\n",
                bin.file_name().unwrap().to_string_lossy(),
                shape.join(", "),
                snap.description
            ),
        )?;
        files.push(bin);
        files.push(sidecar);
    }

    let manifest_path = dir.join(format!("{}.manifest.json", table.name));
    let manifest = Manifest {
        schema_version: table.schema_version,
        table: table.name.clone(),
        columns: table.columns.clone(),
        rows: table.rows.len(),
        fits: table.fits.clone(),
        config_hash: table.config.as_ref().map(ExperimentConfig::hash),
        config: table.config.as_ref().map(ExperimentConfig::to_toml).transpose()?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        platform: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        files: files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Output(e.to_string()))?;
    fs::write(&manifest_path, json)?;
    files.push(manifest_path);
    Ok(files)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Output(format!("{}: {e}", path.display())))
}
