//! Run reports and CSV table I/O.
//!
//! Every command writes a `RunReport` as pretty-printed JSON (one record
//! per check — nothing is silently skipped) and prints a human-readable
//! summary to stdout. Time-indexed tables go to CSV with columns
//! `s, <stem>_<row>_<col>, ...` in row-major entry order, one line per
//! grid point; numbers round-trip exactly through the shortest-decimal
//! form.

use anyhow::{bail, Context, Result};
use lqgame::riccati::MatrixPath;
use lqgame::{Matrix, TimeGrid};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    /// Measured quantity, when the check is numeric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Bound the value was compared against (direction given in `note`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub note: String,
}

impl CheckRecord {
    pub fn new(
        name: &str,
        pass: bool,
        value: impl Into<Option<f64>>,
        threshold: impl Into<Option<f64>>,
        note: impl Into<String>,
    ) -> Self {
        CheckRecord {
            name: name.to_string(),
            pass,
            value: value.into(),
            threshold: threshold.into(),
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRecord {
    pub t0: f64,
    pub T: f64,
    pub n_steps: usize,
}

impl From<TimeGrid> for GridRecord {
    fn from(g: TimeGrid) -> Self {
        GridRecord {
            t0: g.t0,
            T: g.T,
            n_steps: g.n_steps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// `solve`, `verify`, or `example <id>`.
    pub command: String,
    /// Solve kind the artifacts belong to.
    pub kind: String,
    /// `sha256:<hex>` of the instance bytes the run consumed or produced.
    pub instance_digest: String,
    pub grid: GridRecord,
    /// Solver status verbatim: `feasible`, or the solver error display.
    pub status: String,
    pub checks: Vec<CheckRecord>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Writes `<dir>/<name>` as pretty JSON and appends it to `outputs`.
pub fn write_report(dir: &Path, name: &str, report: &mut RunReport) -> Result<()> {
    report.outputs.push(name.to_string());
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    fs::write(dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<RunReport> {
    let path = dir.join("report.json");
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Human-readable summary on stdout: header, one line per check, manifest.
pub fn print_human(report: &RunReport, dir: &Path) {
    println!("command: {} ({})", report.command, report.kind);
    println!("instance: {}", report.instance_digest);
    println!(
        "grid: t0 = {}, T = {}, n_steps = {}",
        report.grid.t0, report.grid.T, report.grid.n_steps
    );
    println!("status: {}", report.status);
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let nums = match (c.value, c.threshold) {
            (Some(v), Some(t)) => format!("  value {v:.6e}  bound {t:.1e}"),
            (Some(v), None) => format!("  value {v:.6e}"),
            _ => String::new(),
        };
        println!("  {verdict}  {}{nums}  — {}", c.name, c.note);
    }
    println!(
        "outputs: {} file(s) in {}",
        report.outputs.len(),
        dir.display()
    );
}

// ───────────────────────────── CSV tables ─────────────────────────────

/// Writes one time-indexed matrix table; returns the file name.
pub fn write_path_csv(dir: &Path, stem: &str, path: &MatrixPath) -> Result<String> {
    let name = format!("{stem}.csv");
    let grid = *path.grid();
    let (rows, cols) = path.value(0).shape();
    let mut w = csv::Writer::from_path(dir.join(&name))
        .with_context(|| format!("creating {name}"))?;
    let mut header = vec!["s".to_string()];
    for i in 1..=rows {
        for j in 1..=cols {
            header.push(format!("{stem}_{i}_{j}"));
        }
    }
    w.write_record(&header)?;
    for k in 0..=grid.n_steps {
        let mut record = vec![grid.time(k).to_string()];
        let M = path.value(k);
        for i in 0..rows {
            for j in 0..cols {
                record.push(M[(i, j)].to_string());
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(name)
}

/// Writes one scalar-per-grid-point table (e.g. the value-integral tail).
pub fn write_scalar_csv(dir: &Path, stem: &str, grid: TimeGrid, vals: &[f64]) -> Result<String> {
    let name = format!("{stem}.csv");
    let mut w = csv::Writer::from_path(dir.join(&name))
        .with_context(|| format!("creating {name}"))?;
    w.write_record([String::from("s"), stem.to_string()])?;
    for (k, v) in vals.iter().enumerate() {
        w.write_record([grid.time(k).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(name)
}

fn read_rows(dir: &Path, stem: &str, grid: TimeGrid, width: usize) -> Result<Vec<Vec<f64>>> {
    let path = dir.join(format!("{stem}.csv"));
    let mut r = csv::Reader::from_path(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    for (k, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{stem}.csv record {}", k + 1))?;
        if rec.len() != width + 1 {
            bail!(
                "{stem}.csv record {}: expected {} fields, got {}",
                k + 1,
                width + 1,
                rec.len()
            );
        }
        let mut vals = Vec::with_capacity(width + 1);
        for f in rec.iter() {
            vals.push(
                f.parse::<f64>()
                    .with_context(|| format!("{stem}.csv record {}: bad number {f:?}", k + 1))?,
            );
        }
        let s = vals[0];
        if (s - grid.time(k)).abs() > 1e-9 * (1.0 + grid.T.abs()) {
            bail!(
                "{stem}.csv record {}: time stamp {s} does not match grid point {}",
                k + 1,
                grid.time(k)
            );
        }
        out.push(vals);
    }
    if out.len() != grid.n_steps + 1 {
        bail!(
            "{stem}.csv: {} records, but the instance grid has {} points",
            out.len(),
            grid.n_steps + 1
        );
    }
    Ok(out)
}

/// Reads a table written by [`write_path_csv`], checking the grid stamps.
pub fn read_path_csv(
    dir: &Path,
    stem: &str,
    grid: TimeGrid,
    rows: usize,
    cols: usize,
) -> Result<MatrixPath> {
    let table = read_rows(dir, stem, grid, rows * cols)?;
    let values = table
        .into_iter()
        .map(|rec| Matrix::from_row_slice(rows, cols, &rec[1..]))
        .collect();
    Ok(MatrixPath::new(grid, values))
}

/// Reads a table written by [`write_scalar_csv`].
pub fn read_scalar_csv(dir: &Path, stem: &str, grid: TimeGrid) -> Result<Vec<f64>> {
    Ok(read_rows(dir, stem, grid, 1)?
        .into_iter()
        .map(|rec| rec[1])
        .collect())
}
