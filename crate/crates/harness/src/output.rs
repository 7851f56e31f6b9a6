//! CSV tables and PGM dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gem_core::pgm::{render_intensity, write_pgm};

use crate::error::{HarnessError, Result};
use crate::scenario::{Row, ScenarioResult};

/// First line of every table; bump when columns change.
pub const SCHEMA_LINE: &str = "# schema: gemsim/1";

pub const RESULT_COLUMNS: [&str; 13] = [
    "scenario",
    "series",
    "storage_time_us",
    "total_efficiency",
    "overlap_efficiency",
    "sigma_x2_m2",
    "sigma_y2_m2",
    "sigma2_m2",
    "fit_sigma2_m2",
    "peak_ratio",
    "dark_fraction",
    "tau_fit_s",
    "image_norm",
];

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn row_fields(result: &ScenarioResult, label: &str, r: &Row) -> Vec<String> {
    let mut f = vec![
        result.scenario.to_string(),
        label.to_string(),
        r.storage_time_us.to_string(),
    ];
    f.extend(
        [
            r.total_efficiency,
            r.overlap_efficiency,
            r.sigma_x2,
            r.sigma_y2,
            r.sigma2,
            r.fit_sigma2,
            r.peak_ratio,
            r.dark_fraction,
            r.tau_fit,
            r.image_norm,
        ]
        .map(fmt_num),
    );
    f
}

/// Table for one result.
pub fn result_csv(result: &ScenarioResult) -> String {
    let mut s = format!("{SCHEMA_LINE}\n{}\n", RESULT_COLUMNS.join(","));
    for (series, row) in result.rows() {
        let _ = writeln!(s, "{}", row_fields(result, &series.label, row).join(","));
    }
    s
}

/// Merged table of a sweep, with the swept value as the leading column.
pub fn sweep_csv(param: &str, results: &[(String, ScenarioResult)]) -> String {
    let mut s = format!("{SCHEMA_LINE}\n{param},{}\n", RESULT_COLUMNS.join(","));
    for (value, result) in results {
        for (series, row) in result.rows() {
            let _ = writeln!(
                s,
                "{value},{}",
                row_fields(result, &series.label, row).join(",")
            );
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Render input and echo intensities of every series. Returns the written
/// paths. With `shared_scale`, every image uses the brightest input's scale.
pub fn write_images(
    result: &ScenarioResult,
    dir: &Path,
    shared_scale: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let shared = shared_scale.then(|| {
        result
            .series
            .iter()
            .map(|s| s.input.intensity().max())
            .fold(0.0, f64::max)
    });
    let mut written = Vec::new();
    let mut emit = |name: String, field: &gem_core::TransverseField| -> Result<()> {
        let (img, _) = render_intensity(&field.intensity(), shared);
        let path = dir.join(name);
        write_pgm(&path, &img).map_err(|e| match e {
            gem_core::Error::Io(io) => HarnessError::io(&path, io),
            other => HarnessError::Core(other),
        })?;
        written.push(path);
        Ok(())
    };
    for s in &result.series {
        let stem = format!("{}_{}", result.scenario, s.label);
        emit(format!("{stem}_input.pgm"), &s.input)?;
        for (row, out) in s.rows.iter().zip(&s.outputs) {
            emit(format!("{stem}_t{:03}us.pgm", row.storage_time_us), out)?;
        }
    }
    Ok(written)
}

/// Parsed numeric table; non-numeric cells become NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Read a comma-separated table with a header row; `#` lines are skipped.
pub fn read_table(text: &str) -> Result<Table> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| HarnessError::Config("table has no header row".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse().unwrap_or(f64::NAN))
            .collect();
        if row.len() != header.len() {
            return Err(HarnessError::Config(format!(
                "table row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
