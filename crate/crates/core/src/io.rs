//! Output files: snapshots, norm series, run summaries, kernel dumps and
//! comparison tables. Floats are written with 17 significant digits so every
//! value reads back bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{emit, RunConfig};
use crate::diagnostics::{DifferenceSeries, NormSample, RunReport};
use crate::error::{Error, Result};
use crate::mesh::{GridSpec, WaveField};

pub const SNAPSHOT_MAGIC: &str = "# schrodinger-snapshot v1";
pub const NORMS_HEADER: &str = "m,t,l2_norm,c_norm";
pub const SNAPSHOT_HEADER: &str = "j,k,x,y,re,im";
pub const COMPARE_HEADER: &str = "coarse_m,reference_m,t,abs_c,abs_l2,rel_c,rel_l2";
pub const KERNEL_HEADER: &str = "m,re,im";

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SOLVE_OUTPUT_DIR";

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn snapshot_file_name(level: usize) -> String {
    format!("snapshot_{level:06}.csv")
}

/// Snapshot text: magic line, grid line, level line, CSV header and one row
/// per node.
pub fn snapshot_to_string(field: &WaveField, level: usize) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.node_count() * 140);
    out.push_str(SNAPSHOT_MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "# grid x_len={} y_len={} t_end={} nx={} ny={} nt={}",
        f(g.x_len()),
        f(g.y_len()),
        f(g.t_end()),
        g.nx(),
        g.ny(),
        g.nt()
    );
    let _ = writeln!(out, "# level m={} t={}", level, f(g.t(level)));
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for j in 0..=g.nx() {
        let x = f(g.x(j));
        for k in 0..=g.ny() {
            let v = field.get(j, k);
            let _ = writeln!(out, "{j},{k},{x},{},{},{}", f(g.y(k)), f(v.re), f(v.im));
        }
    }
    out
}

pub fn write_snapshot(path: &Path, field: &WaveField, level: usize) -> Result<()> {
    write_file(path, &snapshot_to_string(field, level))
}

fn header_fields<'a>(line: &'a str, prefix: &str) -> Option<BTreeMap<&'a str, &'a str>> {
    let rest = line.strip_prefix(prefix)?;
    Some(rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect())
}

fn parse_num<T: std::str::FromStr>(path: &Path, map: &BTreeMap<&str, &str>, key: &str) -> Result<T> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(path, format!("header field '{key}' missing or malformed")))
}

/// Reads a snapshot written by [`write_snapshot`]; returns the level and field.
pub fn read_snapshot(path: &Path) -> Result<(usize, WaveField)> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(format_err(path, "not a snapshot file (bad first line)"));
    }
    let grid_line = lines.next().unwrap_or_default();
    let gm = header_fields(grid_line, "# grid ").ok_or_else(|| format_err(path, "missing grid line"))?;
    let grid = GridSpec::new(
        parse_num(path, &gm, "x_len")?,
        parse_num(path, &gm, "y_len")?,
        parse_num(path, &gm, "t_end")?,
        parse_num(path, &gm, "nx")?,
        parse_num(path, &gm, "ny")?,
        parse_num(path, &gm, "nt")?,
    )
    .map_err(|e| format_err(path, e.to_string()))?;
    let level_line = lines.next().unwrap_or_default();
    let lm = header_fields(level_line, "# level ").ok_or_else(|| format_err(path, "missing level line"))?;
    let level: usize = parse_num(path, &lm, "m")?;
    if lines.next() != Some(SNAPSHOT_HEADER) {
        return Err(format_err(path, "missing column header"));
    }
    let mut field = WaveField::zeros(grid);
    let mut count = 0usize;
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || format_err(path, format!("malformed data row {}", i + 1));
        if cols.len() != 6 {
            return Err(bad());
        }
        let j: usize = cols[0].parse().map_err(|_| bad())?;
        let k: usize = cols[1].parse().map_err(|_| bad())?;
        let re: f64 = cols[4].parse().map_err(|_| bad())?;
        let im: f64 = cols[5].parse().map_err(|_| bad())?;
        if j > grid.nx() || k > grid.ny() {
            return Err(bad());
        }
        field.values_mut()[grid.index(j, k)] = Complex64::new(re, im);
        count += 1;
    }
    if count != grid.node_count() {
        return Err(format_err(path, format!("{count} data rows, expected {}", grid.node_count())));
    }
    Ok((level, field))
}

pub fn norms_to_csv(norms: &[NormSample]) -> String {
    let mut out = String::from(NORMS_HEADER);
    out.push('\n');
    for n in norms {
        let _ = writeln!(out, "{},{},{},{}", n.level, f(n.time), f(n.l2), f(n.c));
    }
    out
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    format: &'static str,
    grid: GridSummary,
    geometry: crate::mesh::Geometry,
    transform: crate::sine_transform::TransformKind,
    levels: usize,
    initial_l2: f64,
    final_l2: f64,
    max_l2: f64,
    final_c: f64,
    max_phase_deviation: Option<f64>,
    snapshots: Vec<usize>,
    files: &'a [String],
}

#[derive(Serialize)]
struct GridSummary {
    x_len: f64,
    y_len: f64,
    t_end: f64,
    nx: usize,
    ny: usize,
    nt: usize,
    hx: f64,
    hy: f64,
    tau: f64,
}

/// Machine-readable run summary. Timings are left out so repeated runs give
/// identical files.
pub fn report_json(report: &RunReport, files: &[String]) -> Result<String> {
    let g = report.final_field.grid();
    let last = report.norms.last().ok_or_else(|| Error::internal("empty norm series"))?;
    let summary = ReportSummary {
        format: "schrodinger-report v1",
        grid: GridSummary {
            x_len: g.x_len(),
            y_len: g.y_len(),
            t_end: g.t_end(),
            nx: g.nx(),
            ny: g.ny(),
            nt: g.nt(),
            hx: g.hx(),
            hy: g.hy(),
            tau: g.tau(),
        },
        geometry: report.config.run.geometry,
        transform: report.config.run.transform,
        levels: report.norms.len(),
        initial_l2: report.norms[0].l2,
        final_l2: last.l2,
        max_l2: report.max_l2(),
        final_c: last.c,
        max_phase_deviation: report.max_phase_deviation,
        snapshots: report.snapshots.keys().copied().collect(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| Error::internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes `config.toml`, `norms.csv`, the snapshots and `report.json` into
/// `dir`; returns the paths written.
pub fn write_run(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = vec!["config.toml".to_string(), "norms.csv".to_string()];
    write_file(&dir.join("config.toml"), &emit(&report.config)?)?;
    write_file(&dir.join("norms.csv"), &norms_to_csv(&report.norms))?;
    for (&m, field) in &report.snapshots {
        let name = snapshot_file_name(m);
        write_snapshot(&dir.join(&name), field, m)?;
        names.push(name);
    }
    names.push("report.json".to_string());
    write_file(&dir.join("report.json"), &report_json(report, &names)?)?;
    Ok(names.iter().map(|n| dir.join(n)).collect())
}

/// Reads all `snapshot_*.csv` files in a run directory.
pub fn read_run_snapshots(dir: &Path) -> Result<BTreeMap<usize, WaveField>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for p in paths {
        let (m, field) = read_snapshot(&p)?;
        out.insert(m, field);
    }
    if out.is_empty() {
        return Err(format_err(dir, "no snapshot files found"));
    }
    Ok(out)
}

/// Reads `config.toml` of a run directory.
pub fn read_run_config(dir: &Path) -> Result<RunConfig> {
    let path = dir.join("config.toml");
    crate::config::parse_config(&read_file(&path)?)
}

pub fn difference_to_csv(series: &DifferenceSeries) -> String {
    let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.coarse_level,
            r.reference_level,
            f(r.time),
            f(r.diff.abs_c),
            f(r.diff.abs_l2),
            opt(r.diff.rel_c()),
            opt(r.diff.rel_l2())
        );
    }
    out
}

pub fn kernel_to_csv(values: &[Complex64]) -> String {
    let mut out = String::from(KERNEL_HEADER);
    out.push('\n');
    for (m, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{m},{},{}", f(v.re), f(v.im));
    }
    out
}

pub fn kernel_file_name(q: usize) -> String {
    format!("kernel_q{q:04}.csv")
}

/// Output directory: explicit choice, else the environment variable, else
/// `fallback`.
pub fn resolve_output_dir(explicit: Option<&Path>, fallback: &Path) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}
