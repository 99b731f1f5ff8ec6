//! Norm series, comparison of runs on nested meshes and the refinement-ratio
//! convergence study.
//!
//! For a reference mesh `(J, K, M)` and a coarsening `2^l` in one direction,
//! `rho_l` is the largest difference over all common time levels between the
//! coarse solution and the reference restricted to the coarse nodes. The ratio
//! `R_l = rho_{l+1} / rho_l` approaches `r(a, l) = (2^{(l+1)a} - 1) / (2^{la} - 1)`
//! for a method of order `a` in that direction.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Direction, RunConfig};
use crate::error::{Error, Result};
use crate::mesh::{GridSpec, NormWeighting, WaveField};
use crate::stepper::{PhaseTimings, SimulationState};

/// Reference norms below this make relative differences meaningless.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Norms of the solution at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub level: usize,
    pub time: f64,
    pub l2: f64,
    pub c: f64,
}

impl NormSample {
    pub fn of(field: &WaveField, level: usize, weighting: NormWeighting) -> Self {
        NormSample {
            level,
            time: field.grid().t(level),
            l2: field.norm_l2(weighting),
            c: field.norm_c(),
        }
    }
}

/// Wall-clock seconds of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub setup: f64,
    pub steps: PhaseTimings,
    pub total: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: RunConfig,
    /// One entry per level `0..=M`.
    pub norms: Vec<NormSample>,
    pub snapshots: BTreeMap<usize, WaveField>,
    pub final_field: WaveField,
    pub timings: RunTimings,
    /// Largest relative modulus change of a phase half-step, when tracked.
    pub max_phase_deviation: Option<f64>,
}

impl RunReport {
    pub fn initial_norm(&self) -> &NormSample {
        &self.norms[0]
    }

    /// `max_m ||Ψ^m||_{L2}`.
    pub fn max_l2(&self) -> f64 {
        self.norms.iter().map(|n| n.l2).fold(0.0, f64::max)
    }
}

/// Absolute differences and reference norms at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDifference {
    pub abs_c: f64,
    pub abs_l2: f64,
    pub ref_c: f64,
    pub ref_l2: f64,
}

impl FieldDifference {
    pub fn rel_c(&self) -> Option<f64> {
        (self.ref_c >= RELATIVE_FLOOR).then(|| self.abs_c / self.ref_c)
    }

    pub fn rel_l2(&self) -> Option<f64> {
        (self.ref_l2 >= RELATIVE_FLOOR).then(|| self.abs_l2 / self.ref_l2)
    }
}

fn power_of_two_ratio(fine: usize, coarse: usize, what: &str) -> Result<usize> {
    if coarse == 0 || !fine.is_multiple_of(coarse) || !(fine / coarse).is_power_of_two() {
        return Err(Error::config(format!(
            "meshes are not nested in {what}: {fine} is not a power-of-two multiple of {coarse}"
        )));
    }
    Ok(fine / coarse)
}

/// Refinement factors `(fx, fy, ft)` of `fine` over `coarse`.
pub fn nesting_factors(fine: &GridSpec, coarse: &GridSpec) -> Result<(usize, usize, usize)> {
    if fine.x_len() != coarse.x_len() || fine.y_len() != coarse.y_len() || fine.t_end() != coarse.t_end() {
        return Err(Error::config("compared runs must share X, Y and T"));
    }
    Ok((
        power_of_two_ratio(fine.nx(), coarse.nx(), "x")?,
        power_of_two_ratio(fine.ny(), coarse.ny(), "y")?,
        power_of_two_ratio(fine.nt(), coarse.nt(), "t")?,
    ))
}

/// Difference between `coarse` and `reference` restricted to the coarse nodes.
/// The L2 norm uses the coarse mesh steps.
pub fn field_difference(reference: &WaveField, coarse: &WaveField, weighting: NormWeighting) -> Result<FieldDifference> {
    let (r, c) = (reference.grid(), coarse.grid());
    if r.x_len() != c.x_len() || r.y_len() != c.y_len() {
        return Err(Error::config("compared fields must share X and Y"));
    }
    let fx = power_of_two_ratio(r.nx(), c.nx(), "x")?;
    let fy = power_of_two_ratio(r.ny(), c.ny(), "y")?;
    let restricted = reference.restrict(fx, fy)?;
    let diff: Vec<_> = restricted.values().iter().zip(coarse.values()).map(|(a, b)| a - b).collect();
    let diff = WaveField::from_values(*c, diff)?;
    Ok(FieldDifference {
        abs_c: diff.norm_c(),
        abs_l2: diff.norm_l2(weighting),
        ref_c: restricted.norm_c(),
        ref_l2: restricted.norm_l2(weighting),
    })
}

/// Difference at one common time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelDifference {
    pub coarse_level: usize,
    pub reference_level: usize,
    pub time: f64,
    pub diff: FieldDifference,
}

/// Differences over all common time levels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSeries {
    pub rows: Vec<LevelDifference>,
}

impl DifferenceSeries {
    pub fn max_abs_c(&self) -> f64 {
        self.rows.iter().map(|r| r.diff.abs_c).fold(0.0, f64::max)
    }

    pub fn max_abs_l2(&self) -> f64 {
        self.rows.iter().map(|r| r.diff.abs_l2).fold(0.0, f64::max)
    }

    pub fn max_rel_c(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.diff.rel_c()).reduce(f64::max)
    }

    pub fn max_rel_l2(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.diff.rel_l2()).reduce(f64::max)
    }
}

/// Compares snapshot sets of two runs at their common time levels; coarse
/// level `m` meets reference level `m * ft`.
pub fn compare_snapshots(
    reference: &BTreeMap<usize, WaveField>,
    coarse: &BTreeMap<usize, WaveField>,
    weighting: NormWeighting,
) -> Result<DifferenceSeries> {
    let (rf, cf) = match (reference.values().next(), coarse.values().next()) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::config("both runs need at least one snapshot")),
    };
    let (_, _, ft) = nesting_factors(rf.grid(), cf.grid())?;
    let mut rows = Vec::new();
    for (&m, field) in coarse {
        if let Some(rfield) = reference.get(&(m * ft)) {
            rows.push(LevelDifference {
                coarse_level: m,
                reference_level: m * ft,
                time: field.grid().t(m),
                diff: field_difference(rfield, field, weighting)?,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::config("the runs have no snapshot at a common time level"));
    }
    Ok(DifferenceSeries { rows })
}

/// Differences between two runs on nested meshes at their common snapshots.
pub fn difference_norms(reference: &RunReport, coarse: &RunReport) -> Result<DifferenceSeries> {
    compare_snapshots(&reference.snapshots, &coarse.snapshots, coarse.config.run.norm)
}

/// `r(order, l) = (2^{(l+1) order} - 1) / (2^{l order} - 1)`.
pub fn reference_ratio(order: f64, l: u32) -> f64 {
    let a = 2f64.powf(f64::from(l + 1) * order) - 1.0;
    let b = 2f64.powf(f64::from(l) * order) - 1.0;
    a / b
}

/// Integer order in `1..=6` whose reference ratio at `l` is closest to `ratio`.
pub fn nearest_order(ratio: f64, l: u32) -> u32 {
    (1..=6)
        .min_by(|&a, &b| {
            let da = (reference_ratio(f64::from(a), l) - ratio).abs();
            let db = (reference_ratio(f64::from(b), l) - ratio).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(1)
}

/// One coarse mesh of a refinement sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub level: u32,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub e_c: f64,
    pub e_l2: f64,
    /// `rho_{l+1} / rho_l`; absent on the coarsest row.
    pub r_c: Option<f64>,
    pub r_l2: Option<f64>,
}

/// Refinement ratios along one direction, coarsest mesh first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub direction: Direction,
    pub reference: (usize, usize, usize),
    pub rows: Vec<RatioRow>,
}

fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_float).unwrap_or_default()
}

impl RatioTable {
    /// Orders rows coarsest first and fills in the ratios from their `rho`.
    pub fn from_rows(direction: Direction, reference: (usize, usize, usize), mut rows: Vec<RatioRow>) -> Self {
        rows.sort_by_key(|r| std::cmp::Reverse(r.level));
        for i in 1..rows.len() {
            let (coarser, this) = (rows[i - 1], rows[i]);
            rows[i].r_c = Some(coarser.e_c / this.e_c);
            rows[i].r_l2 = Some(coarser.e_l2 / this.e_l2);
        }
        RatioTable {
            direction,
            reference,
            rows,
        }
    }

    pub const CSV_HEADER: &'static str = "direction,l,J,K,M,E_C,E_L2,R_C,R_L2";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.direction,
                r.level,
                r.nx,
                r.ny,
                r.nt,
                csv_float(r.e_c),
                csv_float(r.e_l2),
                csv_opt(r.r_c),
                csv_opt(r.r_l2)
            ));
        }
        out
    }

    /// Human-readable table with the nearest-order annotation.
    pub fn render(&self) -> String {
        let (jr, kr, mr) = self.reference;
        let mut out = format!(
            "direction {}  reference (J,K,M) = ({jr},{kr},{mr})\n{:>3} {:>6} {:>5} {:>6} {:>11} {:>11} {:>7} {:>7} {:>6}\n",
            self.direction, "l", "J", "K", "M", "E_C", "E_L2", "R_C", "R_L2", "order"
        );
        for r in &self.rows {
            let ratio = |v: Option<f64>| v.map(|x| format!("{x:7.2}")).unwrap_or_else(|| format!("{:>7}", "-"));
            let order = r
                .r_c
                .map(|x| format!("{:>6}", nearest_order(x, r.level)))
                .unwrap_or_else(|| format!("{:>6}", "-"));
            out.push_str(&format!(
                "{:>3} {:>6} {:>5} {:>6} {:>11.3e} {:>11.3e} {} {} {}\n",
                r.level,
                r.nx,
                r.ny,
                r.nt,
                r.e_c,
                r.e_l2,
                ratio(r.r_c),
                ratio(r.r_l2),
                order
            ));
        }
        out
    }
}

/// Difference series of one coarse run against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseSeries {
    pub direction: Direction,
    pub level: u32,
    pub counts: (usize, usize, usize),
    pub series: DifferenceSeries,
}

/// Result of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub reference: (usize, usize, usize),
    pub runs: Vec<CoarseSeries>,
    pub tables: Vec<RatioTable>,
}

#[derive(Serialize, Deserialize)]
struct StudyCache {
    key: String,
    reference: (usize, usize, usize),
    runs: Vec<CoarseSeries>,
}

fn coarse_counts(reference: (usize, usize, usize), direction: Direction, level: u32) -> Result<(usize, usize, usize)> {
    let f = 1usize << level;
    let (nx, ny, nt) = reference;
    let n = match direction {
        Direction::X => nx,
        Direction::Y => ny,
        Direction::T => nt,
    };
    if n % f != 0 {
        return Err(Error::config(format!(
            "reference count {n} in {direction} is not divisible by 2^{level}"
        )));
    }
    Ok(match direction {
        Direction::X => (nx / f, ny, nt),
        Direction::Y => (nx, ny / f, nt),
        Direction::T => (nx, ny, nt / f),
    })
}

fn tables_from_runs(reference: (usize, usize, usize), directions: &[Direction], runs: &[CoarseSeries]) -> Vec<RatioTable> {
    directions
        .iter()
        .map(|&d| {
            let rows = runs
                .iter()
                .filter(|r| r.direction == d)
                .map(|r| RatioRow {
                    level: r.level,
                    nx: r.counts.0,
                    ny: r.counts.1,
                    nt: r.counts.2,
                    e_c: r.series.max_abs_c(),
                    e_l2: r.series.max_abs_l2(),
                    r_c: None,
                    r_l2: None,
                })
                .collect();
            RatioTable::from_rows(d, reference, rows)
        })
        .collect()
}

fn cache_key(reference: &RunConfig, directions: &[Direction], levels: u32) -> Result<String> {
    let text = serde_json::to_string(&(reference, directions, levels, env!("CARGO_PKG_VERSION")))
        .map_err(|e| Error::internal(e.to_string()))?;
    Ok(text)
}

/// Runs the reference and every coarse configuration side by side, comparing
/// at each common time level, so no solution history is stored.
///
/// With `cache` set, a previous result for the same configuration is loaded
/// instead of recomputed, and a fresh result is written there. The tables are
/// always rebuilt from the stored difference series, so cached and fresh
/// tables are bit-identical.
pub fn refinement_study(
    reference: &RunConfig,
    directions: &[Direction],
    levels: u32,
    cache: Option<&Path>,
) -> Result<StudyResult> {
    let ref_counts = (reference.grid.nx, reference.grid.ny, reference.grid.nt);
    let key = cache_key(reference, directions, levels)?;

    if let Some(path) = cache {
        if let Ok(text) = std::fs::read_to_string(path) {
            match serde_json::from_str::<StudyCache>(&text) {
                Ok(c) if c.key == key => {
                    log::info!("loaded refinement study from {}", path.display());
                    let tables = tables_from_runs(c.reference, directions, &c.runs);
                    return Ok(StudyResult {
                        reference: c.reference,
                        runs: c.runs,
                        tables,
                    });
                }
                _ => log::info!("cache {} does not match this study; recomputing", path.display()),
            }
        }
    }

    let weighting = reference.run.norm;
    let mut fine = SimulationState::new(reference.problem()?, reference.initial_field()?)?;
    struct Coarse {
        direction: Direction,
        level: u32,
        counts: (usize, usize, usize),
        time_factor: usize,
        state: SimulationState,
        series: DifferenceSeries,
    }
    let mut coarse = Vec::new();
    for &direction in directions {
        for level in 1..=levels {
            let counts = coarse_counts(ref_counts, direction, level)?;
            let config = reference.with_counts(counts.0, counts.1, counts.2);
            config.validate()?;
            let state = SimulationState::new(config.problem()?, config.initial_field()?)?;
            let time_factor = ref_counts.2 / counts.2;
            let mut series = DifferenceSeries::default();
            series.rows.push(LevelDifference {
                coarse_level: 0,
                reference_level: 0,
                time: 0.0,
                diff: field_difference(fine.psi(), state.psi(), weighting)?,
            });
            coarse.push(Coarse {
                direction,
                level,
                counts,
                time_factor,
                state,
                series,
            });
        }
    }

    for m in 1..=ref_counts.2 {
        fine.step()?;
        for c in coarse.iter_mut() {
            if m % c.time_factor == 0 {
                c.state.step()?;
                c.series.rows.push(LevelDifference {
                    coarse_level: c.state.level(),
                    reference_level: m,
                    time: fine.time(),
                    diff: field_difference(fine.psi(), c.state.psi(), weighting)?,
                });
            }
        }
        if m % 100 == 0 {
            log::info!("refinement study: level {m}/{}", ref_counts.2);
        }
    }

    let runs: Vec<CoarseSeries> = coarse
        .into_iter()
        .map(|c| CoarseSeries {
            direction: c.direction,
            level: c.level,
            counts: c.counts,
            series: c.series,
        })
        .collect();

    if let Some(path) = cache {
        let payload = StudyCache {
            key,
            reference: ref_counts,
            runs: runs.clone(),
        };
        let text = serde_json::to_string(&payload).map_err(|e| Error::internal(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    let tables = tables_from_runs(ref_counts, directions, &runs);
    Ok(StudyResult {
        reference: ref_counts,
        runs,
        tables,
    })
}
