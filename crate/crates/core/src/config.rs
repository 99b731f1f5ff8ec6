//! Run and study configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Geometry, GridSpec, NormWeighting, WaveField};
use crate::physics::{gaussian_packet, mesh_potential, PacketParams, PhysicsParams, PotentialSpec};
use crate::sine_transform::TransformKind;
use crate::stepper::Problem;

/// Mesh section: extents and node counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_len: f64,
    pub y_len: f64,
    pub t_end: f64,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.x_len, self.y_len, self.t_end, self.nx, self.ny, self.nt)
    }
}

/// Choice of the auxiliary `x`-only potential treated inside the implicit step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxPotentialKind {
    /// `Ṽ ≡ V_inf`; the whole potential goes into the phase factors.
    #[default]
    Asymptotic,
    /// `Ṽ(x) = V(x, y)` for a potential that does not depend on `y`.
    PotentialX,
}

/// Execution options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(default)]
    pub transform: TransformKind,
    /// Levels at which the field is written out.
    #[serde(default)]
    pub snapshots: Vec<usize>,
    /// Additionally snapshot every this many levels (0 disables).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Worker threads; 0 uses the hardware parallelism.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub norm: NormWeighting,
    #[serde(default)]
    pub aux_potential: AuxPotentialKind,
    /// Hölder bound `[L, alpha]` of a non-constant auxiliary potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_holder_bound: Option<[f64; 2]>,
    /// Measure the modulus change of every phase half-step.
    #[serde(default)]
    pub check_unitarity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_geometry() -> Geometry {
    Geometry::InfiniteStrip
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            geometry: default_geometry(),
            transform: TransformKind::default(),
            snapshots: Vec::new(),
            snapshot_every: 0,
            threads: 0,
            norm: NormWeighting::default(),
            aux_potential: AuxPotentialKind::default(),
            aux_holder_bound: None,
            check_unitarity: false,
            output_dir: None,
        }
    }
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsParams,
    pub packet: PacketParams,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub run: RunOptions,
}

const REQUIRED_KEYS: &[(&str, &[&str])] = &[
    ("grid", &["x_len", "y_len", "t_end", "nx", "ny", "nt"]),
    ("physics", &["hbar", "c_hbar"]),
    ("packet", &["wave_number", "alpha", "x0", "y0"]),
    ("potential", &["kind"]),
];

fn missing_keys(table: &toml::Table) -> Vec<String> {
    let mut missing = Vec::new();
    for (section, keys) in REQUIRED_KEYS {
        let sub = table.get(*section).and_then(|v| v.as_table());
        for key in *keys {
            if sub.is_none_or(|s| !s.contains_key(*key)) {
                missing.push(format!("{section}.{key}"));
            }
        }
    }
    missing
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
    let missing = missing_keys(&table);
    if !missing.is_empty() {
        return Err(Error::config(format!("missing required keys: {}", missing.join(", "))));
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string().trim().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads a run configuration from a file or `preset:<name>`.
pub fn load_config(source: &str) -> Result<RunConfig> {
    if let Some(name) = source.strip_prefix("preset:") {
        return crate::presets::run_preset(name);
    }
    let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    parse_config(&text)
}

/// Serializes a configuration; `parse_config(&emit(c)) == c`.
pub fn emit(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::internal(format!("cannot serialize configuration: {e}")))
}

impl RunConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        self.run.transform.check(&grid)?;
        self.physics.validate()?;
        self.packet.validate(&grid)?;
        self.potential.validate(&grid)?;
        if let Some(&bad) = self.run.snapshots.iter().find(|&&m| m > grid.nt()) {
            return Err(Error::config(format!("run.snapshots: level {bad} exceeds M = {}", grid.nt())));
        }
        if let Some([l, alpha]) = self.run.aux_holder_bound {
            if !(l >= 0.0 && alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::config("run.aux_holder_bound needs L >= 0 and 0 < alpha <= 1"));
            }
        }
        self.problem()?.validate()
    }

    /// Mesh potential, auxiliary potential and options assembled for the stepper.
    pub fn problem(&self) -> Result<Problem> {
        let grid = self.grid_spec()?;
        let potential = mesh_potential(&self.potential, &grid)?;
        let aux = match self.run.aux_potential {
            AuxPotentialKind::Asymptotic => vec![self.physics.v_inf; grid.nx() + 1],
            AuxPotentialKind::PotentialX => {
                let mut aux = Vec::with_capacity(grid.nx() + 1);
                for j in 0..=grid.nx() {
                    let v = potential.get(j, 1);
                    if (1..grid.ny()).any(|k| potential.get(j, k) != v) {
                        return Err(Error::config(format!(
                            "run.aux_potential = \"potential_x\" needs a potential independent of y; column {j} varies"
                        )));
                    }
                    aux.push(v);
                }
                aux
            }
        };
        let mut problem = Problem::new(grid, self.physics, self.run.geometry, self.run.transform, potential);
        problem.aux_potential = aux;
        problem.check_unitarity = self.run.check_unitarity;
        Ok(problem)
    }

    pub fn initial_field(&self) -> Result<WaveField> {
        let grid = self.grid_spec()?;
        Ok(gaussian_packet(&self.packet, &grid, self.run.geometry))
    }

    /// Levels to snapshot, sorted and deduplicated.
    pub fn snapshot_levels(&self) -> Vec<usize> {
        let m = self.grid.nt;
        let mut levels: Vec<usize> = self.run.snapshots.iter().copied().filter(|&l| l <= m).collect();
        if self.run.snapshot_every > 0 {
            levels.extend((0..=m).step_by(self.run.snapshot_every));
        }
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    /// Copy with other node counts and the same extents. The snapshot
    /// schedule is dropped since level numbers change meaning.
    pub fn with_counts(&self, nx: usize, ny: usize, nt: usize) -> RunConfig {
        let mut c = self.clone();
        c.run.snapshots.clear();
        c.run.snapshot_every = 0;
        c.grid.nx = nx;
        c.grid.ny = ny;
        c.grid.nt = nt;
        c
    }
}

/// Direction of a refinement sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
    T,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::X => "x",
            Direction::Y => "y",
            Direction::T => "t",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCounts {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyOptions {
    pub directions: Vec<Direction>,
    /// Coarsest refinement exponent: coarse meshes use `N / 2^l`, `l = 1..=levels`.
    pub levels: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: usize,
}

/// Refinement study: a base run configuration, the reference node counts and
/// the refined directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Path of a run configuration (relative to the study file) or `preset:<name>`.
    pub base: String,
    pub reference: ReferenceCounts,
    pub study: StudyOptions,
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<StudyConfig> {
        let study: StudyConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string().trim().to_string()))?;
        if study.study.directions.is_empty() {
            return Err(Error::config("study.directions must not be empty"));
        }
        if study.study.levels == 0 {
            return Err(Error::config("study.levels must be at least 1"));
        }
        Ok(study)
    }

    pub fn load(path: &Path) -> Result<StudyConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        StudyConfig::parse(&text)
    }

    /// Reference run configuration; `dir` resolves a relative `base` path.
    pub fn reference_config(&self, dir: Option<&Path>) -> Result<RunConfig> {
        let base = if self.base.starts_with("preset:") {
            load_config(&self.base)?
        } else {
            let path = match dir {
                Some(d) => d.join(&self.base),
                None => PathBuf::from(&self.base),
            };
            load_config(&path.to_string_lossy())?
        };
        let r = self.reference;
        let config = base.with_counts(r.nx, r.ny, r.nt);
        config.validate()?;
        Ok(config)
    }
}
