//! Physical constants, the Gaussian initial packet and barrier potentials.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Geometry, GridSpec, WaveField};

/// `hbar`, `c_hbar = hbar^2 / (2 m0)` and the asymptotic potential value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub hbar: f64,
    pub c_hbar: f64,
    #[serde(default)]
    pub v_inf: f64,
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::config(format!("physics.hbar must be positive, got {}", self.hbar)));
        }
        if !(self.c_hbar > 0.0 && self.c_hbar.is_finite()) {
            return Err(Error::config(format!("physics.c_hbar must be positive, got {}", self.c_hbar)));
        }
        if !self.v_inf.is_finite() {
            return Err(Error::config("physics.v_inf must be finite"));
        }
        Ok(())
    }
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            hbar: 1.0,
            c_hbar: 1.0,
            v_inf: 0.0,
        }
    }
}

/// Gaussian packet `exp{ i k (x - x0) - ((x - x0)^2 + (y - y0)^2) / (4 alpha) }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketParams {
    pub wave_number: f64,
    pub alpha: f64,
    pub x0: f64,
    pub y0: f64,
}

impl PacketParams {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("packet.alpha must be positive, got {}", self.alpha)));
        }
        if !(self.x0 > 0.0 && self.x0 < grid.x_len() && self.y0 > 0.0 && self.y0 < grid.y_len()) {
            return Err(Error::config(format!(
                "packet center ({}, {}) lies outside the computational rectangle",
                self.x0, self.y0
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let dx = x - self.x0;
        let dy = y - self.y0;
        let amp = -(dx * dx + dy * dy) / (4.0 * self.alpha);
        Complex64::new(amp, self.wave_number * dx).exp()
    }
}

/// Samples the packet on the grid with the Dirichlet nodes of `geometry`
/// zeroed.
pub fn gaussian_packet(packet: &PacketParams, grid: &GridSpec, geometry: Geometry) -> WaveField {
    let mut field = WaveField::from_fn(*grid, |x, y| packet.value(x, y));
    field.enforce_boundary(geometry);
    field
}

/// Real potential `V(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `alpha0^2 c1 / cosh^2(alpha0 (x - x_star))`.
    PoschlTeller { alpha0: f64, c1: f64, x_star: f64 },
    /// Height `height` on the open rectangle `(x_min, x_max) x (y_min, y_max)`.
    Rectangular {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        height: f64,
        /// Use the edge-averaged mesh potential instead of pointwise values.
        #[serde(default = "default_true")]
        averaged: bool,
    },
    Zero,
    #[serde(skip)]
    Tabulated(MeshPotential),
}

fn default_true() -> bool {
    true
}

impl PotentialSpec {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match self {
            PotentialSpec::PoschlTeller { alpha0, c1, x_star } => {
                if ![*alpha0, *c1, *x_star].iter().all(|v| v.is_finite()) {
                    return Err(Error::config("potential parameters must be finite"));
                }
            }
            PotentialSpec::Rectangular {
                x_min,
                x_max,
                y_min,
                y_max,
                height,
                averaged,
            } => {
                if !(0.0 <= *x_min && x_min < x_max && *x_max <= grid.x_len())
                    || !(0.0 <= *y_min && y_min < y_max && *y_max <= grid.y_len())
                {
                    return Err(Error::config(format!(
                        "barrier ({x_min},{x_max})x({y_min},{y_max}) must lie inside [0,{}]x[0,{}]",
                        grid.x_len(),
                        grid.y_len()
                    )));
                }
                if !height.is_finite() {
                    return Err(Error::config("potential.height must be finite"));
                }
                if *averaged {
                    BarrierNodes::locate(self, grid)?;
                }
            }
            PotentialSpec::Zero => {}
            PotentialSpec::Tabulated(mesh) => {
                if mesh.grid.nx() != grid.nx() || mesh.grid.ny() != grid.ny() {
                    return Err(Error::config("tabulated potential does not match the grid"));
                }
            }
        }
        Ok(())
    }
}

/// Pointwise potential value at `(x, y)`. A tabulated potential returns the
/// value at the nearest node.
pub fn eval_potential(spec: &PotentialSpec, x: f64, y: f64) -> f64 {
    match spec {
        PotentialSpec::PoschlTeller { alpha0, c1, x_star } => {
            let ch = (alpha0 * (x - x_star)).cosh();
            alpha0 * alpha0 * c1 / (ch * ch)
        }
        PotentialSpec::Rectangular {
            x_min,
            x_max,
            y_min,
            y_max,
            height,
            ..
        } => {
            if *x_min < x && x < *x_max && *y_min < y && y < *y_max {
                *height
            } else {
                0.0
            }
        }
        PotentialSpec::Zero => 0.0,
        PotentialSpec::Tabulated(mesh) => {
            let g = &mesh.grid;
            let j = (x / g.hx()).round().clamp(0.0, g.nx() as f64) as usize;
            let k = (y / g.hy()).round().clamp(0.0, g.ny() as f64) as usize;
            mesh.get(j, k)
        }
    }
}

/// Real potential tabulated on the node lattice (same layout as
/// [`WaveField`]).
#[derive(Debug, Clone, PartialEq)]
pub struct MeshPotential {
    grid: GridSpec,
    values: Vec<f64>,
}

impl MeshPotential {
    pub fn zeros(grid: GridSpec) -> Self {
        MeshPotential {
            values: vec![0.0; grid.node_count()],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..=grid.nx() {
            for k in 0..=grid.ny() {
                values.push(f(j, k));
            }
        }
        MeshPotential { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

// Mesh indices of a rectangular barrier whose edges are mesh nodes.
#[derive(Debug, Clone, Copy)]
struct BarrierNodes {
    ja: usize,
    jb: usize,
    kc: usize,
    kd: usize,
}

impl BarrierNodes {
    fn snap(v: f64, h: f64, n: usize, name: &str, axis: &str) -> Result<usize> {
        let idx = (v / h).round();
        if idx < 0.0 || idx > n as f64 || (idx * h - v).abs() > 1e-9 * h.max(v.abs()) {
            return Err(Error::config(format!(
                "barrier edge {name}={v} is not an {axis}-mesh node (step {h}); choose {} so that it divides the edge coordinates",
                if axis == "x" { "J" } else { "K" }
            )));
        }
        Ok(idx as usize)
    }

    fn locate(spec: &PotentialSpec, grid: &GridSpec) -> Result<Self> {
        let PotentialSpec::Rectangular {
            x_min,
            x_max,
            y_min,
            y_max,
            ..
        } = spec
        else {
            return Err(Error::internal("barrier nodes requested for a non-rectangular potential"));
        };
        Ok(BarrierNodes {
            ja: Self::snap(*x_min, grid.hx(), grid.nx(), "a", "x")?,
            jb: Self::snap(*x_max, grid.hx(), grid.nx(), "b", "x")?,
            kc: Self::snap(*y_min, grid.hy(), grid.ny(), "c", "y")?,
            kd: Self::snap(*y_max, grid.hy(), grid.ny(), "d", "y")?,
        })
    }
}

/// Edge-averaged mesh potential of a rectangular barrier whose corners are
/// mesh nodes: full height strictly inside, half on edge nodes, a quarter at
/// the four corners, pointwise values elsewhere.
pub fn averaged_mesh_potential(spec: &PotentialSpec, grid: &GridSpec) -> Result<MeshPotential> {
    let PotentialSpec::Rectangular { height, .. } = spec else {
        return Err(Error::config("averaged mesh potential needs a rectangular barrier"));
    };
    let n = BarrierNodes::locate(spec, grid)?;
    let q = *height;
    Ok(MeshPotential::from_fn(*grid, |j, k| {
        let on_x = j == n.ja || j == n.jb;
        let on_y = k == n.kc || k == n.kd;
        let in_x = n.ja < j && j < n.jb;
        let in_y = n.kc < k && k < n.kd;
        match (on_x, on_y) {
            (true, true) => q / 4.0,
            (true, false) if in_y => q / 2.0,
            (false, true) if in_x => q / 2.0,
            (false, false) if in_x && in_y => q,
            _ => 0.0,
        }
    }))
}

/// Potential on the mesh as used by the solver: averaged for rectangular
/// barriers with `averaged = true`, pointwise otherwise.
///
/// Pointwise sampling of a rectangle whose edges fall on mesh nodes treats
/// those nodes as outside the open rectangle, independent of rounding in the
/// node coordinates.
pub fn mesh_potential(spec: &PotentialSpec, grid: &GridSpec) -> Result<MeshPotential> {
    spec.validate(grid)?;
    match spec {
        PotentialSpec::Rectangular { averaged: true, .. } => averaged_mesh_potential(spec, grid),
        PotentialSpec::Rectangular { height, .. } => {
            if let Ok(n) = BarrierNodes::locate(spec, grid) {
                Ok(MeshPotential::from_fn(*grid, |j, k| {
                    if n.ja < j && j < n.jb && n.kc < k && k < n.kd {
                        *height
                    } else {
                        0.0
                    }
                }))
            } else {
                Ok(MeshPotential::from_fn(*grid, |j, k| eval_potential(spec, grid.x(j), grid.y(k))))
            }
        }
        PotentialSpec::Tabulated(mesh) => Ok(mesh.clone()),
        _ => Ok(MeshPotential::from_fn(*grid, |j, k| eval_potential(spec, grid.x(j), grid.y(k)))),
    }
}
