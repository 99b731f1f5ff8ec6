//! Uniform space-time meshes, complex fields on them and the mesh norms.
//!
//! A field lives on the node lattice `(x_j, y_k)`, `0 <= j <= J`,
//! `0 <= k <= K`, stored densely with `k` varying fastest so that a
//! fixed-`x` column is a contiguous slice. Boundary values are stored too;
//! the operations that write fields are responsible for keeping the
//! homogeneous Dirichlet rows `k = 0` and `k = K` at zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extents and node counts of a uniform mesh in `x`, `y` and `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    x_len: f64,
    y_len: f64,
    t_end: f64,
    nx: usize,
    ny: usize,
    nt: usize,
}

impl GridSpec {
    /// Builds a grid on `[0, X] x [0, Y] x [0, T]` with `J`, `K` intervals in
    /// space and `M` time steps.
    pub fn new(x_len: f64, y_len: f64, t_end: f64, nx: usize, ny: usize, nt: usize) -> Result<Self> {
        for (name, v) in [("X", x_len), ("Y", y_len), ("T", t_end)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("extent {name} must be positive and finite, got {v}")));
            }
        }
        if nx < 2 {
            return Err(Error::config(format!("J must be at least 2, got {nx}")));
        }
        if ny < 2 {
            return Err(Error::config(format!("K must be at least 2, got {ny}")));
        }
        Ok(GridSpec {
            x_len,
            y_len,
            t_end,
            nx,
            ny,
            nt,
        })
    }

    pub fn x_len(&self) -> f64 {
        self.x_len
    }

    pub fn y_len(&self) -> f64 {
        self.y_len
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of intervals in `x` (`J`).
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of intervals in `y` (`K`).
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of time steps (`M`).
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn hx(&self) -> f64 {
        self.x_len / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.y_len / self.ny as f64
    }

    /// Time step `T / M`. A grid with `M = 0` holds only the initial level;
    /// it reports `τ = T` so that coefficient setup stays finite.
    pub fn tau(&self) -> f64 {
        self.t_end / self.nt.max(1) as f64
    }

    // Nodes are computed as `X * j / J` rather than `j * h_x` so the last node
    // is exactly `X` and nodes coincide bit-for-bit across nested meshes.
    pub fn x(&self, j: usize) -> f64 {
        self.x_len * j as f64 / self.nx as f64
    }

    pub fn y(&self, k: usize) -> f64 {
        self.y_len * k as f64 / self.ny as f64
    }

    pub fn t(&self, m: usize) -> f64 {
        self.t_end * m as f64 / self.nt.max(1) as f64
    }

    pub fn k_is_power_of_two(&self) -> bool {
        self.ny.is_power_of_two()
    }

    /// Number of stored nodes, `(J+1)(K+1)`.
    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * (self.ny + 1) + k
    }

    /// Same extents with different node counts.
    pub fn with_counts(&self, nx: usize, ny: usize, nt: usize) -> Result<Self> {
        GridSpec::new(self.x_len, self.y_len, self.t_end, nx, ny, nt)
    }
}

/// Builds a grid and, when the FFT transform path is requested, checks that
/// `K` is a power of two.
pub fn build_grid(
    x_len: f64,
    y_len: f64,
    t_end: f64,
    nx: usize,
    ny: usize,
    nt: usize,
    transform: crate::sine_transform::TransformKind,
) -> Result<GridSpec> {
    let grid = GridSpec::new(x_len, y_len, t_end, nx, ny, nt)?;
    transform.check(&grid)?;
    Ok(grid)
}

/// Boundary treatment in `x`. The `y` boundaries are always homogeneous
/// Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Dirichlet at `x = 0`, transparent boundary at `x = X`.
    SemiInfinite,
    /// Transparent boundaries at both `x = 0` and `x = X`.
    InfiniteStrip,
    /// Dirichlet at both ends; no transparent boundary.
    ClosedBox,
}

impl Geometry {
    /// Columns `j` carrying unknowns (first, last inclusive).
    pub fn active_columns(&self, nx: usize) -> (usize, usize) {
        match self {
            Geometry::SemiInfinite => (1, nx),
            Geometry::InfiniteStrip => (0, nx),
            Geometry::ClosedBox => (1, nx - 1),
        }
    }

    pub fn has_left_tbc(&self) -> bool {
        matches!(self, Geometry::InfiniteStrip)
    }

    pub fn has_right_tbc(&self) -> bool {
        !matches!(self, Geometry::ClosedBox)
    }
}

/// Weighting used by [`WaveField::norm_l2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormWeighting {
    /// Nodes `1 <= j <= J-1`, `1 <= k <= K-1`, each with weight `h_x h_y`.
    #[default]
    Interior,
    /// Interior plus the `j = J` column with half weight `h_x h_y / 2`.
    HalfRight,
}

/// Complex mesh function at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn zeros(grid: GridSpec) -> Self {
        WaveField {
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
            grid,
        }
    }

    /// Wraps dense values laid out with `k` fastest.
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::internal(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(WaveField { grid, values })
    }

    /// Samples `f(x, y)` at every node, then zeroes the `y` boundary rows.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut field = WaveField::zeros(grid);
        for j in 0..=grid.nx() {
            let x = grid.x(j);
            for k in 1..grid.ny() {
                field.values[grid.index(j, k)] = f(x, grid.y(k));
            }
        }
        field
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.grid.index(j, k)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        let idx = self.grid.index(j, k);
        self.values[idx] = v;
    }

    /// Values at fixed `x_j`, `k = 0..=K`.
    pub fn column(&self, j: usize) -> &[Complex64] {
        let n = self.grid.ny() + 1;
        &self.values[j * n..(j + 1) * n]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        let n = self.grid.ny() + 1;
        &mut self.values[j * n..(j + 1) * n]
    }

    /// Zeroes rows `k = 0, K` and the Dirichlet columns of `geometry`.
    pub fn enforce_boundary(&mut self, geometry: Geometry) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let zero = Complex64::new(0.0, 0.0);
        for j in 0..=nx {
            self.set(j, 0, zero);
            self.set(j, ny, zero);
        }
        let (first, last) = geometry.active_columns(nx);
        for j in (0..first).chain(last + 1..=nx) {
            self.column_mut(j).fill(zero);
        }
    }

    /// Mesh L2 norm, interior nodes by default.
    pub fn norm_l2(&self, weighting: NormWeighting) -> f64 {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut sum = 0.0;
        for j in 1..nx {
            for v in &self.column(j)[1..ny] {
                sum += v.norm_sqr();
            }
        }
        if weighting == NormWeighting::HalfRight {
            let edge: f64 = self.column(nx)[1..ny].iter().map(|v| v.norm_sqr()).sum();
            sum += 0.5 * edge;
        }
        (sum * g.hx() * g.hy()).sqrt()
    }

    /// Maximum modulus over all nodes.
    pub fn norm_c(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Injection onto the mesh with `J / fx` and `K / fy` intervals; `M` is
    /// kept.
    pub fn restrict(&self, fx: usize, fy: usize) -> Result<WaveField> {
        let g = &self.grid;
        if fx == 0 || fy == 0 || !g.nx().is_multiple_of(fx) || !g.ny().is_multiple_of(fy) {
            return Err(Error::config(format!(
                "cannot restrict (J,K)=({},{}) by factors ({fx},{fy})",
                g.nx(),
                g.ny()
            )));
        }
        let coarse = g.with_counts(g.nx() / fx, g.ny() / fy, g.nt())?;
        let mut out = WaveField::zeros(coarse);
        for j in 0..=coarse.nx() {
            for k in 0..=coarse.ny() {
                out.set(j, k, self.get(j * fx, k * fy));
            }
        }
        Ok(out)
    }
}

/// Coefficient line of a single sine mode `q` along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLine {
    pub q: usize,
    pub values: Vec<Complex64>,
}

impl ModeLine {
    pub fn zeros(q: usize, nx: usize) -> Self {
        ModeLine {
            q,
            values: vec![Complex64::new(0.0, 0.0); nx + 1],
        }
    }
}
