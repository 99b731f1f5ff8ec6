//! Time stepping: explicit potential half-steps around an implicit
//! Numerov-Crank-Nicolson step that decouples into independent sine modes.
//!
//! One level `m - 1 -> m` is
//!
//! 1. `Ψ̆ = E Ψ^{m-1}` (pointwise phase, `E = (1 - i τ ΔV / 4ħ) / (1 + i τ ΔV / 4ħ)`),
//! 2. sine transform of `Ψ̆` (and the forcing) in `y`, column by column,
//! 3. for every mode `q` a tridiagonal solve in `x` whose boundary rows carry
//!    the transparent boundary condition,
//! 4. inverse sine transform,
//! 5. `Ψ^m = E Ψ̃`.
//!
//! Steps 1, 2, 4 and 5 are parallel over columns, step 3 over modes. Every
//! column and every mode is computed by the same serial code whatever the
//! thread count, so results are bit-identical for any degree of parallelism.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{NormSample, RunReport, RunTimings};
use crate::error::{Error, Result};
use crate::mesh::{Geometry, GridSpec, WaveField};
use crate::physics::{MeshPotential, PhysicsParams};
use crate::sine_transform::{eigenvalues, DstScratch, SineTransform, TransformKind};
use crate::tbc_kernel::{all_mode_coefficients, ModeTbc, Side, TbcState};

/// Largest `|Ψ^0|` tolerated on the columns next to a transparent boundary.
pub const INITIAL_BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Largest `|V - V_inf|`, relative to `max(1, max |V|)`, tolerated on the
/// columns next to a transparent boundary.
pub const BOUNDARY_POTENTIAL_TOLERANCE: f64 = 1e-8;

/// Largest relative modulus change allowed in a phase half-step when tracked.
pub const UNITARITY_TOLERANCE: f64 = 1e-15;

/// Residual bound `||Ax - b||_inf / ||b||_inf` of the tridiagonal solves.
pub const SOLVER_RESIDUAL_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pointwise factor of the potential half-steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMultiplier {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl PhaseMultiplier {
    /// `E = (1 - i z) / (1 + i z)` with `z = τ ΔV / (4ħ)`, written as
    /// `((1 - z^2) - 2 i z) / (1 + z^2)`; `E = 1` exactly where `ΔV = 0`.
    pub fn new(delta_v: &MeshPotential, tau: f64, hbar: f64) -> Self {
        let scale = tau / (4.0 * hbar);
        let values = delta_v
            .values()
            .iter()
            .map(|&dv| {
                if dv == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    let z = scale * dv;
                    let den = 1.0 + z * z;
                    Complex64::new((1.0 - z * z) / den, -2.0 * z / den)
                }
            })
            .collect();
        PhaseMultiplier {
            grid: *delta_v.grid(),
            values,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.grid.index(j, k)]
    }
}

/// Multiplies the columns `first..=last` (rows `1..K-1`) by the phase factor
/// and returns the largest relative modulus change `| |E ψ| / |ψ| - 1 |` when
/// `check` is set.
pub fn phase_halfstep(
    field: &mut WaveField,
    multiplier: &PhaseMultiplier,
    columns: (usize, usize),
    check: bool,
) -> f64 {
    let ny = field.grid().ny();
    let stride = ny + 1;
    let (first, last) = columns;
    let values = &mut field.values_mut()[first * stride..(last + 1) * stride];
    let factors = &multiplier.values[first * stride..(last + 1) * stride];
    values
        .par_chunks_mut(stride)
        .zip(factors.par_chunks(stride))
        .map(|(col, fac)| {
            let mut worst: f64 = 0.0;
            for k in 1..ny {
                let before = col[k];
                let after = before * fac[k];
                col[k] = after;
                if check {
                    let b = before.norm();
                    if b > 1e-280 {
                        worst = worst.max((after.norm() / b - 1.0).abs());
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Static description of one simulation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpec,
    pub physics: PhysicsParams,
    pub geometry: Geometry,
    pub transform: TransformKind,
    /// Potential `V` on the mesh.
    pub potential: MeshPotential,
    /// Auxiliary `x`-only potential `Ṽ(x_j)`, `j = 0..=J`, treated inside the
    /// implicit step; `ΔV = V - Ṽ` goes into the phase factors.
    pub aux_potential: Vec<f64>,
    /// Track the modulus change of every phase half-step.
    pub check_unitarity: bool,
}

impl Problem {
    /// Problem with `Ṽ ≡ V_inf`.
    pub fn new(
        grid: GridSpec,
        physics: PhysicsParams,
        geometry: Geometry,
        transform: TransformKind,
        potential: MeshPotential,
    ) -> Self {
        Problem {
            aux_potential: vec![physics.v_inf; grid.nx() + 1],
            grid,
            physics,
            geometry,
            transform,
            potential,
            check_unitarity: false,
        }
    }

    pub fn delta_v(&self) -> MeshPotential {
        let g = self.grid;
        MeshPotential::from_fn(g, |j, k| self.potential.get(j, k) - self.aux_potential[j])
    }

    /// Checks the compatibility of grid, geometry and potentials.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        self.physics.validate()?;
        self.transform.check(g)?;
        let pg = self.potential.grid();
        if pg.nx() != g.nx() || pg.ny() != g.ny() {
            return Err(Error::config("potential mesh does not match the grid"));
        }
        if self.aux_potential.len() != g.nx() + 1 {
            return Err(Error::config(format!(
                "auxiliary potential has {} values, expected J+1 = {}",
                self.aux_potential.len(),
                g.nx() + 1
            )));
        }
        let scale = BOUNDARY_POTENTIAL_TOLERANCE * self.potential.max_abs().max(1.0);
        let v_inf = self.physics.v_inf;
        let mut edge_columns = Vec::new();
        if self.geometry.has_right_tbc() {
            edge_columns.extend([g.nx() - 1, g.nx()]);
        }
        if self.geometry.has_left_tbc() {
            edge_columns.extend([0, 1]);
        }
        for &j in &edge_columns {
            if (self.aux_potential[j] - v_inf).abs() > scale {
                return Err(Error::config(format!(
                    "auxiliary potential must equal V_inf = {v_inf} next to a transparent boundary, column {j} has {}",
                    self.aux_potential[j]
                )));
            }
            for k in 1..g.ny() {
                let v = self.potential.get(j, k);
                if (v - v_inf).abs() > scale {
                    return Err(Error::config(format!(
                        "potential must equal V_inf = {v_inf} next to a transparent boundary, node ({j},{k}) has {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Warns when `L τ h_x^α < 8ħ` fails for a user-supplied Hölder bound
    /// `|Ṽ(x') - Ṽ(x)| <= L |x' - x|^α` of a non-constant `Ṽ`.
    pub fn check_uniqueness_hint(&self, holder: Option<(f64, f64)>) -> bool {
        let constant = self.aux_potential.windows(2).all(|w| w[0] == w[1]);
        if constant {
            return true;
        }
        match holder {
            Some((l, alpha)) => {
                let lhs = l * self.grid.tau() * self.grid.hx().powf(alpha);
                let ok = lhs < 8.0 * self.physics.hbar;
                if !ok {
                    log::warn!(
                        "L tau h_x^alpha = {lhs:e} >= 8 hbar: uniqueness of the discrete solution is not guaranteed"
                    );
                }
                ok
            }
            None => {
                log::warn!("non-constant auxiliary potential without a Hölder bound; uniqueness condition unchecked");
                false
            }
        }
    }
}

/// Per-step inputs shared by all modes.
#[derive(Debug, Clone, Copy)]
pub struct ModeContext<'a> {
    pub grid: &'a GridSpec,
    pub physics: &'a PhysicsParams,
    pub geometry: Geometry,
    pub aux_potential: &'a [f64],
    /// Level being computed (`m >= 1`).
    pub level: usize,
}

/// Tridiagonal system of one mode over the active columns `first_j..`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem {
    pub q: usize,
    pub level: usize,
    pub first_j: usize,
    /// `lower[i]` couples unknown `i` to `i - 1`; `lower[0] = 0`.
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    /// `upper[i]` couples unknown `i` to `i + 1`; `upper[n-1] = 0`.
    pub upper: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl ModeSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x` for the stored matrix.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Assembles the implicit step of mode `q = mode.coeffs.q` at `ctx.level`.
///
/// `breve` is the mode line of `Ψ̆` (length `J + 1`), `forcing` that of `F`.
/// Interior rows discretize
/// `iħ s_θ (Ψ̃ - Ψ̆)/τ = -c_q ∂∂ (Ψ̃ + Ψ̆)/2 + s_θ(Ṽ_q (Ψ̃ + Ψ̆)/2) + F/σ_q`
/// with unknowns on the left and `Ψ̆` terms on the right. A transparent
/// boundary row couples the boundary node and its neighbour; the kernel's
/// current-level term `c_q R^0 Ψ̃` is folded into its diagonal and the history
/// part of the convolution goes to the right-hand side.
pub fn assemble_mode_system(
    ctx: &ModeContext<'_>,
    mode: &mut ModeTbc,
    breve: &[Complex64],
    forcing: Option<&[Complex64]>,
) -> Result<ModeSystem> {
    let g = ctx.grid;
    let nx = g.nx();
    if breve.len() != nx + 1 {
        return Err(Error::internal(format!("mode line has {} values, expected {}", breve.len(), nx + 1)));
    }
    let co = mode.coeffs;
    let (q, m) = (co.q, ctx.level);
    let (first, last) = ctx.geometry.active_columns(nx);
    let n = last - first + 1;

    let h = g.hx();
    let c = co.c_hbar_q;
    let theta = co.theta_q;
    let ih = Complex64::new(0.0, ctx.physics.hbar / g.tau());
    let shift = ctx.physics.c_hbar * co.lambda_q / co.sigma_q;
    let v_q = |j: usize| ctx.aux_potential[j] + shift;

    let mut lower = vec![ZERO; n];
    let mut diag = vec![ZERO; n];
    let mut upper = vec![ZERO; n];
    let mut rhs = vec![ZERO; n];

    let diffusion = c / (2.0 * h * h);
    let weights = [theta, 1.0 - 2.0 * theta, theta];
    let second_diff = [1.0, -2.0, 1.0];

    // Boundary row coefficients, shared by both sides.
    let v_inf_q = co.v_inf_q;
    let implicit = ih - 0.5 * v_inf_q;
    let explicit = -ih - 0.5 * v_inf_q;
    let flux = c / (2.0 * h);
    let outer_u = flux - h * (0.5 - theta) * implicit;
    let inner_u = -flux - h * theta * implicit;
    let outer_b = flux - h * (0.5 - theta) * explicit;
    let inner_b = -flux - h * theta * explicit;

    for i in 0..n {
        let j = first + i;
        let left_tbc = j == 0;
        let right_tbc = j == nx && ctx.geometry.has_right_tbc();
        if left_tbc || right_tbc {
            let (side, inner) = if left_tbc { (Side::Left, 1) } else { (Side::Right, nx - 1) };
            let conv = mode.convolve_history(side, m)?;
            let r0 = mode.kernel.r0();
            diag[i] = outer_u - c * r0;
            if left_tbc {
                upper[i] = inner_u;
            } else {
                lower[i] = inner_u;
            }
            rhs[i] = c * conv - outer_b * breve[j] - inner_b * breve[inner];
            continue;
        }

        let mut r = match forcing {
            Some(f) => f[j] / co.sigma_q,
            None => ZERO,
        };
        for l in 0..3 {
            let jj = j + l - 1;
            let w = weights[l];
            let v = v_q(jj);
            let cu = w * (ih - 0.5 * v) + diffusion * second_diff[l];
            let cb = w * (-ih - 0.5 * v) + diffusion * second_diff[l];
            if jj < first || jj > last {
                // Dirichlet neighbour: both Ψ̃ and Ψ̆ vanish there.
                continue;
            }
            r -= cb * breve[jj];
            match l {
                0 => lower[i] = cu,
                1 => diag[i] = cu,
                _ => upper[i] = cu,
            }
        }
        rhs[i] = r;
    }

    Ok(ModeSystem {
        q,
        level: m,
        first_j: first,
        lower,
        diag,
        upper,
        rhs,
    })
}

/// Gaussian elimination on the band without pivoting, followed by a residual
/// check.
pub fn solve_tridiagonal(system: &ModeSystem) -> Result<Vec<Complex64>> {
    let n = system.len();
    let fail = |reason: String| Error::Solver {
        q: system.q,
        level: system.level,
        reason,
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let (a, b, c, d) = (&system.lower, &system.diag, &system.upper, &system.rhs);
    let mut cp = vec![ZERO; n];
    let mut dp = vec![ZERO; n];

    let mut pivot = b[0];
    if pivot.norm() == 0.0 || !pivot.is_finite() {
        return Err(fail("zero pivot in row 0".into()));
    }
    cp[0] = c[0] / pivot;
    dp[0] = d[0] / pivot;
    for i in 1..n {
        pivot = b[i] - a[i] * cp[i - 1];
        if pivot.norm() == 0.0 || !pivot.is_finite() {
            return Err(fail(format!("zero pivot in row {i}")));
        }
        cp[i] = c[i] / pivot;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / pivot;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }

    let ax = system.apply(&x);
    let res = ax.iter().zip(d).map(|(l, r)| (l - r).norm()).fold(0.0, f64::max);
    let scale = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let ok = if scale == 0.0 { res == 0.0 } else { res <= SOLVER_RESIDUAL_TOLERANCE * scale };
    if !ok || x.iter().any(|v| !v.is_finite()) {
        return Err(fail(format!("residual {res:e} exceeds {SOLVER_RESIDUAL_TOLERANCE:e} relative to |b| = {scale:e}")));
    }
    Ok(x)
}

/// Accumulated wall-clock seconds per step phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub phase: f64,
    pub transform: f64,
    pub solve: f64,
    pub inverse: f64,
}

/// Mutable state of a running simulation.
pub struct SimulationState {
    problem: Problem,
    level: usize,
    psi: WaveField,
    multiplier: PhaseMultiplier,
    transform: SineTransform,
    tbc: TbcState,
    // Column-major coefficients: cols[j * (K-1) + (q-1)].
    cols: Vec<Complex64>,
    // Mode-major coefficients: modes[(q-1) * (J+1) + j].
    modes: Vec<Complex64>,
    forcing_modes: Vec<Complex64>,
    max_phase_deviation: f64,
    timings: PhaseTimings,
}

impl std::fmt::Debug for SimulationState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulationState")
            .field("grid", &self.problem.grid)
            .field("geometry", &self.problem.geometry)
            .field("level", &self.level)
            .finish()
    }
}

impl SimulationState {
    pub fn new(problem: Problem, initial: WaveField) -> Result<Self> {
        problem.validate()?;
        let g = problem.grid;
        if initial.grid().nx() != g.nx() || initial.grid().ny() != g.ny() {
            return Err(Error::config("initial field does not match the grid"));
        }
        let mut psi = initial;
        psi.enforce_boundary(problem.geometry);

        let mut edge_columns = Vec::new();
        if problem.geometry.has_right_tbc() {
            edge_columns.extend([g.nx() - 1, g.nx()]);
        }
        if problem.geometry.has_left_tbc() {
            edge_columns.extend([0, 1]);
        }
        for j in edge_columns {
            let worst = psi.column(j).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if worst > INITIAL_BOUNDARY_TOLERANCE {
                return Err(Error::config(format!(
                    "initial data must vanish next to a transparent boundary; |Ψ0| = {worst:e} on column {j}"
                )));
            }
            if worst > 0.0 {
                log::info!("initial data tail on column {j}: {worst:e}");
            }
        }

        let eig = eigenvalues(&g);
        let coeffs = all_mode_coefficients(&g, &problem.physics, &eig)?;
        let tbc = TbcState::new(
            coeffs,
            problem.geometry.has_left_tbc(),
            problem.geometry.has_right_tbc(),
            g.nt(),
        );
        let transform = SineTransform::for_grid(&g, problem.transform)?;
        let multiplier = PhaseMultiplier::new(&problem.delta_v(), g.tau(), problem.physics.hbar);
        let n_coeffs = (g.nx() + 1) * (g.ny() - 1);
        Ok(SimulationState {
            problem,
            level: 0,
            psi,
            multiplier,
            transform,
            tbc,
            cols: vec![ZERO; n_coeffs],
            modes: vec![ZERO; n_coeffs],
            forcing_modes: Vec::new(),
            max_phase_deviation: 0.0,
            timings: PhaseTimings::default(),
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn grid(&self) -> &GridSpec {
        &self.problem.grid
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn time(&self) -> f64 {
        self.problem.grid.t(self.level)
    }

    pub fn psi(&self) -> &WaveField {
        &self.psi
    }

    pub fn tbc(&self) -> &TbcState {
        &self.tbc
    }

    pub fn multiplier(&self) -> &PhaseMultiplier {
        &self.multiplier
    }

    pub fn timings(&self) -> PhaseTimings {
        self.timings
    }

    /// Largest relative modulus change seen in any phase half-step so far
    /// (only tracked with `check_unitarity`).
    pub fn max_phase_deviation(&self) -> f64 {
        self.max_phase_deviation
    }

    /// Advances one level with zero forcing.
    pub fn step(&mut self) -> Result<()> {
        self.step_with_forcing(None)
    }

    /// Advances one level; `forcing` is `F^m` on the mesh and must vanish
    /// outside the interior columns `1..J-1`.
    pub fn step_with_forcing(&mut self, forcing: Option<&WaveField>) -> Result<()> {
        let g = self.problem.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let nq = ny - 1;
        let geometry = self.problem.geometry;
        let columns = geometry.active_columns(nx);
        let check = self.problem.check_unitarity;
        let m = self.level + 1;

        if let Some(f) = forcing {
            self.transform_forcing(f)?;
        }

        // 1. Ψ̆ = E Ψ^{m-1}
        let t0 = Instant::now();
        let dev = phase_halfstep(&mut self.psi, &self.multiplier, columns, check);
        self.max_phase_deviation = self.max_phase_deviation.max(dev);
        self.timings.phase += t0.elapsed().as_secs_f64();

        // 2. forward transform, then transpose to mode-major.
        let t0 = Instant::now();
        forward_columns(&self.transform, &self.psi, &mut self.cols, columns)?;
        transpose_to_modes(&self.cols, &mut self.modes, nx, nq);
        self.timings.transform += t0.elapsed().as_secs_f64();

        // 3. per-mode implicit solve.
        let t0 = Instant::now();
        let ctx = ModeContext {
            grid: &g,
            physics: &self.problem.physics,
            geometry,
            aux_potential: &self.problem.aux_potential,
            level: m,
        };
        let forcing_modes = if forcing.is_some() {
            Some(&self.forcing_modes)
        } else {
            None
        };
        self.modes
            .par_chunks_mut(nx + 1)
            .zip(self.tbc.modes_mut().par_iter_mut())
            .enumerate()
            .try_for_each(|(idx, (line, mode))| -> Result<()> {
                let f = forcing_modes.map(|fm| &fm[idx * (nx + 1)..(idx + 1) * (nx + 1)]);
                let system = assemble_mode_system(&ctx, mode, line, f)?;
                let x = solve_tridiagonal(&system)?;
                line.fill(ZERO);
                line[system.first_j..system.first_j + x.len()].copy_from_slice(&x);
                if geometry.has_right_tbc() {
                    mode.push_trace(Side::Right, line[nx])?;
                }
                if geometry.has_left_tbc() {
                    mode.push_trace(Side::Left, line[0])?;
                }
                Ok(())
            })?;
        self.timings.solve += t0.elapsed().as_secs_f64();

        // 4. inverse transform.
        let t0 = Instant::now();
        transpose_to_columns(&self.modes, &mut self.cols, nx, nq);
        inverse_columns(&self.transform, &self.cols, &mut self.psi, columns)?;
        self.timings.inverse += t0.elapsed().as_secs_f64();

        // 5. Ψ^m = E Ψ̃
        let t0 = Instant::now();
        let dev = phase_halfstep(&mut self.psi, &self.multiplier, columns, check);
        self.max_phase_deviation = self.max_phase_deviation.max(dev);
        self.timings.phase += t0.elapsed().as_secs_f64();

        self.level = m;
        Ok(())
    }

    fn transform_forcing(&mut self, f: &WaveField) -> Result<()> {
        let g = self.problem.grid;
        let (nx, ny) = (g.nx(), g.ny());
        if f.grid().nx() != nx || f.grid().ny() != ny {
            return Err(Error::config("forcing does not match the grid"));
        }
        for j in [0, nx] {
            if f.column(j).iter().any(|v| v.norm() != 0.0) {
                return Err(Error::config(format!(
                    "forcing must vanish outside the interior columns, column {j} is nonzero"
                )));
            }
        }
        let mut cols = vec![ZERO; (nx + 1) * (ny - 1)];
        forward_columns(&self.transform, f, &mut cols, (1, nx - 1))?;
        self.forcing_modes.resize(cols.len(), ZERO);
        transpose_to_modes(&cols, &mut self.forcing_modes, nx, ny - 1);
        Ok(())
    }
}

/// Runs a configuration to `T` on a pool of `config.run.threads` workers
/// (0 picks the hardware parallelism).
///
/// Phase unitarity is tracked when the configuration asks for it and always
/// in debug builds; a violation is a numerical error.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.threads)
        .build()
        .map_err(|e| Error::internal(format!("cannot start worker threads: {e}")))?;
    pool.install(|| run_in_current_pool(config))
}

/// [`run`] on the calling thread's rayon pool.
pub fn run_in_current_pool(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let mut problem = config.problem()?;
    problem.check_unitarity = config.run.check_unitarity || cfg!(debug_assertions);
    let holder = config.run.aux_holder_bound.map(|[l, a]| (l, a));
    problem.check_uniqueness_hint(holder);
    let check = problem.check_unitarity;
    let weighting = config.run.norm;

    let mut state = SimulationState::new(problem, config.initial_field()?)?;
    let setup = start.elapsed().as_secs_f64();
    let wanted = config.snapshot_levels();
    let mut snapshots = std::collections::BTreeMap::new();
    let mut norms = Vec::with_capacity(config.grid.nt + 1);
    norms.push(NormSample::of(state.psi(), 0, weighting));
    if wanted.first() == Some(&0) {
        snapshots.insert(0, state.psi().clone());
    }
    for m in 1..=config.grid.nt {
        state.step()?;
        if check && state.max_phase_deviation() > UNITARITY_TOLERANCE {
            return Err(Error::internal(format!(
                "phase half-step changed a modulus by {:e} (relative) at level {m}",
                state.max_phase_deviation()
            )));
        }
        norms.push(NormSample::of(state.psi(), m, weighting));
        if wanted.binary_search(&m).is_ok() {
            snapshots.insert(m, state.psi().clone());
        }
    }
    Ok(RunReport {
        config: config.clone(),
        norms,
        snapshots,
        final_field: state.psi().clone(),
        timings: RunTimings {
            setup,
            steps: state.timings(),
            total: start.elapsed().as_secs_f64(),
        },
        max_phase_deviation: check.then(|| state.max_phase_deviation()),
    })
}

fn forward_columns(
    transform: &SineTransform,
    field: &WaveField,
    cols: &mut [Complex64],
    (first, last): (usize, usize),
) -> Result<()> {
    let nq = field.grid().ny() - 1;
    cols.par_chunks_mut(nq)
        .enumerate()
        .try_for_each_init(
            || transform.make_scratch(),
            |scratch: &mut DstScratch, (j, out)| {
                if j < first || j > last {
                    out.fill(ZERO);
                    Ok(())
                } else {
                    transform.forward(field.column(j), out, scratch)
                }
            },
        )
}

fn inverse_columns(
    transform: &SineTransform,
    cols: &[Complex64],
    field: &mut WaveField,
    (first, last): (usize, usize),
) -> Result<()> {
    let ny = field.grid().ny();
    let nq = ny - 1;
    field
        .values_mut()
        .par_chunks_mut(ny + 1)
        .enumerate()
        .try_for_each_init(
            || transform.make_scratch(),
            |scratch: &mut DstScratch, (j, col)| {
                if j < first || j > last {
                    col.fill(ZERO);
                    Ok(())
                } else {
                    transform.inverse(&cols[j * nq..(j + 1) * nq], col, scratch)
                }
            },
        )
}

fn transpose_to_modes(cols: &[Complex64], modes: &mut [Complex64], nx: usize, nq: usize) {
    modes.par_chunks_mut(nx + 1).enumerate().for_each(|(qi, line)| {
        for (j, v) in line.iter_mut().enumerate() {
            *v = cols[j * nq + qi];
        }
    });
}

fn transpose_to_columns(modes: &[Complex64], cols: &mut [Complex64], nx: usize, nq: usize) {
    cols.par_chunks_mut(nq).enumerate().for_each(|(j, col)| {
        for (qi, v) in col.iter_mut().enumerate() {
            *v = modes[qi * (nx + 1) + j];
        }
    });
}
