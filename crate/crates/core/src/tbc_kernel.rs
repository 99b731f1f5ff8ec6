//! Per-mode coefficients of the discrete transparent boundary condition and
//! its convolution kernel.
//!
//! After the sine transform in `y`, every mode `q` outside the computational
//! interval obeys a 1D Numerov-Crank-Nicolson equation with constant
//! coefficients `c_hbar_q`, `theta_q`, `V_inf_q`. Its exact boundary relation
//! at `x_J` (or `x_0`) involves the convolution of the boundary trace history
//! with a kernel `R_q^m` given by the three-term recurrence
//!
//! ```text
//! R^0 = c1,  R^1 = -c1 kappa mu,
//! R^m = (2m-3)/m kappa mu R^{m-1} - (m-3)/m kappa^2 R^{m-2},  m >= 2.
//! ```
//!
//! The kernel is the coefficient sequence of
//! `c1 (1 - 2 mu kappa z + kappa^2 z^2)^{1/2}`; with `|kappa| = 1` and
//! `|mu| < 1` it is bounded and decays like `m^{-3/2}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::GridSpec;
use crate::physics::PhysicsParams;
use crate::sine_transform::ModeEigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficients {
    pub q: usize,
    pub lambda_q: f64,
    pub sigma_q: f64,
    pub c_hbar_q: f64,
    pub theta_q: f64,
    pub v_inf_q: f64,
    pub a_q: Complex64,
    pub alpha_q: Complex64,
    pub beta_q: f64,
    pub c1_q: Complex64,
    pub kappa_q: Complex64,
    pub mu_q: f64,
}

/// Computes and validates the coefficients of mode `q`.
pub fn mode_coefficients(
    q: usize,
    grid: &GridSpec,
    physics: &PhysicsParams,
    eig: &ModeEigenvalues,
) -> Result<ModeCoefficients> {
    if q == 0 || q > eig.mode_count() {
        return Err(Error::config(format!("mode index q = {q} outside 1..={}", eig.mode_count())));
    }
    let (hx, hy, tau) = (grid.hx(), grid.hy(), grid.tau());
    let lambda_q = eig.lambda(q);
    let sigma_q = eig.sigma(q);

    let r = hx * hy * lambda_q / (12.0 * sigma_q);
    let c_hbar_q = physics.c_hbar * (1.0 + r * r);
    let theta_q = 1.0 / (12.0 * sigma_q);
    let v_inf_q = physics.v_inf + physics.c_hbar * lambda_q / sigma_q;

    let a_q = Complex64::new(v_inf_q / (2.0 * c_hbar_q), physics.hbar / (tau * c_hbar_q));
    let w = (1.0 - 4.0 * theta_q) * hx * hx;
    let alpha_q = 2.0 * a_q + w * a_q * a_q;
    let beta_q = 2.0 * a_q.re + w * a_q.norm_sqr();
    if alpha_q.norm() == 0.0 {
        return Err(Error::Solver {
            q,
            level: 0,
            reason: "alpha_q vanishes".into(),
        });
    }

    // arg alpha_q is taken in (0, 2 pi).
    let mut arg = alpha_q.arg();
    if arg == 0.0 {
        return Err(Error::Solver {
            q,
            level: 0,
            reason: "alpha_q lies on the positive real axis; the branch of arg alpha_q is undefined".into(),
        });
    }
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    let abs_alpha = alpha_q.norm();
    let c1_q = -0.5 * abs_alpha.sqrt() * Complex64::from_polar(1.0, -0.5 * arg);
    let kappa_q = -Complex64::from_polar(1.0, arg);
    let mu_q = beta_q / abs_alpha;

    let coeffs = ModeCoefficients {
        q,
        lambda_q,
        sigma_q,
        c_hbar_q,
        theta_q,
        v_inf_q,
        a_q,
        alpha_q,
        beta_q,
        c1_q,
        kappa_q,
        mu_q,
    };
    coeffs.check()?;
    Ok(coeffs)
}

impl ModeCoefficients {
    fn check(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::Solver {
                q: self.q,
                level: 0,
                reason,
            })
        };
        if !(self.sigma_q > 2.0 / 3.0 && self.sigma_q < 1.0) {
            return fail(format!("sigma_q = {} outside (2/3, 1)", self.sigma_q));
        }
        if !(self.theta_q > 1.0 / 12.0 && self.theta_q < 0.125) {
            return fail(format!("theta_q = {} outside (1/12, 1/8)", self.theta_q));
        }
        if !(self.mu_q > -1.0 && self.mu_q < 1.0) {
            return fail(format!("mu_q = {} outside (-1, 1)", self.mu_q));
        }
        if (self.kappa_q.norm() - 1.0).abs() > 1e-14 {
            return fail(format!("|kappa_q| = {} is not 1", self.kappa_q.norm()));
        }
        Ok(())
    }
}

/// Coefficients of all modes `q = 1..K-1`.
pub fn all_mode_coefficients(
    grid: &GridSpec,
    physics: &PhysicsParams,
    eig: &ModeEigenvalues,
) -> Result<Vec<ModeCoefficients>> {
    (1..=eig.mode_count())
        .map(|q| mode_coefficients(q, grid, physics, eig))
        .collect()
}

/// Kernel values `R_q^0..R_q^n`, extended on demand.
#[derive(Debug, Clone)]
pub struct Kernel {
    c1: Complex64,
    kappa_mu: Complex64,
    kappa_sq: Complex64,
    values: Vec<Complex64>,
}

impl Kernel {
    pub fn new(coeffs: &ModeCoefficients) -> Self {
        let kappa_mu = coeffs.kappa_q * coeffs.mu_q;
        Kernel {
            c1: coeffs.c1_q,
            kappa_mu,
            kappa_sq: coeffs.kappa_q * coeffs.kappa_q,
            values: vec![coeffs.c1_q, -coeffs.c1_q * kappa_mu],
        }
    }

    /// Makes `R^0..=R^up_to` available and returns them. Idempotent.
    pub fn extend(&mut self, up_to: usize) -> &[Complex64] {
        while self.values.len() <= up_to {
            let m = self.values.len();
            let mf = m as f64;
            let next = (2.0 * mf - 3.0) / mf * self.kappa_mu * self.values[m - 1]
                - (mf - 3.0) / mf * self.kappa_sq * self.values[m - 2];
            self.values.push(next);
        }
        &self.values[..=up_to]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn r0(&self) -> Complex64 {
        self.c1
    }
}

/// Which artificial boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Boundary state of one mode: its kernel and the Fourier-space trace
/// history on each transparent side.
///
/// At the start of level `m` every active history holds exactly `m` traces
/// (levels `0..m-1`). The level-0 trace is stored as zero: the initial data
/// vanish at the boundary columns.
#[derive(Debug, Clone)]
pub struct ModeTbc {
    pub coeffs: ModeCoefficients,
    pub kernel: Kernel,
    left: Option<Vec<Complex64>>,
    right: Option<Vec<Complex64>>,
}

impl ModeTbc {
    pub fn new(coeffs: ModeCoefficients, left: bool, right: bool, capacity: usize) -> Self {
        let history = |on: bool| {
            on.then(|| {
                let mut v = Vec::with_capacity(capacity + 1);
                v.push(Complex64::new(0.0, 0.0));
                v
            })
        };
        ModeTbc {
            kernel: Kernel::new(&coeffs),
            coeffs,
            left: history(left),
            right: history(right),
        }
    }

    pub fn history(&self, side: Side) -> Option<&[Complex64]> {
        match side {
            Side::Left => self.left.as_deref(),
            Side::Right => self.right.as_deref(),
        }
    }

    /// `sum_{p=1}^{m} R^p h^{m-p}` over the stored history `h^0..h^{m-1}`.
    /// The `p = 0` term multiplies the unknown current trace and is left to
    /// the caller.
    pub fn convolve_history(&mut self, side: Side, m: usize) -> Result<Complex64> {
        let q = self.coeffs.q;
        let history = match side {
            Side::Left => self.left.as_deref(),
            Side::Right => self.right.as_deref(),
        }
        .ok_or_else(|| Error::internal(format!("mode {q} has no {side:?} boundary history")))?;
        if history.len() < m {
            return Err(Error::internal(format!(
                "mode {q}: {side:?} history holds {} levels, level {m} needs {m}",
                history.len()
            )));
        }
        let kernel = self.kernel.extend(m);
        Ok(convolve_tail(kernel, history, m))
    }

    pub fn push_trace(&mut self, side: Side, value: Complex64) -> Result<()> {
        let q = self.coeffs.q;
        match side {
            Side::Left => self.left.as_mut(),
            Side::Right => self.right.as_mut(),
        }
        .ok_or_else(|| Error::internal(format!("mode {q} has no {side:?} boundary history")))?
        .push(value);
        Ok(())
    }
}

/// `sum_{p=1}^{m} kernel[p] history[m-p]`, summed in increasing `p`.
pub fn convolve_tail(kernel: &[Complex64], history: &[Complex64], m: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 1..=m {
        acc += kernel[p] * history[m - p];
    }
    acc
}

/// Per-mode boundary states for all `q = 1..K-1`.
#[derive(Debug, Clone)]
pub struct TbcState {
    modes: Vec<ModeTbc>,
}

impl TbcState {
    pub fn new(coeffs: Vec<ModeCoefficients>, left: bool, right: bool, capacity: usize) -> Self {
        TbcState {
            modes: coeffs
                .into_iter()
                .map(|c| ModeTbc::new(c, left, right, capacity))
                .collect(),
        }
    }

    pub fn mode(&self, q: usize) -> &ModeTbc {
        &self.modes[q - 1]
    }

    pub fn mode_mut(&mut self, q: usize) -> &mut ModeTbc {
        &mut self.modes[q - 1]
    }

    pub fn modes(&self) -> &[ModeTbc] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [ModeTbc] {
        &mut self.modes
    }

    /// Kernel values `R_q^0..=R_q^up_to`.
    pub fn kernel_extend(&mut self, q: usize, up_to: usize) -> &[Complex64] {
        self.modes[q - 1].kernel.extend(up_to)
    }
}
