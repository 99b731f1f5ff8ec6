//! Discrete sine transform in `y` and the spectra of the `y` operators.
//!
//! Forward: `Z^(q) = (2/K) sum_{k=1}^{K-1} Z_k sin(pi q k / K)` for
//! `1 <= q <= K-1`. Inverse: the unnormalized synthesis
//! `Z_k = sum_{q=1}^{K-1} Z^(q) sin(pi q k / K)`.
//!
//! Both directions share one DST-I kernel. With `K = 2^p` it is evaluated by a
//! complex FFT of length `2K` applied to the odd extension of the input; the
//! direct `O(K^2)` sum is the fallback for other `K` and the test oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridSpec;

/// Tolerance on `|Z_0|`, `|Z_K|` accepted by [`SineTransform::forward`].
pub const ENDPOINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    #[default]
    Fft,
    Direct,
}

impl TransformKind {
    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if *self == TransformKind::Fft && !grid.k_is_power_of_two() {
            return Err(Error::config(format!(
                "K = {} is not a power of two; the FFT sine transform needs K = 2^p, use the direct transform instead",
                grid.ny()
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fft" => Ok(TransformKind::Fft),
            "direct" => Ok(TransformKind::Direct),
            other => Err(format!("unknown transform '{other}', expected fft or direct")),
        }
    }
}

/// Precomputed plan for sine transforms of lines with `K + 1` nodes.
///
/// The plan is immutable and can be shared between threads; per-call buffers
/// live in a [`DstScratch`].
#[derive(Clone)]
pub struct SineTransform {
    k: usize,
    kind: TransformKind,
    fft: Option<Arc<dyn Fft<f64>>>,
    // sin(pi * n / K) for n = 0..2K, only for the direct path.
    sin_table: Vec<f64>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform")
            .field("k", &self.k)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Work buffers for one thread.
#[derive(Debug, Default)]
pub struct DstScratch {
    buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
    staged: Vec<Complex64>,
}

impl SineTransform {
    pub fn new(k: usize, kind: TransformKind) -> Result<Self> {
        if k < 2 {
            return Err(Error::config(format!("sine transform needs K >= 2, got {k}")));
        }
        let (fft, sin_table) = match kind {
            TransformKind::Fft => {
                if !k.is_power_of_two() {
                    return Err(Error::config(format!(
                        "K = {k} is not a power of two; the FFT sine transform needs K = 2^p, use the direct transform instead"
                    )));
                }
                let mut planner = FftPlanner::new();
                (Some(planner.plan_fft_forward(2 * k)), Vec::new())
            }
            TransformKind::Direct => (None, (0..2 * k).map(|n| (PI * n as f64 / k as f64).sin()).collect()),
        };
        Ok(SineTransform { k, kind, fft, sin_table })
    }

    pub fn for_grid(grid: &GridSpec, kind: TransformKind) -> Result<Self> {
        Self::new(grid.ny(), kind)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn make_scratch(&self) -> DstScratch {
        let len = self.fft.as_ref().map_or(0, |f| f.get_inplace_scratch_len());
        DstScratch {
            buf: vec![Complex64::new(0.0, 0.0); 2 * self.k],
            fft_scratch: vec![Complex64::new(0.0, 0.0); len],
            staged: vec![Complex64::new(0.0, 0.0); self.k + 1],
        }
    }

    /// `out[q-1] = sum_{k=1}^{K-1} input[k] sin(pi q k / K)`, `q = 1..K-1`.
    /// `input` has length `K + 1`; its endpoints are ignored.
    fn dst1(&self, input: &[Complex64], out: &mut [Complex64], scratch: &mut DstScratch) {
        let k = self.k;
        debug_assert_eq!(input.len(), k + 1);
        debug_assert_eq!(out.len(), k - 1);
        match &self.fft {
            Some(fft) => {
                // Odd extension y_n = Z_n, y_{2K-n} = -Z_n. Its DFT is
                // Y_q = -2i S_q with S the sine sum.
                let buf = &mut scratch.buf;
                buf.resize(2 * k, Complex64::new(0.0, 0.0));
                buf[0] = Complex64::new(0.0, 0.0);
                buf[k] = Complex64::new(0.0, 0.0);
                for n in 1..k {
                    buf[n] = input[n];
                    buf[2 * k - n] = -input[n];
                }
                fft.process_with_scratch(buf, &mut scratch.fft_scratch);
                for q in 1..k {
                    let y = buf[q];
                    out[q - 1] = Complex64::new(-0.5 * y.im, 0.5 * y.re);
                }
            }
            None => {
                let two_k = 2 * k;
                for q in 1..k {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (n, z) in input.iter().enumerate().take(k).skip(1) {
                        acc += z * self.sin_table[(q * n) % two_k];
                    }
                    out[q - 1] = acc;
                }
            }
        }
    }

    /// Forward transform of a line `Z_0..Z_K` into `K - 1` coefficients
    /// (`out[q-1]` holds mode `q`).
    pub fn forward(&self, line: &[Complex64], out: &mut [Complex64], scratch: &mut DstScratch) -> Result<()> {
        let k = self.k;
        if line.len() != k + 1 || out.len() != k - 1 {
            return Err(Error::internal(format!(
                "forward sine transform: line {} / coefficients {} for K = {k}",
                line.len(),
                out.len()
            )));
        }
        let (first, last) = (line[0].norm(), line[k].norm());
        if first > ENDPOINT_TOLERANCE || last > ENDPOINT_TOLERANCE {
            return Err(Error::Boundary(format!(
                "line endpoints must vanish for the sine transform, got |Z_0| = {first:e}, |Z_K| = {last:e}"
            )));
        }
        self.dst1(line, out, scratch);
        let scale = 2.0 / k as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }

    /// Inverse transform of `K - 1` coefficients into a line `Z_0..Z_K` with
    /// exactly zero endpoints.
    pub fn inverse(&self, coeffs: &[Complex64], out: &mut [Complex64], scratch: &mut DstScratch) -> Result<()> {
        let k = self.k;
        if coeffs.len() != k - 1 || out.len() != k + 1 {
            return Err(Error::internal(format!(
                "inverse sine transform: coefficients {} / line {} for K = {k}",
                coeffs.len(),
                out.len()
            )));
        }
        // The kernel reads input[1..K]; shift the coefficients by one slot.
        let mut staged = std::mem::take(&mut scratch.staged);
        staged.clear();
        staged.resize(k + 1, Complex64::new(0.0, 0.0));
        staged[1..k].copy_from_slice(coeffs);
        let (zero, body) = out.split_at_mut(1);
        let (body, end) = body.split_at_mut(k - 1);
        self.dst1(&staged, body, scratch);
        scratch.staged = staged;
        zero[0] = Complex64::new(0.0, 0.0);
        end[0] = Complex64::new(0.0, 0.0);
        Ok(())
    }
}

/// Convenience forward transform; picks the FFT path when `K` is a power of
/// two.
pub fn dst_forward(line: &[Complex64]) -> Result<Vec<Complex64>> {
    let k = line.len().saturating_sub(1);
    let t = SineTransform::new(k, auto_kind(k))?;
    let mut out = vec![Complex64::new(0.0, 0.0); k - 1];
    t.forward(line, &mut out, &mut t.make_scratch())?;
    Ok(out)
}

/// Convenience inverse transform; picks the FFT path when `K` is a power of
/// two.
pub fn dst_inverse(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let k = coeffs.len() + 1;
    let t = SineTransform::new(k, auto_kind(k))?;
    let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
    t.inverse(coeffs, &mut out, &mut t.make_scratch())?;
    Ok(out)
}

fn auto_kind(k: usize) -> TransformKind {
    if k.is_power_of_two() {
        TransformKind::Fft
    } else {
        TransformKind::Direct
    }
}

/// Eigenvalues of `-d_y d̄_y` (`lambda_q`) and of the Numerov average in `y`
/// (`sigma_q`) on the sine modes, `q = 1..K-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEigenvalues {
    lambda: Vec<f64>,
    sigma: Vec<f64>,
}

impl ModeEigenvalues {
    pub fn mode_count(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self, q: usize) -> f64 {
        self.lambda[q - 1]
    }

    pub fn sigma(&self, q: usize) -> f64 {
        self.sigma[q - 1]
    }
}

pub fn eigenvalues(grid: &GridSpec) -> ModeEigenvalues {
    let (k, hy, y_len) = (grid.ny(), grid.hy(), grid.y_len());
    let mut lambda = Vec::with_capacity(k - 1);
    let mut sigma = Vec::with_capacity(k - 1);
    for q in 1..k {
        let s = (PI * q as f64 * hy / (2.0 * y_len)).sin();
        let l = (2.0 / hy * s).powi(2);
        lambda.push(l);
        sigma.push(1.0 - s * s / 3.0);
    }
    ModeEigenvalues { lambda, sigma }
}

/// Weight `sigma_q [1 + (h_x h_y lambda_q / (12 sigma_q))^2]` of mode `q` in
/// the operator form of the boundary condition.
pub fn numerov_weight(grid: &GridSpec, eig: &ModeEigenvalues, q: usize) -> f64 {
    let (l, s) = (eig.lambda(q), eig.sigma(q));
    let r = grid.hx() * grid.hy() * l / (12.0 * s);
    s * (1.0 + r * r)
}
