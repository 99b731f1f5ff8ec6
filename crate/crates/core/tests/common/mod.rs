//! Independent oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use num_complex::Complex64;
use serde::Deserialize;
use strip_tbc::GridSpec;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Forward sine sum straight from its definition, O(K^2).
pub fn naive_forward(z: &[Complex64]) -> Vec<Complex64> {
    let k = z.len() - 1;
    (1..k)
        .map(|q| {
            let mut acc = ZERO;
            for (j, v) in z.iter().enumerate() {
                acc += v * (std::f64::consts::PI * (q * j) as f64 / k as f64).sin();
            }
            acc * (2.0 / k as f64)
        })
        .collect()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (dst, v) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *dst -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![ZERO; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Dense matrix of a tridiagonal system.
pub fn densify(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = diag.len();
    let mut dense = vec![vec![ZERO; n]; n];
    for i in 0..n {
        dense[i][i] = diag[i];
        if i > 0 {
            dense[i][i - 1] = lower[i];
        }
        if i + 1 < n {
            dense[i][i + 1] = upper[i];
        }
    }
    dense
}

/// Coefficient `m` of `kernel(z) * history(z)` with the history entry at
/// index `m` taken as zero, summed over the history index.
pub fn brute_convolution(kernel: &[Complex64], history: &[Complex64], m: usize) -> Complex64 {
    let mut exact = ZERO;
    for (i, hv) in history.iter().enumerate().take(m) {
        exact += hv * kernel[m - i];
    }
    exact
}

/// Node counts and extents of the two experiment grids.
pub fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

pub fn grid(name: &str) -> GridSpec {
    match name {
        "example_a" => GridSpec::new(4.0, 4.2, 0.05, 400, 64, 1000).unwrap(),
        "example_b" => GridSpec::new(3.0, 2.8, 0.027, 300, 64, 600).unwrap(),
        other => panic!("unknown grid {other}"),
    }
}

pub fn load<T: for<'de> Deserialize<'de>>(name: &str) -> T {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[derive(Deserialize)]
pub struct KernelFixture {
    pub grid: String,
    pub q: usize,
    pub m_max: usize,
    pub values: Vec<[f64; 2]>,
}

/// Relative error of the whole sequence, `max |R - R*| / max |R*|`, plus the
/// elementwise relative error on entries not close to a zero crossing of the
/// oscillating kernel.
pub fn kernel_errors(got: &[Complex64], exact: &[Complex64]) -> (f64, f64) {
    let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut normwise: f64 = 0.0;
    let mut elementwise: f64 = 0.0;
    for (a, b) in got.iter().zip(exact) {
        normwise = normwise.max((a - b).norm() / scale);
        if b.norm() >= 1e-6 * scale {
            elementwise = elementwise.max((a - b).norm() / b.norm());
        }
    }
    (normwise, elementwise)
}

