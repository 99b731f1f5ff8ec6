//! Property tests: invariants of the mesh, transform, kernel, solver and
//! phase steps, each against an independent oracle or closed form.

mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use strip_tbc::diagnostics::reference_ratio;
use strip_tbc::mesh::NormWeighting;
use strip_tbc::physics::{MeshPotential, PhysicsParams};
use strip_tbc::sine_transform::{eigenvalues, DstScratch, SineTransform, TransformKind};
use strip_tbc::stepper::{phase_halfstep, solve_tridiagonal, ModeSystem, PhaseMultiplier};
use strip_tbc::tbc_kernel::{all_mode_coefficients, convolve_tail, Kernel, ModeCoefficients};
use strip_tbc::{GridSpec, WaveField};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn line(k: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), k - 1).prop_map(|inner| {
        let mut v = vec![Complex64::new(0.0, 0.0)];
        v.extend(inner);
        v.push(Complex64::new(0.0, 0.0));
        v
    })
}

fn transform(kind: TransformKind, k: usize) -> (SineTransform, DstScratch) {
    let t = SineTransform::new(k, kind).unwrap();
    let s = t.make_scratch();
    (t, s)
}

proptest! {
    #[test]
    fn fft_and_direct_transforms_agree(z in (1u32..=5).prop_flat_map(|p| line(1usize << p))) {
        let k = z.len() - 1;
        let (fft, mut s1) = transform(TransformKind::Fft, k);
        let (direct, mut s2) = transform(TransformKind::Direct, k);
        let mut a = vec![Complex64::new(0.0, 0.0); k - 1];
        let mut b = a.clone();
        fft.forward(&z, &mut a, &mut s1).unwrap();
        direct.forward(&z, &mut b, &mut s2).unwrap();
        let oracle = naive_forward(&z);
        let scale = max_norm(&oracle).max(1e-300);
        prop_assert!(max_diff(&a, &b) <= 1e-12 * scale);
        prop_assert!(max_diff(&b, &oracle) <= 1e-12 * scale);

        let mut back_fft = vec![Complex64::new(0.0, 0.0); k + 1];
        let mut back_direct = back_fft.clone();
        fft.inverse(&a, &mut back_fft, &mut s1).unwrap();
        direct.inverse(&b, &mut back_direct, &mut s2).unwrap();
        let zs = max_norm(&z).max(1e-300);
        prop_assert!(max_diff(&back_fft, &z) <= 1e-12 * zs);
        prop_assert!(max_diff(&back_direct, &z) <= 1e-12 * zs);
        prop_assert_eq!(back_fft[0], Complex64::new(0.0, 0.0));
        prop_assert_eq!(back_fft[k], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn direct_transform_round_trip_any_k(k in 2usize..40, z in prop::collection::vec(complex(), 40)) {
        let mut l = vec![Complex64::new(0.0, 0.0); k + 1];
        l[1..k].copy_from_slice(&z[..k - 1]);
        let (t, mut s) = transform(TransformKind::Direct, k);
        let mut c = vec![Complex64::new(0.0, 0.0); k - 1];
        t.forward(&l, &mut c, &mut s).unwrap();
        let mut back = vec![Complex64::new(0.0, 0.0); k + 1];
        t.inverse(&c, &mut back, &mut s).unwrap();
        prop_assert!(max_diff(&back, &l) <= 1e-12 * max_norm(&l).max(1e-300));
    }
}

fn tridiagonal_system() -> impl Strategy<Value = ModeSystem> {
    (1usize..=16).prop_flat_map(|n| {
        (
            prop::collection::vec(complex(), n),
            prop::collection::vec(complex(), n),
            prop::collection::vec(complex(), n),
            prop::collection::vec(complex(), n),
            prop::collection::vec(0.5f64..4.0, n),
        )
            .prop_map(move |(mut lower, diag, mut upper, rhs, boost)| {
                lower[0] = Complex64::new(0.0, 0.0);
                upper[n - 1] = Complex64::new(0.0, 0.0);
                // Off-diagonal sum <= 2 < 2.5 <= |diag|: nonsingular.
                let diag = diag
                    .iter()
                    .zip(&boost)
                    .map(|(d, s)| Complex64::new(d.re, 2.5 + s))
                    .collect();
                ModeSystem { q: 1, level: 1, first_j: 0, lower, diag, upper, rhs }
            })
    })
}

proptest! {
    #[test]
    fn tridiagonal_matches_dense_elimination(sys in tridiagonal_system()) {
        let x = solve_tridiagonal(&sys).unwrap();
        let y = dense_solve(densify(&sys.lower, &sys.diag, &sys.upper), sys.rhs.clone());
        let scale = max_norm(&y).max(1e-300);
        prop_assert!(max_diff(&x, &y) <= 1e-12 * scale);
    }

    #[test]
    fn convolution_matches_polynomial_product(
        kernel in prop::collection::vec(complex(), 1..200),
        history in prop::collection::vec(complex(), 200),
    ) {
        let m = kernel.len() - 1;
        let h = &history[..m.max(1)];
        let got = convolve_tail(&kernel, h, m);
        let exact = brute_convolution(&kernel, h, m);
        let scale: f64 = (1..=m).map(|p| (kernel[p] * h[m - p]).norm()).sum::<f64>().max(1e-300);
        prop_assert!((got - exact).norm() <= 1e-14 * scale);
    }

    #[test]
    fn kernel_squares_to_quadratic(arg in 0.01f64..6.27, mu in -0.99f64..0.99, mag in 0.1f64..200.0) {
        // R(z) = c1 sqrt(1 - 2 mu kappa z + kappa^2 z^2) gives
        // (R * R)^m = c1^2 (1, -2 mu kappa, kappa^2, 0, 0, ...).
        let kappa = -Complex64::from_polar(1.0, arg);
        let c1 = -Complex64::from_polar(mag, -arg / 2.0);
        let coeffs = ModeCoefficients {
            q: 1, lambda_q: 0.0, sigma_q: 1.0, c_hbar_q: 1.0, theta_q: 1.0 / 12.0, v_inf_q: 0.0,
            a_q: Complex64::new(0.0, 0.0), alpha_q: Complex64::new(0.0, 0.0), beta_q: 0.0,
            c1_q: c1, kappa_q: kappa, mu_q: mu,
        };
        let mut k = Kernel::new(&coeffs);
        let r = k.extend(60).to_vec();
        let c2 = c1 * c1;
        let expect = |m: usize| match m {
            0 => c2,
            1 => -2.0 * mu * kappa * c2,
            2 => kappa * kappa * c2,
            _ => Complex64::new(0.0, 0.0),
        };
        for m in 0..=60 {
            let mut s = Complex64::new(0.0, 0.0);
            for p in 0..=m { s += r[p] * r[m - p]; }
            prop_assert!((s - expect(m)).norm() <= 1e-12 * c2.norm() * (m as f64 + 1.0), "m={}", m);
        }
    }

    #[test]
    fn coefficient_ranges_on_random_grids(
        x_len in 0.5f64..10.0, y_len in 0.5f64..10.0, t_end in 0.001f64..1.0,
        nx in 4usize..2000, p in 1u32..9, nt in 1usize..5000,
        hbar in 0.2f64..5.0, c_hbar in 0.2f64..5.0, v_inf in -50.0f64..50.0,
    ) {
        let g = GridSpec::new(x_len, y_len, t_end, nx, 1 << p, nt).unwrap();
        let phys = PhysicsParams { hbar, c_hbar, v_inf };
        for c in all_mode_coefficients(&g, &phys, &eigenvalues(&g)).unwrap() {
            prop_assert!(c.c1_q.im >= 0.0);
            prop_assert!((c.kappa_q.norm() - 1.0).abs() <= 1e-14);
            prop_assert!(c.mu_q > -1.0 && c.mu_q < 1.0);
            prop_assert!(c.sigma_q > 2.0 / 3.0 && c.sigma_q < 1.0);
            prop_assert!(c.theta_q > 1.0 / 12.0 && c.theta_q < 0.125);
        }
    }

    #[test]
    fn phase_step_preserves_modulus(
        dv in prop::collection::vec(-5000.0f64..5000.0, 9 * 9),
        z in prop::collection::vec(complex(), 9 * 9),
        tau in 1e-6f64..1e-1,
        hbar in 0.1f64..10.0,
    ) {
        let g = GridSpec::new(1.0, 1.0, tau, 8, 8, 1).unwrap();
        let pot = MeshPotential::from_fn(g, |j, k| dv[j * 9 + k]);
        let e = PhaseMultiplier::new(&pot, g.tau(), hbar);
        let mut f = WaveField::from_values(g, z).unwrap();
        f.enforce_boundary(strip_tbc::Geometry::ClosedBox);
        let dev = phase_halfstep(&mut f, &e, (1, 7), true);
        prop_assert!(dev <= 1e-15, "{}", dev);
    }

    #[test]
    fn restriction_picks_nested_nodes(nx in 1usize..20, ny in 1usize..20, px in 0u32..4, py in 0u32..4) {
        let (nx, ny) = (nx + 1, ny + 1);
        let (fx, fy) = (1usize << px, 1usize << py);
        let fine = GridSpec::new(3.0, 2.8, 1.0, nx * fx, ny * fy, 1).unwrap();
        let coarse = GridSpec::new(3.0, 2.8, 1.0, nx, ny, 1).unwrap();
        let f = |x: f64, y: f64| Complex64::new(x.sin() * y, x - y * y);
        let restricted = WaveField::from_fn(fine, f).restrict(fx, fy).unwrap();
        prop_assert_eq!(restricted, WaveField::from_fn(coarse, f));
    }

    #[test]
    fn norms_scale_linearly(z in prop::collection::vec(complex(), 7 * 5), s in complex()) {
        let g = GridSpec::new(1.3, 0.7, 1.0, 6, 4, 1).unwrap();
        let f = WaveField::from_values(g, z.clone()).unwrap();
        let scaled = WaveField::from_values(g, z.iter().map(|v| v * s).collect()).unwrap();
        for w in [NormWeighting::Interior, NormWeighting::HalfRight] {
            let (a, b) = (scaled.norm_l2(w), f.norm_l2(w) * s.norm());
            prop_assert!((a - b).abs() <= 1e-14 * b.max(1e-300));
        }
        prop_assert!((scaled.norm_c() - f.norm_c() * s.norm()).abs() <= 1e-14 * f.norm_c().max(1e-300));
    }
}

#[test]
fn reference_ratio_decreases_to_power_of_two() {
    for order in 1..=4 {
        let a = f64::from(order);
        let limit = 2f64.powf(a);
        let mut prev = f64::INFINITY;
        for l in 1..=10 {
            let r = reference_ratio(a, l);
            assert!(r < prev && r > limit, "order {order} l {l}: {r}");
            prev = r;
        }
        assert!(prev - limit < limit * 2f64.powf(-10.0 * a) * 2.0);
    }
}

#[test]
fn thread_count_does_not_change_the_result() {
    let mut results = Vec::new();
    for threads in [1, 3] {
        let mut cfg = strip_tbc::presets::example_a().with_counts(100, 16, 30);
        cfg.run.threads = threads;
        results.push(strip_tbc::run(&cfg).unwrap());
    }
    assert_eq!(results[0].final_field, results[1].final_field);
    let bits = |r: &strip_tbc::RunReport| r.norms.iter().map(|n| n.l2.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&results[0]), bits(&results[1]));
}
