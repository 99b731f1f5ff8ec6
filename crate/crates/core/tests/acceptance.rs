//! Acceptance criteria, each run at its stated tolerance. Prints one
//! `PASS`/`FAIL` line per criterion and exits nonzero if any fails.
//!
//! The convergence tier (criterion 5) takes minutes; set
//! `ACCEPTANCE_SKIP_SLOW=1` to leave it out during development.

mod common;

use std::time::Instant;

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strip_tbc::diagnostics::field_difference;
use strip_tbc::mesh::NormWeighting;
use strip_tbc::physics::{gaussian_packet, MeshPotential, PhysicsParams, PotentialSpec};
use strip_tbc::sine_transform::{eigenvalues, SineTransform, TransformKind};
use strip_tbc::stepper::{solve_tridiagonal, ModeSystem, Problem, SimulationState};
use strip_tbc::tbc_kernel::{all_mode_coefficients, convolve_tail, mode_coefficients, Kernel};
use strip_tbc::{presets, refinement_study, Direction, Geometry, GridSpec, RunConfig, WaveField};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

fn relative_l2_drift(config: &RunConfig) -> Result<f64, String> {
    let report = strip_tbc::run(config).map_err(fail)?;
    let n0 = report.initial_norm().l2;
    Ok(report.norms.iter().map(|n| (n.l2 / n0 - 1.0).abs()).fold(0.0, f64::max))
}

fn closed_box_mass() -> Outcome {
    let mut config = presets::example_a().with_counts(200, 32, 500);
    config.run.geometry = Geometry::ClosedBox;
    let drift = relative_l2_drift(&config)?;
    check(drift <= 1e-10, format!("max relative L2 drift {drift:.2e} (limit 1e-10)"))
}

fn free_state(grid: GridSpec, geometry: Geometry) -> Result<SimulationState, String> {
    let packet = presets::example_a().packet;
    let problem = Problem::new(
        grid,
        PhysicsParams::default(),
        geometry,
        TransformKind::Fft,
        MeshPotential::zeros(grid),
    );
    SimulationState::new(problem, gaussian_packet(&packet, &grid, geometry)).map_err(fail)
}

fn tbc_exactness() -> Outcome {
    let small = GridSpec::new(4.0, 4.2, 0.05, 400, 64, 400).map_err(fail)?;
    let large = GridSpec::new(8.0, 4.2, 0.05, 800, 64, 400).map_err(fail)?;
    let mut open = free_state(small, Geometry::SemiInfinite)?;
    let mut closed = free_state(large, Geometry::ClosedBox)?;
    let j = small.nx();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 1..=small.nt() {
        open.step().map_err(fail)?;
        closed.step().map_err(fail)?;
        let edge = (2 * j - 2..=2 * j)
            .flat_map(|c| closed.psi().column(c).iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if edge > 1e-10 {
            break;
        }
        let cut = WaveField::from_values(small, closed.psi().values()[..small.node_count()].to_vec()).map_err(fail)?;
        let d = field_difference(&cut, open.psi(), NormWeighting::Interior).map_err(fail)?;
        worst = worst.max(d.rel_l2().unwrap_or(d.abs_l2));
        checked += 1;
    }
    check(
        worst <= 1e-8 && checked > 0,
        format!("max relative L2 difference {worst:.2e} over {checked} levels (limit 1e-8)"),
    )
}

fn stability(report: &strip_tbc::RunReport) -> Outcome {
    let n0 = report.initial_norm().l2;
    let ratio = report.max_l2() / n0;
    check(
        ratio <= 1.0 + 1e-8,
        format!("max_m |Psi^m| / |Psi^0| - 1 = {:.2e} (limit 1e-8)", ratio - 1.0),
    )
}

fn kernel_properties() -> Outcome {
    let mut violations = Vec::new();
    let mut modes = 0;
    for config in [presets::example_a(), presets::example_b()] {
        let g = config.grid_spec().map_err(fail)?;
        for c in all_mode_coefficients(&g, &config.physics, &eigenvalues(&g)).map_err(fail)? {
            modes += 1;
            let ok = c.c1_q.im >= 0.0
                && (c.kappa_q.norm() - 1.0).abs() <= 1e-14
                && c.mu_q > -1.0
                && c.mu_q < 1.0
                && c.sigma_q > 2.0 / 3.0
                && c.sigma_q < 1.0
                && c.theta_q > 1.0 / 12.0
                && c.theta_q < 0.125;
            if !ok {
                violations.push(c.q);
            }
        }
    }
    check(violations.is_empty(), format!("{modes} modes checked, violations at q = {violations:?}"))
}

fn random_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut dst: f64 = 0.0;
    for k in [2usize, 4, 8, 16, 32] {
        let fft = SineTransform::new(k, TransformKind::Fft).map_err(fail)?;
        let direct = SineTransform::new(k, TransformKind::Direct).map_err(fail)?;
        let (mut s1, mut s2) = (fft.make_scratch(), direct.make_scratch());
        for _ in 0..50 {
            let mut z: Vec<Complex64> = (0..=k).map(|_| random_c(&mut rng)).collect();
            z[0] = ZERO;
            z[k] = ZERO;
            let (mut a, mut b) = (vec![ZERO; k - 1], vec![ZERO; k - 1]);
            fft.forward(&z, &mut a, &mut s1).map_err(fail)?;
            direct.forward(&z, &mut b, &mut s2).map_err(fail)?;
            let scale = max_norm(&naive_forward(&z));
            dst = dst.max(max_diff(&a, &b) / scale);
        }
    }

    let mut tri: f64 = 0.0;
    for n in 1..=16 {
        for _ in 0..20 {
            let mut lower: Vec<Complex64> = (0..n).map(|_| random_c(&mut rng)).collect();
            let mut upper: Vec<Complex64> = (0..n).map(|_| random_c(&mut rng)).collect();
            lower[0] = ZERO;
            upper[n - 1] = ZERO;
            let diag = (0..n).map(|_| random_c(&mut rng) + Complex64::new(0.0, 3.0)).collect();
            let rhs = (0..n).map(|_| random_c(&mut rng)).collect();
            let sys = ModeSystem { q: 1, level: 1, first_j: 0, lower, diag, upper, rhs };
            let x = solve_tridiagonal(&sys).map_err(fail)?;
            let y = dense_solve(densify(&sys.lower, &sys.diag, &sys.upper), sys.rhs.clone());
            tri = tri.max(max_diff(&x, &y) / max_norm(&y));
        }
    }

    let mut conv: f64 = 0.0;
    for m in [1usize, 2, 7, 100, 1000] {
        let kernel: Vec<Complex64> = (0..=m).map(|_| random_c(&mut rng)).collect();
        let history: Vec<Complex64> = (0..m).map(|_| random_c(&mut rng)).collect();
        let got = convolve_tail(&kernel, &history, m);
        let exact = brute_convolution(&kernel, &history, m);
        let scale: f64 = (1..=m).map(|p| (kernel[p] * history[m - p]).norm()).sum();
        conv = conv.max((got - exact).norm() / scale);
    }

    let mut kern: f64 = 0.0;
    let fixtures: Vec<KernelFixture> = load("kernel_recurrence.json");
    for f in fixtures {
        let g = grid(&f.grid);
        let co = mode_coefficients(f.q, &g, &PhysicsParams::default(), &eigenvalues(&g)).map_err(fail)?;
        let exact: Vec<Complex64> = f.values.iter().map(|v| c(*v)).collect();
        let (normwise, elementwise) = kernel_errors(Kernel::new(&co).extend(f.m_max), &exact);
        kern = kern.max(normwise).max(elementwise);
    }

    check(
        dst <= 1e-12 && tri <= 1e-12 && conv <= 1e-14 && kern <= 1e-10,
        format!("dst {dst:.1e} (1e-12), tridiagonal {tri:.1e} (1e-12), convolution {conv:.1e} (1e-14), kernel {kern:.1e} (1e-10)"),
    )
}

fn band(values: &[f64], lo: f64, hi: f64) -> bool {
    !values.is_empty() && values.iter().all(|v| (lo..=hi).contains(v))
}

fn convergence_orders() -> Outcome {
    let mut ratios = Vec::new();
    let mut pass = true;
    let bands = [
        ("example_a_desk", Direction::T, 3.5, 5.5),
        ("example_a_desk", Direction::X, 13.0, 18.0),
        ("example_b_desk", Direction::X, 3.8, 6.0),
    ];
    let mut studies = std::collections::BTreeMap::new();
    for (name, direction, lo, hi) in bands {
        if !studies.contains_key(name) {
            let study = presets::study_preset(name).map_err(fail)?;
            let reference = study.reference_config(None).map_err(fail)?;
            let result = refinement_study(&reference, &study.study.directions, study.study.levels, None).map_err(fail)?;
            studies.insert(name, result);
        }
        let table = studies[name].tables.iter().find(|t| t.direction == direction).ok_or("missing table")?;
        let r: Vec<f64> = table.rows.iter().filter_map(|row| row.r_c).collect();
        pass &= band(&r, lo, hi);
        let shown: Vec<String> = r.iter().map(|v| format!("{v:.2}")).collect();
        ratios.push(format!("{name} {direction} R_C [{}] in [{lo}, {hi}]", shown.join(", ")));
    }
    check(pass, ratios.join("; "))
}

fn lockstep_max_c(a: &mut SimulationState, b: &mut SimulationState, fx: usize) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for _ in 1..=a.grid().nt() {
        a.step().map_err(fail)?;
        b.step().map_err(fail)?;
        let fine = b.psi().restrict(fx, 1).map_err(fail)?;
        let d = field_difference(&fine, a.psi(), NormWeighting::Interior).map_err(fail)?;
        worst = worst.max(d.abs_c);
    }
    Ok(worst)
}

fn state_of(config: &RunConfig) -> Result<SimulationState, String> {
    let problem = config.problem().map_err(fail)?;
    SimulationState::new(problem, config.initial_field().map_err(fail)?).map_err(fail)
}

fn averaged_potential() -> Outcome {
    let averaged = presets::example_b().with_counts(600, 64, 600);
    let mut pointwise = averaged.clone();
    match &mut pointwise.potential {
        PotentialSpec::Rectangular { averaged, .. } => *averaged = false,
        other => return Err(format!("example_b potential is {other:?}")),
    }
    let fine = averaged.with_counts(1200, 64, 600);
    let variant = lockstep_max_c(&mut state_of(&averaged)?, &mut state_of(&pointwise)?, 1)?;
    let refinement = lockstep_max_c(&mut state_of(&averaged)?, &mut state_of(&fine)?, 2)?;
    check(
        variant > 0.0 && variant >= 10.0 * refinement,
        format!(
            "E_C(averaged vs pointwise) {variant:.3e}, E_C(J 600 vs 1200) {refinement:.3e}, factor {:.1} (limit 10)",
            variant / refinement
        ),
    )
}

fn unitarity(reports: &[&strip_tbc::RunReport]) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in reports {
        worst = worst.max(r.max_phase_deviation.ok_or("unitarity was not tracked")?);
    }
    check(worst <= 1e-15, format!("max relative modulus change {worst:.2e} (limit 1e-15)"))
}

fn tracked_run(mut config: RunConfig) -> Result<strip_tbc::RunReport, String> {
    config.run.check_unitarity = true;
    strip_tbc::run(&config).map_err(fail)
}

fn main() {
    let skip_slow = std::env::var_os("ACCEPTANCE_SKIP_SLOW").is_some_and(|v| v != "0");
    let report_a = tracked_run(presets::example_a());
    let report_b = tracked_run(presets::example_b());

    let mut criteria: Vec<Criterion> = vec![
        ("1 closed-box mass conservation", Box::new(closed_box_mass)),
        ("2 TBC exactness", Box::new(tbc_exactness)),
        (
            "3 stability bound",
            Box::new(|| stability(report_a.as_ref().map_err(Clone::clone)?)),
        ),
        ("4 kernel properties", Box::new(kernel_properties)),
        ("5 convergence orders", Box::new(convergence_orders)),
        ("6 oracle equivalences", Box::new(oracle_equivalences)),
        ("7 averaged-potential effect", Box::new(averaged_potential)),
        (
            "8 phase-step unitarity",
            Box::new(|| {
                let a = report_a.as_ref().map_err(Clone::clone)?;
                let b = report_b.as_ref().map_err(Clone::clone)?;
                unitarity(&[a, b])
            }),
        ),
    ];
    if skip_slow {
        criteria.retain(|(name, _)| !name.starts_with('5'));
        println!("criterion 5 convergence orders: NOT RUN (ACCEPTANCE_SKIP_SLOW set)");
    }

    let mut failed = 0;
    for (name, criterion) in &criteria {
        let start = Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS  {detail}  [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL  {detail}  [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
