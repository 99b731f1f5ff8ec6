//! `solve`: run simulations, refinement studies, run comparisons and kernel
//! dumps from configuration files or built-in presets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strip_tbc::config::load_config;
use strip_tbc::diagnostics::{compare_snapshots, nesting_factors};
use strip_tbc::io::{self as sio, difference_to_csv, kernel_file_name, kernel_to_csv, resolve_output_dir};
use strip_tbc::sine_transform::{eigenvalues, TransformKind};
use strip_tbc::tbc_kernel::{mode_coefficients, Kernel};
use strip_tbc::{presets, refinement_study, Error, NormWeighting, StudyConfig};

type Result<T> = strip_tbc::Result<T>;

#[derive(Parser)]
#[command(name = "solve", version, about = "Numerov-Crank-Nicolson Schrödinger solver on a strip with transparent boundaries")]
#[command(after_help = "Configuration arguments accept a file path or `preset:<name>`.\n\
The output directory defaults to $SOLVE_OUTPUT_DIR when set.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write norms, snapshots and a summary.
    Run {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: hardware parallelism).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_parser = parse_transform)]
        transform: Option<TransformKind>,
    },
    /// Refinement study: writes one ratio table per direction.
    Convergence {
        study: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-level differences of two runs on nested meshes.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the boundary convolution kernel of selected modes.
    KernelDump {
        config: String,
        /// Comma-separated mode numbers, e.g. `1,32`.
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        #[arg(long)]
        mmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_transform(s: &str) -> std::result::Result<TransformKind, String> {
    s.parse()
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn stem(source: &str) -> String {
    match source.strip_prefix("preset:") {
        Some(name) => name.to_string(),
        None => Path::new(source)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into()),
    }
}

fn cmd_run(source: &str, out: Option<PathBuf>, threads: Option<usize>, transform: Option<TransformKind>) -> Result<()> {
    let mut config = load_config(source)?;
    if let Some(n) = threads {
        config.run.threads = n;
    }
    if let Some(t) = transform {
        config.run.transform = t;
    }
    let explicit = out.or_else(|| config.run.output_dir.clone());
    let dir = resolve_output_dir(explicit.as_deref(), &Path::new("runs").join(stem(source)));
    let report = strip_tbc::run(&config)?;
    let files = sio::write_run(&report, &dir)?;

    let n0 = report.initial_norm().l2;
    let last = report.norms.last().map_or(n0, |n| n.l2);
    println!(
        "levels {}  |Psi^0| = {n0:.6e}  |Psi^M| = {last:.6e} ({:.4} of initial)  max |Psi^m| / |Psi^0| - 1 = {:.2e}",
        report.norms.len(),
        last / n0,
        report.max_l2() / n0 - 1.0
    );
    if let Some(dev) = report.max_phase_deviation {
        println!("max phase modulus change {dev:.2e}");
    }
    let t = &report.timings;
    println!(
        "time {:.2}s (setup {:.2}s, phase {:.2}s, transform {:.2}s, solve {:.2}s, inverse {:.2}s)",
        t.total, t.setup, t.steps.phase, t.steps.transform, t.steps.solve, t.steps.inverse
    );
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn cmd_convergence(source: &str, out: Option<PathBuf>) -> Result<()> {
    let (study, base_dir) = match source.strip_prefix("preset:") {
        Some(name) => (presets::study_preset(name)?, None),
        None => {
            let path = Path::new(source);
            (StudyConfig::load(path)?, path.parent().map(Path::to_path_buf))
        }
    };
    let reference = study.reference_config(base_dir.as_deref())?;
    let relative = |p: &PathBuf| match &base_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.clone(),
    };
    let explicit = out.or_else(|| study.study.output_dir.as_ref().map(relative));
    let dir = resolve_output_dir(explicit.as_deref(), &Path::new("convergence").join(stem(source)));
    let cache = study.study.cache.as_ref().map(relative);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(study.study.threads)
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker threads: {e}")))?;
    let result = pool.install(|| refinement_study(&reference, &study.study.directions, study.study.levels, cache.as_deref()))?;

    create_dir(&dir)?;
    for run in &result.runs {
        let (j, k, m) = run.counts;
        let name = format!("difference_{}_l{}_{j}x{k}x{m}.csv", run.direction, run.level);
        write(&dir.join(name), &difference_to_csv(&run.series))?;
    }
    for table in &result.tables {
        write(&dir.join(format!("ratios_{}.csv", table.direction)), &table.to_csv())?;
        print!("{}", table.render());
    }
    println!("wrote {} tables to {}", result.tables.len(), dir.display());
    Ok(())
}

fn cmd_compare(run_a: &Path, run_b: &Path, out: Option<PathBuf>) -> Result<()> {
    let a = sio::read_run_snapshots(run_a)?;
    let b = sio::read_run_snapshots(run_b)?;
    let grid = |m: &std::collections::BTreeMap<usize, strip_tbc::WaveField>| *m.values().next().map(|f| f.grid()).unwrap();
    // The finer run is the reference; equal meshes compare A against B.
    let (reference, coarse, coarse_dir) = if nesting_factors(&grid(&a), &grid(&b)).is_ok() {
        (&a, &b, run_b)
    } else if nesting_factors(&grid(&b), &grid(&a)).is_ok() {
        (&b, &a, run_a)
    } else {
        return Err(Error::Config(format!(
            "{} and {} are not on nested meshes",
            run_a.display(),
            run_b.display()
        )));
    };
    let weighting = sio::read_run_config(coarse_dir).map_or(NormWeighting::default(), |c| c.run.norm);
    let series = compare_snapshots(reference, coarse, weighting)?;
    let dir = resolve_output_dir(out.as_deref(), Path::new("."));
    create_dir(&dir)?;
    let path = dir.join("compare.csv");
    write(&path, &difference_to_csv(&series))?;
    println!(
        "{} common levels  max E_C = {:.6e}  max E_L2 = {:.6e}",
        series.rows.len(),
        series.max_abs_c(),
        series.max_abs_l2()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_kernel_dump(source: &str, modes: &[usize], mmax: usize, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(source)?;
    let grid = config.grid_spec()?;
    let eig = eigenvalues(&grid);
    let dir = resolve_output_dir(out.as_deref(), &Path::new("kernels").join(stem(source)));
    create_dir(&dir)?;
    for &q in modes {
        let coeffs = mode_coefficients(q, &grid, &config.physics, &eig)?;
        let mut kernel = Kernel::new(&coeffs);
        write(&dir.join(kernel_file_name(q)), &kernel_to_csv(kernel.extend(mmax)))?;
    }
    println!("wrote {} kernels (m = 0..={mmax}) to {}", modes.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, threads, transform } => cmd_run(&config, out, threads, transform),
        Command::Convergence { study, out } => cmd_convergence(&study, out),
        Command::Compare { run_a, run_b, out } => cmd_compare(&run_a, &run_b, out),
        Command::KernelDump { config, modes, mmax, out } => cmd_kernel_dump(&config, &modes, mmax, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("solve: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
