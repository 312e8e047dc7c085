//! Command-line front end: matrix ingestion, mode selection, report emission.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eigenpower::eigensolve::{
    convergence_bound, krylov_few_eigenvalues, quantum_estimate_max, quantum_estimate_min,
    quantum_estimate_shifted, EigenReport, EstimateOptions,
};
use eigenpower::error::{Error, ErrorClass};
use eigenpower::fixtures::{generate_fixture, FixtureKind};
use eigenpower::linalg::{
    eigendecompose, read_matrix_file, validate_hermitian, write_matrix_file, HermitianMatrix,
};
use eigenpower::powerpipe::{draw_initial_vector, Backend, PipelineConfig, Variant};
use eigenpower::qpe::{ClockWindow, PhaseConfig};
use eigenpower::rng::derive_seed;

mod sweep;

const HERMITICITY_TOL: f64 = 1e-9;
/// Headroom applied when the spectral bound is derived from the oracle.
const BOUND_HEADROOM: f64 = 1.05;

#[derive(Parser)]
#[command(
    name = "eigenpower",
    about = "Largest-eigenvalue estimation by quantum power iteration",
    after_help = "Exit codes: 0 ok, 2 i/o, 3 validation, 4 numeric, 5 shot noise.\n\
                  EIGENPOWER_QUBIT_CAP overrides the statevector qubit cap (default 26)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimation and write an EigenReport JSON.
    Run(RunArgs),
    /// Generate a deterministic matrix fixture file.
    Fixture(FixtureArgs),
    /// Run an estimation per axis value and emit a CSV table.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Max,
    Min,
    Shift,
    Krylov,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Naive,
    Improved,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Circuit,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Sine,
    Uniform,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Matrix file: {"n": int, "entries": [[re, im], ...]} row-major.
    #[arg(long)]
    matrix: PathBuf,

    #[arg(long, value_enum, default_value = "max")]
    mode: ModeArg,

    /// Iteration count; derived from the convergence bound when omitted.
    #[arg(long)]
    k: Option<usize>,

    /// Multiplicative error target for the k selection and bound report.
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,

    /// Rotation constant; defaults to 1/D.
    #[arg(long = "C")]
    c_rotation: Option<f64>,

    /// Spectral bound with |lambda| < D; derived from the oracle when omitted.
    #[arg(long = "D")]
    d_bound: Option<f64>,

    /// Phase-register width.
    #[arg(long = "bits", default_value_t = 6)]
    bits: usize,

    /// Per-clock-step evolution time; defaults to pi/D.
    #[arg(long)]
    t0: Option<f64>,

    /// 0 runs exact overlaps; otherwise Hadamard-test shots per basis.
    #[arg(long, default_value_t = 0)]
    shots: u64,

    #[arg(long, value_enum, default_value = "improved")]
    variant: VariantArg,

    #[arg(long, value_enum, default_value = "analytic")]
    backend: BackendArg,

    /// Clock window: sine is the reference construction; uniform reads
    /// grid-aligned spectra exactly.
    #[arg(long, value_enum, default_value = "sine")]
    window: WindowArg,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Number of eigenvalues for krylov mode.
    #[arg(long = "m")]
    krylov_m: Option<usize>,

    /// Shift constant for shift mode.
    #[arg(long = "c")]
    shift_c: Option<f64>,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// diagonal | random_hermitian | gapped
    #[arg(long)]
    kind: String,

    #[arg(long)]
    n: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Kind-specific values (diagonal entries; `[p]` or `[p, scale]` for gapped).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    params: Vec<f64>,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,

    /// k | shots | b | p
    #[arg(long = "sweep-axis")]
    axis: String,

    #[arg(long = "sweep-values", value_delimiter = ',', required = true)]
    values: Vec<f64>,

    /// Fixture dimension for the p axis (which generates gapped matrices).
    #[arg(long = "n", default_value_t = 8)]
    sweep_n: usize,
}

fn load_matrix(path: &std::path::Path) -> Result<HermitianMatrix, Error> {
    let raw = read_matrix_file(path)?;
    validate_hermitian(raw, HERMITICITY_TOL)
}

/// Resolved estimator inputs shared by run and sweep.
struct Resolved {
    matrix: HermitianMatrix,
    cfg: PipelineConfig,
    opts: EstimateOptions,
    mode: ModeArg,
    krylov_m: usize,
    shift_c: f64,
}

fn resolve(args: &RunArgs, matrix: HermitianMatrix) -> Result<Resolved, Error> {
    let oracle = eigendecompose(&matrix)?;
    let d_default = match args.mode {
        // shift mode bounds the shifted spectrum
        ModeArg::Shift => {
            let c = args.shift_c.unwrap_or(0.0);
            oracle
                .eigenvalues()
                .iter()
                .map(|l| (l - c).abs())
                .fold(0.0f64, f64::max)
                * BOUND_HEADROOM
        }
        _ => oracle.dominant_eigenvalue().abs() * BOUND_HEADROOM,
    };
    let d = args.d_bound.unwrap_or(d_default);
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidConfig(
            "spectral bound D must be positive (zero matrix?)".into(),
        ));
    }
    let window = match args.window {
        WindowArg::Sine => ClockWindow::Sine,
        WindowArg::Uniform => ClockWindow::Uniform,
    };
    let phase = match args.t0 {
        Some(t0) => PhaseConfig::new(args.bits, t0, d, window)?,
        None => PhaseConfig::with_default_t0(args.bits, d, window)?,
    };
    let k = match args.k {
        Some(k) => k,
        None => {
            // derive k from the matrix the pipeline actually iterates
            let operative_oracle = match args.mode {
                ModeArg::Min => eigendecompose(&eigenpower::linalg::inverse(&matrix)?)?,
                ModeArg::Shift => eigendecompose(&eigenpower::linalg::shift(
                    &matrix,
                    args.shift_c.unwrap_or(0.0),
                ))?,
                _ => oracle.clone(),
            };
            let x0 = draw_initial_vector(matrix.dim(), args.seed, &operative_oracle)?;
            let required = convergence_bound(&operative_oracle, &x0, args.delta)?.k_required;
            match args.mode {
                // krylov needs k + 1 <= n
                ModeArg::Krylov => required.clamp(args.krylov_m.unwrap_or(1), matrix.dim() - 1),
                _ => required,
            }
        }
    };
    let variant = match args.variant {
        VariantArg::Naive => Variant::Naive,
        VariantArg::Improved => Variant::Improved,
    };
    let backend = match args.backend {
        BackendArg::Circuit => Backend::Circuit,
        BackendArg::Analytic => Backend::Analytic,
    };
    let cfg = match args.c_rotation {
        Some(c) => PipelineConfig::new(k, c, phase, variant, backend, args.seed)?,
        None => PipelineConfig::with_default_c(k, phase, variant, backend, args.seed)?,
    };
    let opts = EstimateOptions {
        shots: args.shots,
        shot_seed: derive_seed(args.seed, 0x5407),
        delta: args.delta,
    };
    let krylov_m = args.krylov_m.unwrap_or(1);
    let shift_c = args.shift_c.unwrap_or(0.0);
    Ok(Resolved {
        matrix,
        cfg,
        opts,
        mode: args.mode,
        krylov_m,
        shift_c,
    })
}

fn estimate(r: &Resolved) -> Result<EigenReport, Error> {
    match r.mode {
        ModeArg::Max => quantum_estimate_max(&r.matrix, &r.cfg, &r.opts),
        ModeArg::Min => quantum_estimate_min(&r.matrix, &r.cfg, &r.opts),
        ModeArg::Shift => quantum_estimate_shifted(&r.matrix, r.shift_c, &r.cfg, &r.opts),
        ModeArg::Krylov => krylov_few_eigenvalues(&r.matrix, &r.cfg, r.krylov_m, &r.opts),
    }
}

fn run_command(args: &RunArgs) -> Result<(), Error> {
    let matrix = load_matrix(&args.matrix)?;
    let resolved = resolve(args, matrix)?;
    let report = estimate(&resolved)?;
    let json = report.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| Error::Io(e.to_string()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn fixture_command(args: &FixtureArgs) -> Result<(), Error> {
    let kind: FixtureKind = args.kind.parse()?;
    let matrix = generate_fixture(kind, args.n, args.seed, &args.params)?;
    write_matrix_file(&args.out, &matrix)
}

fn sweep_command(args: &SweepArgs) -> Result<(), Error> {
    let table = sweep::run_sweep(args)?;
    match &args.run.out {
        Some(path) => std::fs::write(path, table).map_err(|e| Error::Io(e.to_string()))?,
        None => print!("{table}"),
    }
    Ok(())
}

fn exit_code_for(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Io => 2,
        ErrorClass::Validation => 3,
        ErrorClass::Numeric => 4,
        ErrorClass::ShotNoise => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Fixture(args) => fixture_command(args),
        Command::Sweep(args) => sweep_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code_for(err.class());
            let payload = serde_json::json!({
                "error": {
                    "class": format!("{:?}", err.class()),
                    "message": err.to_string(),
                    "exit_code": code,
                }
            });
            println!("{payload}");
            ExitCode::from(code)
        }
    }
}
