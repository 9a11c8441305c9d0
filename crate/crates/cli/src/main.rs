//! Benchmark CLI: run or compare solvers on the built-in problem instances,
//! emit CSV traces, and execute the invariant suite.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extragrad::harness::{
    compare, emit_csv_to_string, parse_algorithm_list, parse_config_str, parse_start_spec,
    validate, write_csv_file, BenchConfig, ExampleId, PartialBenchConfig,
};
use extragrad::solvers::AlgorithmId;
use extragrad::Error;

#[derive(Parser)]
#[command(
    name = "extragrad",
    version,
    about = "Solvers and benchmarks for variational-inequality + fixed-point problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and emit its trace as CSV.
    Run(CommonArgs),
    /// Run several algorithms on a shared problem instance and start vector.
    Compare(CommonArgs),
    /// Execute the invariant suite on the configured problem.
    Validate(CommonArgs),
    /// List available algorithms and examples.
    List,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem instance: ex1, ex2, or ex3.
    #[arg(long)]
    example: Option<String>,
    /// Dimension for ex2.
    #[arg(long)]
    n: Option<usize>,
    /// Grid points for ex3 (default 256).
    #[arg(long)]
    points: Option<usize>,
    /// RNG seed; falls back to $VI_SOLVE_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated algorithm ids, or `all`.
    #[arg(long)]
    algorithms: Option<String>,
    /// Iteration budget (default 400; 50 for ex3).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Early-stop tolerance on the iteration error D_k.
    #[arg(long)]
    tol: Option<f64>,
    /// Start vector: `random:<scale>` or one of t2|pow2t|expt|tcos.
    #[arg(long)]
    start: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file of `key = value` lines; CLI flags win over the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset name; `paper` (the default) is the only preset.
    #[arg(long)]
    preset: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::List => {
            write_stdout(&list_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let mut cfg = resolve_config(&args)?;
            if args.algorithms.is_none() && args.config.is_none() {
                cfg.algorithms = vec![AlgorithmId::Isegm];
            }
            if cfg.algorithms.len() != 1 {
                return Err(Error::Config(format!(
                    "`run` takes exactly one algorithm, got {}",
                    cfg.algorithms.len()
                )));
            }
            run_and_emit(&cfg, args.out.as_deref())
        }
        Command::Compare(args) => {
            let cfg = resolve_config(&args)?;
            run_and_emit(&cfg, args.out.as_deref())
        }
        Command::Validate(args) => {
            let cfg = resolve_config(&args)?;
            let report = validate(&cfg)?;
            let mut text = String::new();
            for check in &report.checks {
                text.push_str(&format!(
                    "{} {:<40} worst={:+.3e}  {}\n",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.worst,
                    check.detail
                ));
            }
            write_stdout(&text)?;
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

/// Write to stdout, treating a closed pipe (e.g. `| head`) as a normal early
/// exit rather than an error.
fn write_stdout(text: &str) -> Result<(), Error> {
    use io::Write;
    match io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(source) => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

/// Layering: defaults < $VI_SOLVE_SEED < config file < CLI flags.
fn resolve_config(args: &CommonArgs) -> Result<BenchConfig, Error> {
    if let Some(preset) = &args.preset {
        if !preset.eq_ignore_ascii_case("paper") {
            return Err(Error::Config(format!(
                "unknown preset `{preset}`; available presets: paper"
            )));
        }
        // the defaults are the paper preset; the flag pins it explicitly
    }
    let mut layered = PartialBenchConfig::default();
    if let Ok(seed_str) = std::env::var("VI_SOLVE_SEED") {
        let seed = seed_str.trim().parse().map_err(|_| {
            Error::Config(format!("VI_SOLVE_SEED is not a valid seed: `{seed_str}`"))
        })?;
        layered.seed = Some(seed);
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        layered = layered.overlay(parse_config_str(&text)?);
    }
    let cli_layer = PartialBenchConfig {
        example: args.example.as_deref().map(str::parse).transpose()?,
        n: args.n,
        points: args.points,
        seed: args.seed,
        algorithms: args
            .algorithms
            .as_deref()
            .map(parse_algorithm_list)
            .transpose()?,
        max_iter: args.max_iter,
        tol: args.tol,
        start: args.start.as_deref().map(parse_start_spec).transpose()?,
        ..Default::default()
    };
    layered.overlay(cli_layer).resolve()
}

fn run_and_emit(cfg: &BenchConfig, out: Option<&Path>) -> Result<ExitCode, Error> {
    let records = compare(cfg)?;
    match out {
        Some(path) => write_csv_file(&records, path)?,
        None => write_stdout(&emit_csv_to_string(&records))?,
    }
    let mut failed = false;
    for record in &records {
        if let Some(err) = &record.error {
            eprintln!("error: {}: {err}", record.algorithm.name());
            failed = true;
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn list_text() -> String {
    let mut text = String::from("algorithms:\n");
    let blurbs: [(&str, &str); 8] = [
        (
            "isegm",
            "inertial subgradient-extragradient + hybrid steepest descent",
        ),
        (
            "itegm",
            "inertial Tseng extragradient + hybrid steepest descent",
        ),
        ("cor1", "inertial subgradient-extragradient, Halpern anchor"),
        ("cor2", "inertial Tseng extragradient, viscosity step"),
        (
            "hsegm",
            "Halpern subgradient-extragradient, fixed step 0.99/L",
        ),
        (
            "vsegm",
            "viscosity subgradient-extragradient, adaptive step",
        ),
        ("vtegm", "viscosity Tseng extragradient, adaptive step"),
        (
            "stegm",
            "Tseng extragradient, Armijo line search + hybrid steepest descent",
        ),
    ];
    for (id, blurb) in blurbs {
        text.push_str(&format!("  {id:<8} {blurb}\n"));
    }
    text.push_str("examples:\n");
    for (id, blurb) in [
        (
            ExampleId::Ex1,
            "R^2, mildly nonlinear monotone operator over a box",
        ),
        (
            ExampleId::Ex2,
            "R^n, random linear monotone operator over a box (requires --n)",
        ),
        (
            ExampleId::Ex3,
            "grid-discretized L2([0,1]), positive-part operator over the unit ball",
        ),
    ] {
        text.push_str(&format!("  {:<8} {blurb}\n", id.id()));
    }
    text
}
