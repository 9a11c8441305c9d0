//! Benchmark orchestration: problem construction from configs, comparison
//! runs over a shared start vector, the `D_k` error metric, CSV emission, and
//! the runtime invariant suite.

mod config;
mod trace_csv;

pub use config::{parse_algorithm_list, parse_config_str, parse_start_spec, PartialBenchConfig};
pub use trace_csv::{
    emit_csv, emit_csv_to_string, format_float_17, parse_csv_str, write_csv_file, CsvDocument,
    CsvRow, CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::{dist, inner, norm, sub, HVector, SpaceDescriptor};
use crate::operators::{make_example1, make_example2, make_example3, Problem};
use crate::projections::{halfspace_for_subgradient_step, FeasibleSet};
use crate::rng::SplitMix64;
use crate::solvers::{
    run, run_detailed, verify_contraction, verify_iteration_inequality, AlgorithmId,
    ContractionDiagnostics, StopRule, TraceRow,
};
use crate::stepsize::SolverParams;

/// RNG stream tags; problem data uses 0, start vectors 1, sampling 2+.
const START_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
}

impl ExampleId {
    pub fn id(&self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ex1" | "1" => Ok(ExampleId::Ex1),
            "ex2" | "2" => Ok(ExampleId::Ex2),
            "ex3" | "3" => Ok(ExampleId::Ex3),
            other => Err(Error::Config(format!("unknown example `{other}`"))),
        }
    }
}

/// The four named grid start functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedStart {
    T2,
    Pow2T,
    ExpT,
    TPlusHalfCos,
}

impl NamedStart {
    pub fn id(&self) -> &'static str {
        match self {
            NamedStart::T2 => "t2",
            NamedStart::Pow2T => "pow2t",
            NamedStart::ExpT => "expt",
            NamedStart::TPlusHalfCos => "tcos",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            NamedStart::T2 => t * t,
            NamedStart::Pow2T => 2f64.powf(t),
            NamedStart::ExpT => t.exp(),
            NamedStart::TPlusHalfCos => t + 0.5 * t.cos(),
        }
    }
}

/// How the shared start vector is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartKind {
    /// Coordinates uniform in `[0, scale)`, drawn from the seeded start
    /// stream.
    RandomScaled(f64),
    /// A named function sampled on the grid; only valid for `ex3`.
    Named(NamedStart),
}

impl fmt::Display for StartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartKind::RandomScaled(scale) => write!(f, "random:{scale}"),
            StartKind::Named(named) => f.write_str(named.id()),
        }
    }
}

/// A fully resolved benchmark configuration.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub example: ExampleId,
    pub n: Option<usize>,
    pub points: Option<usize>,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmId>,
    pub max_iter: usize,
    pub tol: Option<f64>,
    pub start: StartKind,
    pub params: SolverParams,
}

impl BenchConfig {
    /// Paper-preset configuration for one example with protocol defaults.
    pub fn preset(example: ExampleId) -> Self {
        let partial = PartialBenchConfig {
            example: Some(example),
            n: if example == ExampleId::Ex2 {
                Some(50)
            } else {
                None
            },
            ..PartialBenchConfig::default()
        };
        partial.resolve().expect("preset config resolves")
    }

    /// Ordered `key=value` pairs echoed into emitted CSVs.
    pub fn echo_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("example".to_string(), self.example.to_string()),
        ];
        if let Some(n) = self.n {
            pairs.push(("n".to_string(), n.to_string()));
        }
        if let Some(points) = self.points {
            pairs.push(("points".to_string(), points.to_string()));
        }
        pairs.push((
            "algorithms".to_string(),
            self.algorithms
                .iter()
                .map(|a| a.cli_id())
                .collect::<Vec<_>>()
                .join(","),
        ));
        pairs.push(("max_iter".to_string(), self.max_iter.to_string()));
        if let Some(tol) = self.tol {
            pairs.push(("tol".to_string(), tol.to_string()));
        }
        pairs.push(("start".to_string(), self.start.to_string()));
        let p = &self.params;
        for (key, value) in [
            ("xi", p.xi),
            ("psi1", p.psi1),
            ("phi", p.phi),
            ("sigma", p.sigma),
            ("armijo_alpha", p.armijo_alpha),
            ("armijo_ell", p.armijo_ell),
            ("armijo_phi", p.armijo_phi),
        ] {
            pairs.push((key.to_string(), value.to_string()));
        }
        pairs
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Trace of one algorithm within a comparison, plus the reproducibility
/// context it ran under.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub algorithm: AlgorithmId,
    pub rows: Vec<TraceRow>,
    pub seed: u64,
    pub config_echo: Vec<(String, String)>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.d_k)
    }

    pub fn min_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.d_k)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn total_elapsed(&self) -> f64 {
        self.rows.last().map(|r| r.elapsed_s).unwrap_or(0.0)
    }
}

/// Build the configured problem instance; deterministic in
/// `(example, n/points, seed)`.
pub fn build_problem(cfg: &BenchConfig) -> Result<Problem> {
    match cfg.example {
        ExampleId::Ex1 => make_example1(),
        ExampleId::Ex2 => {
            let n = cfg
                .n
                .ok_or_else(|| Error::Config("example ex2 requires `n`".into()))?;
            make_example2(n, cfg.seed)
        }
        ExampleId::Ex3 => {
            let points = cfg
                .points
                .ok_or_else(|| Error::Config("example ex3 requires `points`".into()))?;
            make_example3(points)
        }
    }
}

/// Produce the start vector for a space. Random starts draw from the seeded
/// start stream; named functions sample the grid.
pub fn make_start(cfg: &BenchConfig, space: &SpaceDescriptor) -> Result<HVector> {
    match cfg.start {
        StartKind::RandomScaled(scale) => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::invalid("start", "scale must be positive"));
            }
            let mut rng = SplitMix64::stream(cfg.seed, START_STREAM);
            let coords = (0..space.len()).map(|_| scale * rng.next_f64()).collect();
            HVector::new(*space, coords)
        }
        StartKind::Named(named) => match space {
            SpaceDescriptor::GridL2 { points } => HVector::sample_grid(*points, |t| named.eval(t)),
            other => Err(Error::invalid(
                "start",
                format!(
                    "named start `{}` requires a grid space, got {other}",
                    named.id()
                ),
            )),
        },
    }
}

/// Run every configured algorithm on one shared problem instance and start
/// vector. Per-algorithm failures are recorded in their [`RunRecord`]; the
/// remaining algorithms still run.
pub fn compare(cfg: &BenchConfig) -> Result<Vec<RunRecord>> {
    let problem = build_problem(cfg)?;
    let start = make_start(cfg, &problem.space)?;
    let stop = cfg.stop_rule();
    let echo = cfg.echo_pairs();
    let mut records = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let record = match run(&problem, alg, &cfg.params, &start, &stop) {
            Ok(trace) => RunRecord {
                algorithm: alg,
                rows: trace.rows,
                seed: cfg.seed,
                config_echo: echo.clone(),
                error: trace.failure,
            },
            Err(e) => RunRecord {
                algorithm: alg,
                rows: Vec::new(),
                seed: cfg.seed,
                config_echo: echo.clone(),
                error: Some(e.to_string()),
            },
        };
        records.push(record);
    }
    Ok(records)
}

/// Outcome of one validation check. `worst` is the largest observed slack for
/// the quantity the check bounds.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct DiagnosticReport {
    pub checks: Vec<CheckOutcome>,
}

impl DiagnosticReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, worst: f64, detail: impl Into<String>) {
        self.checks.push(CheckOutcome {
            name,
            passed,
            worst,
            detail: detail.into(),
        });
    }
}

const PROJECTION_SAMPLES: usize = 1000;
const OPERATOR_SAMPLES: usize = 1000;

/// Run the full invariant suite on the configured problem: projection
/// properties, operator spot checks, the contraction bound, and the
/// per-iteration inequalities along solver runs. Failures are report entries,
/// not errors.
pub fn validate(cfg: &BenchConfig) -> Result<DiagnosticReport> {
    let problem = build_problem(cfg)?;
    let star = problem.known_solution.clone().ok_or_else(|| {
        Error::invalid(
            "known_solution",
            "validation requires a problem with a known solution",
        )
    })?;
    let mut report = DiagnosticReport::default();
    let mut rng = SplitMix64::stream(cfg.seed, SAMPLE_STREAM);

    // selector precondition: sigma < 2*eta/kappa^2 with 0 < eta <= kappa
    let eta = problem.s.meta.strong_monotonicity.unwrap_or(f64::NAN);
    let kappa = problem.s.meta.lipschitz.unwrap_or(f64::NAN);
    let diag = ContractionDiagnostics::new(cfg.params.sigma, eta, kappa, 1.0);
    let sigma_ok = diag.is_ok();
    report.push(
        "selector_sigma_bound",
        sigma_ok,
        cfg.params.sigma,
        match &diag {
            Ok(d) => format!("sigma={} gamma={:.6}", cfg.params.sigma, d.gamma),
            Err(e) => e.to_string(),
        },
    );

    projection_checks(&mut report, &problem, &mut rng)?;
    operator_checks(&mut report, &problem, &star, &mut rng)?;

    if sigma_ok {
        let diag = diag.expect("checked");
        let ratio = verify_contraction(
            &problem.s,
            |x| Ok(x.clone()),
            cfg.params.sigma,
            1.0,
            PROJECTION_SAMPLES,
            &problem.space,
            cfg.seed,
        )?;
        let bound = diag.ratio_bound() + 1e-9;
        report.push(
            "contraction_ratio_bound",
            ratio <= bound,
            ratio - diag.ratio_bound(),
            format!("max ratio {ratio:.12} vs bound {:.12}", diag.ratio_bound()),
        );

        solver_run_checks(&mut report, &problem, &star, cfg)?;
    }

    Ok(report)
}

fn sample_vector(space: &SpaceDescriptor, span: f64, rng: &mut SplitMix64) -> Result<HVector> {
    let coords = (0..space.len()).map(|_| rng.uniform(-span, span)).collect();
    HVector::new(*space, coords)
}

fn projection_checks(
    report: &mut DiagnosticReport,
    problem: &Problem,
    rng: &mut SplitMix64,
) -> Result<()> {
    let space = &problem.space;
    let extra_halfspace = FeasibleSet::half_space(sample_vector(space, 1.0, rng)?, 0.5)?;
    let sets: [(&str, &FeasibleSet); 2] = [
        ("feasible_set", &problem.feasible),
        ("halfspace", &extra_halfspace),
    ];

    let mut worst_idem = 0.0_f64;
    let mut worst_firm = 0.0_f64;
    let mut worst_var = 0.0_f64;
    for (_, set) in &sets {
        for _ in 0..PROJECTION_SAMPLES {
            let x = sample_vector(space, 6.0, rng)?;
            let px = set.project(&x)?;
            let ppx = set.project(&px)?;
            worst_idem = worst_idem.max(dist(&px, &ppx)?);

            let y = sample_vector(space, 6.0, rng)?;
            let py = set.project(&y)?;
            let dp = sub(&px, &py)?;
            worst_firm = worst_firm.max(norm(&dp).powi(2) - inner(&dp, &sub(&x, &y)?)?);

            // a member of the set, via projection of a random sample
            let member = set.project(&sample_vector(space, 6.0, rng)?)?;
            worst_var = worst_var.max(inner(&sub(&x, &px)?, &sub(&member, &px)?)?);
        }
    }
    report.push(
        "projection_idempotence",
        worst_idem <= 1e-12,
        worst_idem,
        format!("max ||P(Px) - Px|| = {worst_idem:.3e}"),
    );
    report.push(
        "projection_firm_nonexpansiveness",
        worst_firm <= 1e-10,
        worst_firm,
        format!("max ||Px-Py||^2 - <Px-Py, x-y> = {worst_firm:.3e}"),
    );
    report.push(
        "projection_variational_characterization",
        worst_var <= 1e-10,
        worst_var,
        format!("max <x-Px, y-Px> over members y = {worst_var:.3e}"),
    );
    Ok(())
}

fn operator_checks(
    report: &mut DiagnosticReport,
    problem: &Problem,
    star: &HVector,
    rng: &mut SplitMix64,
) -> Result<()> {
    let space = &problem.space;
    let lipschitz = problem.a.meta.lipschitz.unwrap_or(f64::INFINITY);
    let vartheta = problem.t.meta.demicontractive.unwrap_or(0.0);
    let eta = problem.s.meta.strong_monotonicity.unwrap_or(0.0);

    let mut worst_mono = 0.0_f64;
    let mut worst_lip = 0.0_f64;
    let mut worst_demi = 0.0_f64;
    let mut worst_strong = 0.0_f64;
    for _ in 0..OPERATOR_SAMPLES {
        let x = sample_vector(space, 5.0, rng)?;
        let y = sample_vector(space, 5.0, rng)?;
        let dxy = sub(&x, &y)?;
        let da = sub(&problem.a.apply(&x), &problem.a.apply(&y))?;
        worst_mono = worst_mono.max(-inner(&da, &dxy)?);
        worst_lip = worst_lip.max(norm(&da) - (lipschitz + 1e-8) * norm(&dxy));

        let tx = problem.t.apply(&x);
        worst_demi = worst_demi.max(
            dist(&tx, star)?.powi(2) - dist(&x, star)?.powi(2) - vartheta * dist(&x, &tx)?.powi(2),
        );

        let ds = sub(&problem.s.apply(&x), &problem.s.apply(&y))?;
        worst_strong = worst_strong.max((eta - 1e-10) * norm(&dxy).powi(2) - inner(&ds, &dxy)?);
    }
    report.push(
        "operator_monotonicity",
        worst_mono <= 1e-10,
        worst_mono,
        format!("max -<Ax-Ay, x-y> = {worst_mono:.3e}"),
    );
    report.push(
        "operator_lipschitz",
        worst_lip <= 0.0,
        worst_lip,
        format!("max ||Ax-Ay|| - (L+1e-8)||x-y|| = {worst_lip:.3e}"),
    );
    report.push(
        "fixed_point_demicontractivity",
        worst_demi <= 1e-10,
        worst_demi,
        format!("max excess over the demicontractive bound = {worst_demi:.3e}"),
    );
    report.push(
        "selector_strong_monotonicity",
        worst_strong <= 0.0,
        worst_strong,
        format!("max (eta-1e-10)||x-y||^2 - <Sx-Sy, x-y> = {worst_strong:.3e}"),
    );
    Ok(())
}

fn solver_run_checks(
    report: &mut DiagnosticReport,
    problem: &Problem,
    star: &HVector,
    cfg: &BenchConfig,
) -> Result<()> {
    let start = make_start(cfg, &problem.space)?;
    let stop = StopRule::max_iter(cfg.max_iter);
    let lipschitz = problem.a.meta.lipschitz.unwrap_or(f64::INFINITY);
    let psi_floor = cfg.params.psi1.min(cfg.params.phi / lipschitz) - 1e-12;
    let mut membership_rng = SplitMix64::stream(cfg.seed, SAMPLE_STREAM + 1);
    let mut c_members = Vec::new();
    for _ in 0..32 {
        let raw = sample_vector(&problem.space, 6.0, &mut membership_rng)?;
        c_members.push(problem.feasible.project(&raw)?);
    }

    // subgradient-extragradient run: energy inequality, half-space slack,
    // predictor feasibility, step-size monotonicity and floor
    let (trace, reports) = run_detailed(problem, AlgorithmId::Isegm, &cfg.params, &start, &stop)?;
    if let Some(failure) = &trace.failure {
        report.push("subgradient_run", false, f64::NAN, failure.clone());
        return Ok(());
    }
    let mut worst_energy = f64::NEG_INFINITY;
    let mut energy_checked = 0usize;
    let mut energy_ok = true;
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_feas = 0.0_f64;
    let mut worst_member = f64::NEG_INFINITY;
    let mut psi_monotone = true;
    let mut min_psi = f64::INFINITY;
    let mut prev_psi = f64::INFINITY;
    for (i, step) in reports.iter().enumerate() {
        let psi_next = reports.get(i + 1).map(|r| r.psi_k).unwrap_or_else(|| {
            // last step: recompute the update it produced
            crate::stepsize::adaptive_psi_next(
                step.psi_k,
                cfg.params.phi,
                &step.u,
                &step.y,
                &problem.a.apply(&step.u),
                &problem.a.apply(&step.y),
            )
        });
        if psi_next > prev_psi + 1e-15 {
            psi_monotone = false;
        }
        prev_psi = step.psi_k;
        min_psi = min_psi.min(step.psi_k).min(psi_next);

        let coeff = 1.0 - cfg.params.phi * step.psi_k / psi_next;
        if coeff > 0.0 {
            energy_checked += 1;
            energy_ok &=
                verify_iteration_inequality(step, star, cfg.params.phi, step.psi_k, psi_next)?;
            let lhs = dist(&step.z, star)?.powi(2);
            let rhs = dist(&step.u, star)?.powi(2)
                - coeff * (dist(&step.y, &step.u)?.powi(2) + dist(&step.z, &step.y)?.powi(2));
            worst_energy = worst_energy.max(lhs - rhs);
        }

        worst_slack = worst_slack.max(step.halfspace_slack.unwrap_or(0.0));
        worst_feas = worst_feas.max(problem.feasible.constraint_residual(&step.y)?);

        let a_u = problem.a.apply(&step.u);
        let hk = halfspace_for_subgradient_step(&step.u, step.psi_k, &a_u, &step.y)?;
        for member in &c_members {
            worst_member = worst_member.max(match &hk {
                FeasibleSet::HalfSpace { normal, offset } => inner(normal, member)? - offset,
                _ => 0.0,
            });
        }
    }
    report.push(
        "iteration_energy_inequality",
        energy_ok && worst_energy <= crate::solvers::ITERATION_INEQUALITY_SLACK,
        worst_energy,
        format!(
            "max lhs-rhs = {worst_energy:.3e} over {energy_checked}/{} iterations",
            reports.len()
        ),
    );
    report.push(
        "halfspace_projection_slack",
        worst_slack <= 1e-10,
        worst_slack,
        format!("max <u - psi Au - y, z - y> = {worst_slack:.3e}"),
    );
    report.push(
        "predictor_feasibility",
        worst_feas <= 1e-10,
        worst_feas,
        format!("max constraint residual of y = {worst_feas:.3e}"),
    );
    report.push(
        "feasible_set_inside_halfspace",
        worst_member <= 1e-10,
        worst_member,
        format!("max half-space violation over sampled members of C = {worst_member:.3e}"),
    );
    report.push(
        "step_size_monotone_floor",
        psi_monotone && min_psi >= psi_floor,
        min_psi,
        format!("min psi = {min_psi:.6}, floor = {psi_floor:.6}, monotone = {psi_monotone}"),
    );

    // Tseng run: corrector residual bound
    let (trace, reports) = run_detailed(problem, AlgorithmId::Itegm, &cfg.params, &start, &stop)?;
    if let Some(failure) = &trace.failure {
        report.push("tseng_run", false, f64::NAN, failure.clone());
        return Ok(());
    }
    let mut worst_tseng = f64::NEG_INFINITY;
    for step in &reports {
        if let Some((lhs, rhs)) = step.lemma_lhs_rhs {
            worst_tseng = worst_tseng.max(lhs - rhs);
        }
    }
    report.push(
        "tseng_residual_bound",
        worst_tseng <= 1e-10,
        worst_tseng,
        format!(
            "max ||z-y|| - phi (psi_k/psi_k+1) ||u-y|| = {worst_tseng:.3e} over {} iterations",
            reports.len()
        ),
    );
    Ok(())
}
