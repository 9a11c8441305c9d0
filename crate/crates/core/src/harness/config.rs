//! Flat `key = value` config files and the flag-string parsers shared with
//! the CLI. Unknown keys, duplicate keys, and malformed values are hard
//! errors: configs are reproducibility artifacts.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solvers::AlgorithmId;
use crate::stepsize::SolverParams;

use super::{BenchConfig, ExampleId, NamedStart, StartKind};

/// A not-yet-resolved config: every field optional so that file, environment,
/// and CLI layers can be overlaid before defaults fill the gaps.
#[derive(Clone, Debug, Default)]
pub struct PartialBenchConfig {
    pub example: Option<ExampleId>,
    pub n: Option<usize>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<AlgorithmId>>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub start: Option<StartKind>,
    pub xi: Option<f64>,
    pub psi1: Option<f64>,
    pub phi: Option<f64>,
    pub sigma: Option<f64>,
    pub armijo_alpha: Option<f64>,
    pub armijo_ell: Option<f64>,
    pub armijo_phi: Option<f64>,
}

impl PartialBenchConfig {
    /// Overlay `stronger` on top of `self`; set fields of `stronger` win.
    pub fn overlay(mut self, stronger: PartialBenchConfig) -> PartialBenchConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if stronger.$field.is_some() { self.$field = stronger.$field; })*
            };
        }
        take!(
            example,
            n,
            points,
            seed,
            algorithms,
            max_iter,
            tol,
            start,
            xi,
            psi1,
            phi,
            sigma,
            armijo_alpha,
            armijo_ell,
            armijo_phi
        );
        self
    }

    /// Fill defaults and validate cross-field requirements. Defaults follow
    /// the benchmark protocol: seed 1, all algorithms, uniform random start
    /// with scale 1, 400 iterations (50 for the grid example), 256 grid
    /// points.
    pub fn resolve(self) -> Result<BenchConfig> {
        let example = self.example.unwrap_or(ExampleId::Ex1);
        let n = self.n;
        let points = match example {
            ExampleId::Ex3 => Some(self.points.unwrap_or(256)),
            _ => self.points,
        };
        if example == ExampleId::Ex2 && n.is_none() {
            return Err(Error::Config("example ex2 requires `n`".into()));
        }
        if let Some(n) = n {
            if n == 0 {
                return Err(Error::Config("`n` must be at least 1".into()));
            }
        }
        if let Some(pts) = points {
            if pts < 2 {
                return Err(Error::Config("`points` must be at least 2".into()));
            }
        }
        let max_iter = self.max_iter.unwrap_or(match example {
            ExampleId::Ex3 => 50,
            _ => 400,
        });
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config("`tol` must be positive".into()));
            }
        }
        let mut params = SolverParams::paper_preset();
        macro_rules! override_param {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { params.$field = v; })*
            };
        }
        override_param!(xi, psi1, phi, sigma, armijo_alpha, armijo_ell, armijo_phi);
        params.max_iter = max_iter;
        params
            .validate_scalars()
            .map_err(|e| Error::Config(e.to_string()))?;
        let start = self.start.unwrap_or(StartKind::RandomScaled(1.0));
        if let StartKind::Named(_) = start {
            if example != ExampleId::Ex3 {
                return Err(Error::Config(
                    "named start functions are only valid on the grid example (ex3)".into(),
                ));
            }
        }
        Ok(BenchConfig {
            example,
            n,
            points,
            seed: self.seed.unwrap_or(1),
            algorithms: self.algorithms.unwrap_or_else(|| AlgorithmId::ALL.to_vec()),
            max_iter,
            tol: self.tol,
            start,
            params,
        })
    }
}

/// Parse a flat `key = value` config text. `#` starts a comment; blank lines
/// are ignored; keys may appear at most once.
pub fn parse_config_str(text: &str) -> Result<PartialBenchConfig> {
    let mut cfg = PartialBenchConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            )));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if seen.contains(&key) {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key `{key}`"
            )));
        }
        seen.push(key.clone());
        let ctx = |what: &str| Error::Config(format!("line {line_no}: invalid {what}: `{value}`"));
        match key.as_str() {
            "example" => cfg.example = Some(value.parse()?),
            "n" => cfg.n = Some(value.parse().map_err(|_| ctx("integer"))?),
            "points" => cfg.points = Some(value.parse().map_err(|_| ctx("integer"))?),
            "seed" => cfg.seed = Some(value.parse().map_err(|_| ctx("seed"))?),
            "algorithms" => cfg.algorithms = Some(parse_algorithm_list(value)?),
            "max_iter" => cfg.max_iter = Some(value.parse().map_err(|_| ctx("integer"))?),
            "tol" => cfg.tol = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?),
            "start" => cfg.start = Some(parse_start_spec(value)?),
            "xi" => cfg.xi = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?),
            "psi1" => cfg.psi1 = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?),
            "phi" => cfg.phi = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?),
            "sigma" => cfg.sigma = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?),
            "armijo_alpha" => {
                cfg.armijo_alpha = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?)
            }
            "armijo_ell" => {
                cfg.armijo_ell = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?)
            }
            "armijo_phi" => {
                cfg.armijo_phi = Some(parse_finite_f64(value).ok_or_else(|| ctx("number"))?)
            }
            other => {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key `{other}`"
                )));
            }
        }
    }
    Ok(cfg)
}

fn parse_finite_f64(s: &str) -> Option<f64> {
    f64::from_str(s).ok().filter(|v| v.is_finite())
}

/// Comma-separated algorithm ids, or `all` for the full set. Duplicates are
/// collapsed, order preserved.
pub fn parse_algorithm_list(s: &str) -> Result<Vec<AlgorithmId>> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(Error::invalid("algorithms", "empty algorithm list"));
    }
    if trimmed.eq_ignore_ascii_case("all") {
        return Ok(AlgorithmId::ALL.to_vec());
    }
    let mut out: Vec<AlgorithmId> = Vec::new();
    for part in trimmed.split(',') {
        let alg: AlgorithmId = part.parse()?;
        if !out.contains(&alg) {
            out.push(alg);
        }
    }
    Ok(out)
}

/// Start-vector spec: `random:<scale>` or one of the named grid functions
/// `t2`, `pow2t`, `expt`, `tcos`.
pub fn parse_start_spec(s: &str) -> Result<StartKind> {
    let trimmed = s.trim();
    if let Some(scale_str) = trimmed.strip_prefix("random:") {
        let scale: f64 = scale_str
            .trim()
            .parse()
            .map_err(|_| Error::invalid("start", format!("bad scale `{scale_str}`")))?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("start", "scale must be positive and finite"));
        }
        return Ok(StartKind::RandomScaled(scale));
    }
    if trimmed.eq_ignore_ascii_case("random") {
        return Ok(StartKind::RandomScaled(1.0));
    }
    let named = match trimmed.to_ascii_lowercase().as_str() {
        "t2" => NamedStart::T2,
        "pow2t" => NamedStart::Pow2T,
        "expt" => NamedStart::ExpT,
        "tcos" | "t_plus_halfcos" => NamedStart::TPlusHalfCos,
        other => {
            return Err(Error::invalid(
                "start",
                format!("unknown start spec `{other}`"),
            ))
        }
    };
    Ok(StartKind::Named(named))
}
