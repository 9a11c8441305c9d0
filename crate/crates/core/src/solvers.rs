//! One-step transition functions and the run loop for the two inertial
//! extragradient algorithms, their Halpern and viscosity specializations, and
//! four baseline methods, plus runtime inequality diagnostics.
//!
//! All eight steppers share the same skeleton: an optional inertial
//! extrapolation `u = x + xi_k (x - x_prev)`, a predictor projection
//! `y = P_C(u - psi A u)`, a corrector (half-space projection or Tseng
//! correction), a Mann combination with the fixed-point mapping `T`, and an
//! outer anchoring step (hybrid steepest descent, Halpern, or viscosity).
//! Iteration indices are 1-based and the scalar sequences are evaluated at
//! the current index, uniformly across algorithms so comparisons stay fair.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::hilbert::{dist, inner, lincomb, sub, HVector, SpaceDescriptor};
use crate::operators::{MappingHandle, Problem};
use crate::projections::halfspace_for_subgradient_step;
use crate::rng::SplitMix64;
use crate::stepsize::{adaptive_psi_next, armijo_psi, inertial_xi, SolverParams};

/// Absolute slack allowed when checking the per-iteration energy inequality.
pub const ITERATION_INEQUALITY_SLACK: f64 = 1e-9;

/// The eight implemented iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    /// Inertial subgradient-extragradient with hybrid steepest descent.
    Isegm,
    /// Inertial Tseng extragradient with hybrid steepest descent.
    Itegm,
    /// Halpern specialization of [`AlgorithmId::Isegm`].
    Cor1Halpern,
    /// Viscosity specialization of [`AlgorithmId::Itegm`].
    Cor2Viscosity,
    /// Halpern subgradient-extragradient baseline with a fixed step `0.99/L`.
    Hsegm,
    /// Viscosity subgradient-extragradient baseline.
    Vsegm,
    /// Viscosity Tseng extragradient baseline.
    Vtegm,
    /// Tseng extragradient with Armijo line search and hybrid steepest
    /// descent.
    Stegm,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::Isegm,
        AlgorithmId::Itegm,
        AlgorithmId::Cor1Halpern,
        AlgorithmId::Cor2Viscosity,
        AlgorithmId::Hsegm,
        AlgorithmId::Vsegm,
        AlgorithmId::Vtegm,
        AlgorithmId::Stegm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmId::Isegm => "ISEGM",
            AlgorithmId::Itegm => "ITEGM",
            AlgorithmId::Cor1Halpern => "COR1_HALPERN",
            AlgorithmId::Cor2Viscosity => "COR2_VISCOSITY",
            AlgorithmId::Hsegm => "HSEGM",
            AlgorithmId::Vsegm => "VSEGM",
            AlgorithmId::Vtegm => "VTEGM",
            AlgorithmId::Stegm => "STEGM",
        }
    }

    pub fn cli_id(&self) -> &'static str {
        match self {
            AlgorithmId::Isegm => "isegm",
            AlgorithmId::Itegm => "itegm",
            AlgorithmId::Cor1Halpern => "cor1",
            AlgorithmId::Cor2Viscosity => "cor2",
            AlgorithmId::Hsegm => "hsegm",
            AlgorithmId::Vsegm => "vsegm",
            AlgorithmId::Vtegm => "vtegm",
            AlgorithmId::Stegm => "stegm",
        }
    }

    /// Algorithms whose outer step applies `(I - sigma theta_k S)` and
    /// therefore need the selector's moduli and the `sigma` bound.
    pub fn uses_selector(&self) -> bool {
        matches!(
            self,
            AlgorithmId::Isegm | AlgorithmId::Itegm | AlgorithmId::Stegm
        )
    }

    /// Algorithms whose outer step evaluates the contraction `f`.
    pub fn needs_contraction(&self) -> bool {
        matches!(
            self,
            AlgorithmId::Cor2Viscosity | AlgorithmId::Vsegm | AlgorithmId::Vtegm
        )
    }

    pub fn has_inertia(&self) -> bool {
        matches!(
            self,
            AlgorithmId::Isegm
                | AlgorithmId::Itegm
                | AlgorithmId::Cor1Halpern
                | AlgorithmId::Cor2Viscosity
        )
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "isegm" => Ok(AlgorithmId::Isegm),
            "itegm" => Ok(AlgorithmId::Itegm),
            "cor1" | "cor1_halpern" => Ok(AlgorithmId::Cor1Halpern),
            "cor2" | "cor2_viscosity" => Ok(AlgorithmId::Cor2Viscosity),
            "hsegm" => Ok(AlgorithmId::Hsegm),
            "vsegm" => Ok(AlgorithmId::Vsegm),
            "vtegm" => Ok(AlgorithmId::Vtegm),
            "stegm" => Ok(AlgorithmId::Stegm),
            other => Err(Error::invalid(
                "algorithm",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }
}

/// Mutable state threaded through a run: the two most recent iterates, the
/// anchor `x0`, and the current adaptive step.
#[derive(Clone, Debug)]
pub struct SolverState {
    /// 1-based iteration index of the upcoming step.
    pub k: usize,
    pub x_prev: HVector,
    pub x_cur: HVector,
    pub psi: f64,
    /// Anchor used by the Halpern-type outer steps.
    pub x0: HVector,
}

/// Everything one step produced, for diagnostics and tracing.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub u: HVector,
    pub y: HVector,
    pub z: HVector,
    pub q: HVector,
    pub xi_k: f64,
    /// Step size used by this iteration.
    pub psi_k: f64,
    /// `||u - y||`.
    pub residual_uy: f64,
    /// `||T z - z||`.
    pub residual_tz: f64,
    /// `<u - psi Au - y, z - y>` for the subgradient-extragradient family;
    /// nonpositive up to rounding since `z` lies in the constructed
    /// half-space.
    pub halfspace_slack: Option<f64>,
    /// Diagnostic pair `(lhs, rhs)` of the per-step inequality the algorithm
    /// satisfies: the energy inequality against the known solution for the
    /// subgradient family, the residual bound `||z - y|| <=
    /// phi (psi_k/psi_{k+1}) ||u - y||` for the Tseng family.
    pub lemma_lhs_rhs: Option<(f64, f64)>,
}

/// Contraction modulus of `x -> (I - theta sigma S)(U x)` for a nonexpansive
/// `U` and an `eta`-strongly monotone, `kappa`-Lipschitz `S`:
/// the composed map shrinks distances by at least `1 - theta * gamma` with
/// `gamma = 1 - sqrt(1 - sigma (2 eta - sigma kappa^2))`.
#[derive(Clone, Copy, Debug)]
pub struct ContractionDiagnostics {
    pub gamma: f64,
    pub theta: f64,
}

impl ContractionDiagnostics {
    pub fn new(sigma: f64, eta: f64, kappa: f64, theta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= kappa) {
            return Err(Error::invalid(
                "eta",
                format!("need 0 < eta <= kappa, got eta = {eta}, kappa = {kappa}"),
            ));
        }
        let bound = 2.0 * eta / (kappa * kappa);
        if !(sigma > 0.0 && sigma < bound) {
            return Err(Error::invalid(
                "sigma",
                format!("need 0 < sigma < 2*eta/kappa^2 = {bound}, got {sigma}"),
            ));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid("theta", "must lie in (0, 1]"));
        }
        let radicand = 1.0 - sigma * (2.0 * eta - sigma * kappa * kappa);
        let gamma = 1.0 - radicand.max(0.0).sqrt();
        debug_assert!(gamma > 0.0 && gamma <= 1.0);
        Ok(ContractionDiagnostics { gamma, theta })
    }

    /// Upper bound on the composed map's distance ratio.
    pub fn ratio_bound(&self) -> f64 {
        1.0 - self.theta * self.gamma
    }
}

/// Stop condition of a run: a hard iteration budget plus an optional early
/// stop on the iteration error (only meaningful when the problem carries a
/// known solution).
#[derive(Clone, Copy, Debug)]
pub struct StopRule {
    pub max_iter: usize,
    pub tol: Option<f64>,
}

impl StopRule {
    pub fn max_iter(max_iter: usize) -> Self {
        StopRule {
            max_iter,
            tol: None,
        }
    }
}

/// One row of a run trace. `d_k` is the error `||x^k - x*||` at the iterate
/// the step started from; the residuals and step parameters belong to the
/// step executed at index `k`. `elapsed_s` is cumulative wall-clock time.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub k: usize,
    pub d_k: Option<f64>,
    pub psi_k: f64,
    pub xi_k: f64,
    pub residual_uy: f64,
    pub residual_tz: f64,
    pub elapsed_s: f64,
}

/// Per-iteration records of one run. A failed step leaves the rows produced
/// so far and sets `failure`.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub algorithm: AlgorithmId,
    pub rows: Vec<TraceRow>,
    pub final_point: HVector,
    pub failure: Option<String>,
}

impl IterationTrace {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.d_k)
    }

    pub fn min_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.d_k)
            .min_by(|a, b| a.total_cmp(b))
    }
}

fn ensure_finite(v: &HVector, step: &'static str, k: usize) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::StepNonFinite { step, k })
    }
}

/// `(1 - varphi) z + varphi T z` together with `||T z - z||`.
fn mann_step(z: &HVector, t: &MappingHandle, varphi: f64) -> Result<(HVector, f64)> {
    let tz = t.apply(z);
    let residual = dist(&tz, z)?;
    let q = lincomb(1.0 - varphi, z, varphi, &tz)?;
    Ok((q, residual))
}

fn advance(state: &SolverState, x_next: HVector, psi_next: f64) -> SolverState {
    SolverState {
        k: state.k + 1,
        x_prev: state.x_cur.clone(),
        x_cur: x_next,
        psi: psi_next,
        x0: state.x0.clone(),
    }
}

fn energy_pair(
    p: &Problem,
    u: &HVector,
    y: &HVector,
    z: &HVector,
    phi: f64,
    psi_k: f64,
    psi_next: f64,
) -> Result<Option<(f64, f64)>> {
    let Some(star) = &p.known_solution else {
        return Ok(None);
    };
    let coeff = 1.0 - phi * psi_k / psi_next;
    let lhs = dist(z, star)?.powi(2);
    let rhs = dist(u, star)?.powi(2) - coeff * (dist(y, u)?.powi(2) + dist(z, y)?.powi(2));
    Ok(Some((lhs, rhs)))
}

fn tseng_pair(
    u: &HVector,
    y: &HVector,
    z: &HVector,
    phi: f64,
    psi_k: f64,
    psi_next: f64,
) -> Result<Option<(f64, f64)>> {
    let lhs = dist(z, y)?;
    let rhs = phi * (psi_k / psi_next) * dist(u, y)?;
    Ok(Some((lhs, rhs)))
}

/// One step of the inertial subgradient-extragradient method with hybrid
/// steepest-descent damping: inertial `u`, predictor `y = P_C(u - psi Au)`,
/// corrector `z = P_{H_k}(u - psi Ay)` onto the constructed half-space,
/// `q = (1 - varphi_k) z + varphi_k T z`, and `x_next = q - sigma theta_k S q`.
pub fn step_isegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let zeta_k = params.rules.zeta(k);
    let psi = state.psi;

    let xi_k = inertial_xi(params.xi, zeta_k, &state.x_cur, &state.x_prev);
    let u = lincomb(1.0 + xi_k, &state.x_cur, -xi_k, &state.x_prev)?;
    ensure_finite(&u, "u", k)?;

    let a_u = p.a.apply(&u);
    let v = lincomb(1.0, &u, -psi, &a_u)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let hk = halfspace_for_subgradient_step(&u, psi, &a_u, &y)?;
    let a_y = p.a.apply(&y);
    let w = lincomb(1.0, &u, -psi, &a_y)?;
    let z = hk.project(&w)?;
    ensure_finite(&z, "z", k)?;
    let slack = inner(&sub(&v, &y)?, &sub(&z, &y)?)?;

    let (q, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&q, "q", k)?;
    let s_q = p.s.apply(&q);
    let x_next = lincomb(1.0, &q, -params.sigma * theta_k, &s_q)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, &u, &y, &a_u, &a_y);
    let lemma = energy_pair(p, &u, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(&u, &y)?,
        residual_tz,
        halfspace_slack: Some(slack),
        lemma_lhs_rhs: lemma,
        xi_k,
        psi_k: psi,
        u,
        y,
        z,
        q,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// One step of the inertial Tseng extragradient method: as
/// [`step_isegm`] but the corrector is the explicit Tseng update
/// `z = y - psi (Ay - Au)` and no second projection is taken.
pub fn step_itegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let zeta_k = params.rules.zeta(k);
    let psi = state.psi;

    let xi_k = inertial_xi(params.xi, zeta_k, &state.x_cur, &state.x_prev);
    let u = lincomb(1.0 + xi_k, &state.x_cur, -xi_k, &state.x_prev)?;
    ensure_finite(&u, "u", k)?;

    let a_u = p.a.apply(&u);
    let v = lincomb(1.0, &u, -psi, &a_u)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let a_y = p.a.apply(&y);
    let correction = sub(&a_y, &a_u)?;
    let z = lincomb(1.0, &y, -psi, &correction)?;
    ensure_finite(&z, "z", k)?;

    let (q, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&q, "q", k)?;
    let s_q = p.s.apply(&q);
    let x_next = lincomb(1.0, &q, -params.sigma * theta_k, &s_q)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, &u, &y, &a_u, &a_y);
    let lemma = tseng_pair(&u, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(&u, &y)?,
        residual_tz,
        halfspace_slack: None,
        lemma_lhs_rhs: lemma,
        xi_k,
        psi_k: psi,
        u,
        y,
        z,
        q,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// Halpern specialization of [`step_isegm`]: the same inertial
/// subgradient-extragradient core, with the outer step replaced by the anchor
/// combination `x_next = theta_k x0 + (1 - theta_k) [(1 - varphi_k) z +
/// varphi_k T z]`.
pub fn step_cor1(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let zeta_k = params.rules.zeta(k);
    let psi = state.psi;

    let xi_k = inertial_xi(params.xi, zeta_k, &state.x_cur, &state.x_prev);
    let u = lincomb(1.0 + xi_k, &state.x_cur, -xi_k, &state.x_prev)?;
    ensure_finite(&u, "u", k)?;

    let a_u = p.a.apply(&u);
    let v = lincomb(1.0, &u, -psi, &a_u)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let hk = halfspace_for_subgradient_step(&u, psi, &a_u, &y)?;
    let a_y = p.a.apply(&y);
    let w = lincomb(1.0, &u, -psi, &a_y)?;
    let z = hk.project(&w)?;
    ensure_finite(&z, "z", k)?;
    let slack = inner(&sub(&v, &y)?, &sub(&z, &y)?)?;

    let (q, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&q, "q", k)?;
    let x_next = lincomb(theta_k, &state.x0, 1.0 - theta_k, &q)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, &u, &y, &a_u, &a_y);
    let lemma = energy_pair(p, &u, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(&u, &y)?,
        residual_tz,
        halfspace_slack: Some(slack),
        lemma_lhs_rhs: lemma,
        xi_k,
        psi_k: psi,
        u,
        y,
        z,
        q,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// Viscosity specialization of [`step_itegm`]: the same inertial Tseng core,
/// with the outer step `x_next = (1 - theta_k) q + theta_k f(q)`.
pub fn step_cor2(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let f = p.f.as_ref().ok_or(Error::MissingComponent {
        algorithm: "COR2_VISCOSITY",
        what: "the contraction mapping f",
    })?;
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let zeta_k = params.rules.zeta(k);
    let psi = state.psi;

    let xi_k = inertial_xi(params.xi, zeta_k, &state.x_cur, &state.x_prev);
    let u = lincomb(1.0 + xi_k, &state.x_cur, -xi_k, &state.x_prev)?;
    ensure_finite(&u, "u", k)?;

    let a_u = p.a.apply(&u);
    let v = lincomb(1.0, &u, -psi, &a_u)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let a_y = p.a.apply(&y);
    let correction = sub(&a_y, &a_u)?;
    let z = lincomb(1.0, &y, -psi, &correction)?;
    ensure_finite(&z, "z", k)?;

    let (q, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&q, "q", k)?;
    let f_q = f.apply(&q);
    let x_next = lincomb(1.0 - theta_k, &q, theta_k, &f_q)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, &u, &y, &a_u, &a_y);
    let lemma = tseng_pair(&u, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(&u, &y)?,
        residual_tz,
        halfspace_slack: None,
        lemma_lhs_rhs: lemma,
        xi_k,
        psi_k: psi,
        u,
        y,
        z,
        q,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// Halpern subgradient-extragradient baseline: fixed step `0.99/L`, no
/// inertia. The anchor mixes into `z` before `T` is applied, and the outer
/// step is the Mann combination `x_next = varphi_k x + (1 - varphi_k) T z`.
pub fn step_hsegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let psi = state.psi;
    let x = &state.x_cur;

    let a_x = p.a.apply(x);
    let v = lincomb(1.0, x, -psi, &a_x)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let hk = halfspace_for_subgradient_step(x, psi, &a_x, &y)?;
    let a_y = p.a.apply(&y);
    let w_raw = lincomb(1.0, x, -psi, &a_y)?;
    let w = hk.project(&w_raw)?;
    ensure_finite(&w, "z", k)?;
    let slack = inner(&sub(&v, &y)?, &sub(&w, &y)?)?;

    let z = lincomb(theta_k, &state.x0, 1.0 - theta_k, &w)?;
    let tz = p.t.apply(&z);
    let residual_tz = dist(&tz, &z)?;
    let x_next = lincomb(varphi_k, x, 1.0 - varphi_k, &tz)?;
    ensure_finite(&x_next, "outer", k)?;

    let report = StepReport {
        residual_uy: dist(x, &y)?,
        residual_tz,
        halfspace_slack: Some(slack),
        lemma_lhs_rhs: None,
        xi_k: 0.0,
        psi_k: psi,
        u: x.clone(),
        y,
        z,
        q: tz,
    };
    Ok((advance(state, x_next, psi), report))
}

/// Viscosity subgradient-extragradient baseline: no inertia, adaptive step on
/// `(x, y)` pairs, outer step `x_next = theta_k f(x) + (1 - theta_k)
/// [(1 - varphi_k) z + varphi_k T z]`.
pub fn step_vsegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let f = p.f.as_ref().ok_or(Error::MissingComponent {
        algorithm: "VSEGM",
        what: "the contraction mapping f",
    })?;
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let psi = state.psi;
    let x = &state.x_cur;

    let a_x = p.a.apply(x);
    let v = lincomb(1.0, x, -psi, &a_x)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let hk = halfspace_for_subgradient_step(x, psi, &a_x, &y)?;
    let a_y = p.a.apply(&y);
    let w = lincomb(1.0, x, -psi, &a_y)?;
    let z = hk.project(&w)?;
    ensure_finite(&z, "z", k)?;
    let slack = inner(&sub(&v, &y)?, &sub(&z, &y)?)?;

    let (m, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&m, "q", k)?;
    let f_x = f.apply(x);
    let x_next = lincomb(theta_k, &f_x, 1.0 - theta_k, &m)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, x, &y, &a_x, &a_y);
    let lemma = energy_pair(p, x, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(x, &y)?,
        residual_tz,
        halfspace_slack: Some(slack),
        lemma_lhs_rhs: lemma,
        xi_k: 0.0,
        psi_k: psi,
        u: x.clone(),
        y,
        z,
        q: m,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// Viscosity Tseng extragradient baseline: no inertia, Tseng correction
/// `z = y - psi (Ay - Ax)`, viscosity outer step as in [`step_vsegm`].
pub fn step_vtegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let f = p.f.as_ref().ok_or(Error::MissingComponent {
        algorithm: "VTEGM",
        what: "the contraction mapping f",
    })?;
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let psi = state.psi;
    let x = &state.x_cur;

    let a_x = p.a.apply(x);
    let v = lincomb(1.0, x, -psi, &a_x)?;
    let y = p.feasible.project(&v)?;
    ensure_finite(&y, "y", k)?;

    let a_y = p.a.apply(&y);
    let correction = sub(&a_y, &a_x)?;
    let z = lincomb(1.0, &y, -psi, &correction)?;
    ensure_finite(&z, "z", k)?;

    let (m, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&m, "q", k)?;
    let f_x = f.apply(x);
    let x_next = lincomb(theta_k, &f_x, 1.0 - theta_k, &m)?;
    ensure_finite(&x_next, "outer", k)?;

    let psi_next = adaptive_psi_next(psi, params.phi, x, &y, &a_x, &a_y);
    let lemma = tseng_pair(x, &y, &z, params.phi, psi, psi_next)?;
    let report = StepReport {
        residual_uy: dist(x, &y)?,
        residual_tz,
        halfspace_slack: None,
        lemma_lhs_rhs: lemma,
        xi_k: 0.0,
        psi_k: psi,
        u: x.clone(),
        y,
        z,
        q: m,
    };
    Ok((advance(state, x_next, psi_next), report))
}

/// Tseng extragradient baseline with Armijo line search: `psi_k` and `y`
/// come from backtracking at the current iterate, then a Tseng correction and
/// a hybrid steepest-descent outer step. The accepted step directly satisfies
/// `psi ||Ax - Ay|| <= phi ||x - y||`, so the Tseng residual bound is
/// reported with ratio one.
pub fn step_stegm(
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    let k = state.k;
    let theta_k = params.rules.theta(k);
    let varphi_k = params.rules.varphi(k);
    let x = &state.x_cur;

    let (psi, y) = armijo_psi(
        params.armijo_alpha,
        params.armijo_ell,
        params.armijo_phi,
        x,
        &p.a,
        &p.feasible,
    )?;
    ensure_finite(&y, "y", k)?;

    let a_x = p.a.apply(x);
    let a_y = p.a.apply(&y);
    let correction = sub(&a_y, &a_x)?;
    let z = lincomb(1.0, &y, -psi, &correction)?;
    ensure_finite(&z, "z", k)?;

    let (q, residual_tz) = mann_step(&z, &p.t, varphi_k)?;
    ensure_finite(&q, "q", k)?;
    let s_q = p.s.apply(&q);
    let x_next = lincomb(1.0, &q, -params.sigma * theta_k, &s_q)?;
    ensure_finite(&x_next, "outer", k)?;

    let lemma = tseng_pair(x, &y, &z, params.armijo_phi, psi, psi)?;
    let report = StepReport {
        residual_uy: dist(x, &y)?,
        residual_tz,
        halfspace_slack: None,
        lemma_lhs_rhs: lemma,
        xi_k: 0.0,
        psi_k: psi,
        u: x.clone(),
        y,
        z,
        q,
    };
    Ok((advance(state, x_next, psi), report))
}

/// Dispatch one step of `alg`.
pub fn step(
    alg: AlgorithmId,
    state: &SolverState,
    p: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, StepReport)> {
    match alg {
        AlgorithmId::Isegm => step_isegm(state, p, params),
        AlgorithmId::Itegm => step_itegm(state, p, params),
        AlgorithmId::Cor1Halpern => step_cor1(state, p, params),
        AlgorithmId::Cor2Viscosity => step_cor2(state, p, params),
        AlgorithmId::Hsegm => step_hsegm(state, p, params),
        AlgorithmId::Vsegm => step_vsegm(state, p, params),
        AlgorithmId::Vtegm => step_vtegm(state, p, params),
        AlgorithmId::Stegm => step_stegm(state, p, params),
    }
}

/// Check problem metadata and parameters against what `alg` needs; runs
/// before the first step.
pub fn validate_run_setup(p: &Problem, alg: AlgorithmId, params: &SolverParams) -> Result<()> {
    params.validate_scalars()?;
    let vartheta = p.t.meta.demicontractive.unwrap_or(0.0);
    params.rules.validate_prefix(vartheta, 10_000)?;
    if alg.uses_selector() {
        let eta =
            p.s.meta
                .strong_monotonicity
                .ok_or(Error::MissingComponent {
                    algorithm: alg.name(),
                    what: "a strong-monotonicity modulus on S",
                })?;
        let kappa = p.s.meta.lipschitz.ok_or(Error::MissingComponent {
            algorithm: alg.name(),
            what: "a Lipschitz constant on S",
        })?;
        // gamma exists exactly under these conditions
        ContractionDiagnostics::new(params.sigma, eta, kappa, 1.0)?;
    }
    if alg.needs_contraction() && p.f.is_none() {
        return Err(Error::MissingComponent {
            algorithm: alg.name(),
            what: "the contraction mapping f",
        });
    }
    if alg == AlgorithmId::Hsegm {
        let l = p.a.meta.lipschitz.ok_or(Error::MissingComponent {
            algorithm: "HSEGM",
            what: "a Lipschitz constant on A",
        })?;
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::invalid("lipschitz", "must be positive for HSEGM"));
        }
    }
    Ok(())
}

fn initial_psi(p: &Problem, alg: AlgorithmId, params: &SolverParams) -> f64 {
    match alg {
        AlgorithmId::Hsegm => 0.99 / p.a.meta.lipschitz.unwrap_or(1.0),
        AlgorithmId::Stegm => params.armijo_alpha,
        _ => params.psi1,
    }
}

/// Run `alg` from `x0 = x1 = start` until the stop rule fires. The trace
/// records, per iteration, the pre-step error `D_k` (when the solution is
/// known), the step parameters, the residuals, and cumulative wall time.
pub fn run(
    p: &Problem,
    alg: AlgorithmId,
    params: &SolverParams,
    start: &HVector,
    stop: &StopRule,
) -> Result<IterationTrace> {
    run_detailed(p, alg, params, start, stop).map(|(trace, _)| trace)
}

/// As [`run`], also returning every step's full [`StepReport`].
pub fn run_detailed(
    p: &Problem,
    alg: AlgorithmId,
    params: &SolverParams,
    start: &HVector,
    stop: &StopRule,
) -> Result<(IterationTrace, Vec<StepReport>)> {
    run_from_pair_detailed(p, alg, params, start, start, stop)
}

/// As [`run_detailed`] with distinct start points: `x0` is both the iterate
/// at index 0 and the Halpern anchor, `x1` the first iterate.
pub fn run_from_pair_detailed(
    p: &Problem,
    alg: AlgorithmId,
    params: &SolverParams,
    x0: &HVector,
    x1: &HVector,
    stop: &StopRule,
) -> Result<(IterationTrace, Vec<StepReport>)> {
    validate_run_setup(p, alg, params)?;
    for v in [x0, x1] {
        if v.space() != &p.space {
            return Err(Error::SpaceMismatch {
                left: *v.space(),
                right: p.space,
            });
        }
    }
    let mut state = SolverState {
        k: 1,
        x_prev: x0.clone(),
        x_cur: x1.clone(),
        psi: initial_psi(p, alg, params),
        x0: x0.clone(),
    };
    let clock = Instant::now();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut failure = None;
    for k in 1..=stop.max_iter {
        let d_k = match &p.known_solution {
            Some(star) => Some(dist(&state.x_cur, star)?),
            None => None,
        };
        if let (Some(d), Some(tol)) = (d_k, stop.tol) {
            if d <= tol {
                break;
            }
        }
        match step(alg, &state, p, params) {
            Ok((next, report)) => {
                rows.push(TraceRow {
                    k,
                    d_k,
                    psi_k: report.psi_k,
                    xi_k: report.xi_k,
                    residual_uy: report.residual_uy,
                    residual_tz: report.residual_tz,
                    elapsed_s: clock.elapsed().as_secs_f64(),
                });
                reports.push(report);
                state = next;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok((
        IterationTrace {
            algorithm: alg,
            rows,
            final_point: state.x_cur,
            failure,
        },
        reports,
    ))
}

/// Empirical check of the contraction bound: the largest observed ratio
/// `||(I - theta sigma S)(U x) - (I - theta sigma S)(U y)|| / ||x - y||` over
/// `samples` random pairs. Under the preconditions the contract is
/// `ratio <= 1 - theta * gamma` up to rounding. `theta = 0` is admitted and
/// reduces the bound to plain nonexpansiveness of `U`.
pub fn verify_contraction<U>(
    s: &MappingHandle,
    u: U,
    sigma: f64,
    theta: f64,
    samples: usize,
    space: &SpaceDescriptor,
    seed: u64,
) -> Result<f64>
where
    U: Fn(&HVector) -> Result<HVector>,
{
    let eta = s.meta.strong_monotonicity.ok_or(Error::MissingComponent {
        algorithm: "verify_contraction",
        what: "a strong-monotonicity modulus on S",
    })?;
    let kappa = s.meta.lipschitz.ok_or(Error::MissingComponent {
        algorithm: "verify_contraction",
        what: "a Lipschitz constant on S",
    })?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid("theta", "must lie in [0, 1]"));
    }
    if theta > 0.0 {
        // validates 0 < eta <= kappa and the sigma bound
        ContractionDiagnostics::new(sigma, eta, kappa, theta)?;
    }
    let composed = |x: &HVector| -> Result<HVector> {
        let ux = u(x)?;
        let sux = s.apply(&ux);
        lincomb(1.0, &ux, -(theta * sigma), &sux)
    };
    let mut rng = SplitMix64::stream(seed, 2);
    let n = space.len();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let xs: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let x = HVector::new(*space, xs)?;
        let y = HVector::new(*space, ys)?;
        let d = dist(&x, &y)?;
        if d < 1e-9 {
            continue;
        }
        let ratio = dist(&composed(&x)?, &composed(&y)?)? / d;
        max_ratio = max_ratio.max(ratio);
    }
    Ok(max_ratio)
}

/// Check the per-iteration energy inequality of the subgradient-extragradient
/// family against a known solution:
/// `||z - x*||^2 <= ||u - x*||^2 - c (||y - u||^2 + ||z - y||^2)` with
/// `c = 1 - phi psi_k / psi_{k+1}`, to within
/// [`ITERATION_INEQUALITY_SLACK`]. Errs when `c <= 0`, where the bound
/// carries no information.
pub fn verify_iteration_inequality(
    report: &StepReport,
    x_dag: &HVector,
    phi: f64,
    psi_k: f64,
    psi_k1: f64,
) -> Result<bool> {
    let coeff = 1.0 - phi * psi_k / psi_k1;
    if coeff.is_nan() || coeff <= 0.0 {
        return Err(Error::invalid(
            "psi",
            format!("1 - phi*psi_k/psi_(k+1) = {coeff} must be positive"),
        ));
    }
    let lhs = dist(&report.z, x_dag)?.powi(2);
    let rhs = dist(&report.u, x_dag)?.powi(2)
        - coeff * (dist(&report.y, &report.u)?.powi(2) + dist(&report.z, &report.y)?.powi(2));
    Ok(lhs <= rhs + ITERATION_INEQUALITY_SLACK)
}
