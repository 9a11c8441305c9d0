//! Step-size and inertia rules: the adaptive step `psi_k`, the inertial
//! parameter `xi_k`, the Armijo backtracking search used by the STEGM
//! baseline, and the scalar sequences `theta_k`, `zeta_k`, `varphi_k`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{lincomb, norm, sub, HVector};
use crate::operators::MappingHandle;
use crate::projections::FeasibleSet;

/// Iterates closer than this relative distance are treated as coincident when
/// evaluating the inertial rule; exact float equality is too brittle for the
/// degenerate branch.
pub const COINCIDENT_REL_TOL: f64 = 1e-14;

/// `||Au - Ay||` below this is treated as zero in the adaptive step update.
pub const ZERO_DENOM_TOL: f64 = 1e-14;

/// Backtracking cap for the Armijo search; exceeding it signals a
/// misconfigured problem rather than hanging.
pub const ARMIJO_MAX_BACKTRACKS: usize = 100;

type SeqFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// The scalar sequences driving the outer steps. `theta(k)` must be positive,
/// tend to zero, and have a divergent sum (the divergence is a documented
/// contract on the caller, not machine-checked); `zeta(k)/theta(k)` must tend
/// to zero (checked as nonincreasing on a finite prefix); `varphi(k)` must
/// stay within `[lower, 1 - vartheta)` for the problem's demicontractivity
/// constant.
#[derive(Clone)]
pub struct SequenceRules {
    theta: SeqFn,
    zeta: SeqFn,
    varphi: SeqFn,
    /// Lower bound witness for the `varphi` sequence.
    pub varphi_lower: f64,
}

impl std::fmt::Debug for SequenceRules {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SequenceRules")
            .field("varphi_lower", &self.varphi_lower)
            .finish()
    }
}

impl SequenceRules {
    pub fn new(
        theta: impl Fn(usize) -> f64 + Send + Sync + 'static,
        zeta: impl Fn(usize) -> f64 + Send + Sync + 'static,
        varphi: impl Fn(usize) -> f64 + Send + Sync + 'static,
        varphi_lower: f64,
    ) -> Self {
        SequenceRules {
            theta: Arc::new(theta),
            zeta: Arc::new(zeta),
            varphi: Arc::new(varphi),
            varphi_lower,
        }
    }

    pub fn theta(&self, k: usize) -> f64 {
        (self.theta)(k)
    }

    pub fn zeta(&self, k: usize) -> f64 {
        (self.zeta)(k)
    }

    pub fn varphi(&self, k: usize) -> f64 {
        (self.varphi)(k)
    }

    /// Finite-prefix validation of the sequence contracts. `vartheta` is the
    /// demicontractivity constant of the problem's fixed-point mapping. The
    /// `varphi` lower bound is checked inclusively: the default sequence
    /// attains its infimum at `k = 1`.
    pub fn validate_prefix(&self, vartheta: f64, horizon: usize) -> Result<()> {
        if !self.varphi_lower.is_finite() || self.varphi_lower <= 0.0 {
            return Err(Error::invalid("varphi_lower", "must be positive"));
        }
        let mut prev_ratio = f64::INFINITY;
        for k in 1..=horizon {
            let th = self.theta(k);
            if !(th > 0.0 && th < 1.0) {
                return Err(Error::invalid(
                    "theta",
                    format!("theta({k}) = {th} outside (0, 1)"),
                ));
            }
            let ze = self.zeta(k);
            if !(ze > 0.0 && ze.is_finite()) {
                return Err(Error::invalid(
                    "zeta",
                    format!("zeta({k}) = {ze} must be positive"),
                ));
            }
            let ratio = ze / th;
            if ratio > prev_ratio * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "zeta",
                    format!("zeta/theta increases at k = {k}; it must tend to zero"),
                ));
            }
            prev_ratio = ratio;
            // varphi checked on a short prefix; it is typically monotone
            if k <= 1000 {
                let ph = self.varphi(k);
                if !(ph >= self.varphi_lower && ph < 1.0 - vartheta) {
                    return Err(Error::invalid(
                        "varphi",
                        format!(
                            "varphi({k}) = {ph} outside [{}, {})",
                            self.varphi_lower,
                            1.0 - vartheta
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The benchmark defaults: `theta(k) = 1/(k+1)`, `zeta(k) = 1/(k+1)^2`,
/// `varphi(k) = k/(2k+1)` with lower bound `1/3`.
pub fn paper_default_rules() -> SequenceRules {
    SequenceRules::new(
        |k| 1.0 / (k as f64 + 1.0),
        |k| 1.0 / ((k as f64 + 1.0) * (k as f64 + 1.0)),
        |k| k as f64 / (2.0 * k as f64 + 1.0),
        1.0 / 3.0,
    )
}

/// Scalar knobs of one solver run. `max_iter` is the default iteration
/// budget; the harness may override it per run.
#[derive(Clone, Debug)]
pub struct SolverParams {
    /// Inertial cap `xi > 0`.
    pub xi: f64,
    /// Initial adaptive step `psi_1 > 0`.
    pub psi1: f64,
    /// Adaptive step-shrink factor in `(0, 1)`.
    pub phi: f64,
    /// Hybrid steepest-descent weight; must satisfy
    /// `sigma < 2 eta / kappa^2` for the problem's selector.
    pub sigma: f64,
    pub rules: SequenceRules,
    /// Armijo initial trial step.
    pub armijo_alpha: f64,
    /// Armijo backtracking ratio in `(0, 1)`.
    pub armijo_ell: f64,
    /// Armijo acceptance factor in `(0, 1)`; the line-search baseline tunes
    /// this independently of `phi`.
    pub armijo_phi: f64,
    pub max_iter: usize,
}

impl SolverParams {
    /// The parameter set used by all built-in benchmarks: `xi = 0.4`,
    /// `psi_1 = 0.9`, `phi = 0.5`, `sigma = 0.5`, default sequences, Armijo
    /// `alpha = 0.5`, `ell = 0.5`, `phi = 0.4`, and a 400-iteration budget.
    pub fn paper_preset() -> Self {
        SolverParams {
            xi: 0.4,
            psi1: 0.9,
            phi: 0.5,
            sigma: 0.5,
            rules: paper_default_rules(),
            armijo_alpha: 0.5,
            armijo_ell: 0.5,
            armijo_phi: 0.4,
            max_iter: 400,
        }
    }

    pub fn validate_scalars(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid("xi", "must be positive"));
        }
        if !(self.psi1 > 0.0 && self.psi1.is_finite()) {
            return Err(Error::invalid("psi1", "must be positive"));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::invalid("phi", "must lie in (0, 1)"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if !(self.armijo_alpha > 0.0 && self.armijo_alpha.is_finite()) {
            return Err(Error::invalid("armijo_alpha", "must be positive"));
        }
        if !(self.armijo_ell > 0.0 && self.armijo_ell < 1.0) {
            return Err(Error::invalid("armijo_ell", "must lie in (0, 1)"));
        }
        if !(self.armijo_phi > 0.0 && self.armijo_phi < 1.0) {
            return Err(Error::invalid("armijo_phi", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Inertial weight `xi_k`: `min(zeta_k / ||x_k - x_{k-1}||, xi)` when the
/// iterates differ, `xi` otherwise. The returned value always satisfies
/// `xi_k * ||x_k - x_{k-1}|| <= zeta_k` for distinct iterates; a one-ulp
/// correction absorbs the rounding of the divide-multiply round trip.
pub fn inertial_xi(xi: f64, zeta_k: f64, x_k: &HVector, x_km1: &HVector) -> f64 {
    debug_assert!(xi > 0.0 && zeta_k > 0.0);
    let delta = match sub(x_k, x_km1) {
        Ok(d) => d,
        Err(_) => return xi,
    };
    let dist = norm(&delta);
    if dist <= COINCIDENT_REL_TOL * (1.0 + norm(x_k)) {
        return xi;
    }
    let mut xi_k = (zeta_k / dist).min(xi);
    while xi_k * dist > zeta_k && xi_k > 0.0 {
        xi_k = f64::from_bits(xi_k.to_bits() - 1);
    }
    xi_k
}

/// Next adaptive step:
/// `min(phi * ||u - y|| / ||Au - Ay||, psi_k)` when `Au != Ay`, else `psi_k`.
/// The sequence this produces is nonincreasing and bounded below by
/// `min(psi_1, phi / L)` when `A` is `L`-Lipschitz.
pub fn adaptive_psi_next(
    psi_k: f64,
    phi: f64,
    u: &HVector,
    y: &HVector,
    a_u: &HVector,
    a_y: &HVector,
) -> f64 {
    debug_assert!(psi_k > 0.0 && phi > 0.0 && phi < 1.0);
    let denom = match sub(a_u, a_y) {
        Ok(d) => norm(&d),
        Err(_) => return psi_k,
    };
    if denom <= ZERO_DENOM_TOL {
        return psi_k;
    }
    let numer = match sub(u, y) {
        Ok(d) => norm(&d),
        Err(_) => return psi_k,
    };
    (phi * numer / denom).min(psi_k)
}

/// Armijo backtracking: the largest `psi = alpha * ell^m` (`m = 0, 1, 2, ...`)
/// with `psi * ||Ax - Ay(psi)|| <= phi * ||x - y(psi)||`, where
/// `y(psi) = P_C(x - psi * Ax)`. Returns the accepted step together with its
/// `y`. Terminates for Lipschitz `A`; the backtracking cap converts a
/// misconfigured search into an error instead of a hang.
pub fn armijo_psi(
    alpha: f64,
    ell: f64,
    phi: f64,
    x: &HVector,
    a: &MappingHandle,
    c: &FeasibleSet,
) -> Result<(f64, HVector)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("armijo_alpha", "must be positive"));
    }
    if !(ell > 0.0 && ell < 1.0) {
        return Err(Error::invalid("armijo_ell", "must lie in (0, 1)"));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::invalid("armijo_phi", "must lie in (0, 1)"));
    }
    let a_x = a.apply(x);
    let mut psi = alpha;
    for _ in 0..=ARMIJO_MAX_BACKTRACKS {
        let shifted = lincomb(1.0, x, -psi, &a_x)?;
        let y = c.project(&shifted)?;
        let a_y = a.apply(&y);
        let lhs = psi * norm(&sub(&a_x, &a_y)?);
        let rhs = phi * norm(&sub(x, &y)?);
        if lhs <= rhs {
            return Ok((psi, y));
        }
        psi *= ell;
    }
    Err(Error::ArmijoCapExceeded {
        max_backtracks: ARMIJO_MAX_BACKTRACKS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{HVector, SpaceDescriptor};
    use crate::operators::MappingHandle;

    fn euclid(coords: &[f64]) -> HVector {
        HVector::new(
            SpaceDescriptor::euclidean(coords.len()).unwrap(),
            coords.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn inertial_xi_coincident_iterates() {
        let x = euclid(&[1.0, 2.0]);
        assert_eq!(inertial_xi(0.4, 0.01, &x, &x.clone()), 0.4);
    }

    #[test]
    fn inertial_xi_formula_values() {
        // zeta = 0.01, ||delta|| = 1 -> 0.01
        let x = euclid(&[1.0, 0.0]);
        let y = euclid(&[0.0, 0.0]);
        assert_eq!(inertial_xi(0.4, 0.01, &x, &y), 0.01);
        // zeta = 10, ||delta|| = 1 -> clamped to xi
        assert_eq!(inertial_xi(0.4, 10.0, &x, &y), 0.4);
    }

    #[test]
    fn inertial_bound_holds_exactly() {
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..5000 {
            let x = euclid(&[rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)]);
            let y = euclid(&[rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)]);
            let zeta = rng.uniform(1e-6, 2.0);
            let xi = rng.uniform(1e-3, 1.0);
            let d = norm(&sub(&x, &y).unwrap());
            if d <= COINCIDENT_REL_TOL * (1.0 + norm(&x)) {
                continue;
            }
            let xi_k = inertial_xi(xi, zeta, &x, &y);
            assert!(xi_k > 0.0 && xi_k <= xi);
            assert!(
                xi_k * d <= zeta,
                "xi_k * d = {} > zeta = {}",
                xi_k * d,
                zeta
            );
        }
    }

    #[test]
    fn adaptive_psi_unchanged_when_operator_values_match() {
        let u = euclid(&[1.0, 1.0]);
        let y = euclid(&[0.0, 1.0]);
        let a_same = euclid(&[2.0, 2.0]);
        assert_eq!(
            adaptive_psi_next(0.9, 0.5, &u, &y, &a_same, &a_same.clone()),
            0.9
        );
    }

    #[test]
    fn adaptive_psi_formula_values() {
        // ||u - y|| = 1, ||Au - Ay|| = 4, phi = 0.5 -> 0.125
        let u = euclid(&[1.0, 0.0]);
        let y = euclid(&[0.0, 0.0]);
        let a_u = euclid(&[4.0, 0.0]);
        let a_y = euclid(&[0.0, 0.0]);
        assert_eq!(adaptive_psi_next(0.9, 0.5, &u, &y, &a_u, &a_y), 0.125);
        // min keeps the previous step when it is already smaller
        let a_u2 = euclid(&[1.0, 0.0]);
        assert_eq!(adaptive_psi_next(0.1, 0.5, &u, &y, &a_u2, &a_y), 0.1);
    }

    #[test]
    fn psi_sequence_nonincreasing_with_floor() {
        // random (u, y) pairs under a 2-Lipschitz linear map: the sequence
        // never increases and never drops below min(psi1, phi/L)
        let a = MappingHandle::scaling(2.0);
        let mut rng = crate::rng::SplitMix64::new(8);
        let phi = 0.5;
        let mut psi = 0.9;
        let floor = (0.9_f64).min(phi / 2.0);
        for _ in 0..2000 {
            let u = euclid(&[rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)]);
            let y = euclid(&[rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)]);
            let next = adaptive_psi_next(psi, phi, &u, &y, &a.apply(&u), &a.apply(&y));
            assert!(next <= psi);
            assert!(next >= floor - 1e-12);
            psi = next;
        }
    }

    #[test]
    fn armijo_accepts_immediately_when_operator_vanishes() {
        let a = MappingHandle::new(|x: &HVector| HVector::zeros(*x.space()));
        let c = FeasibleSet::whole_space();
        let x = euclid(&[2.0, -1.0]);
        let (psi, y) = armijo_psi(0.5, 0.5, 0.4, &x, &a, &c).unwrap();
        assert_eq!(psi, 0.5);
        assert_eq!(y, x);
    }

    #[test]
    fn armijo_one_dimensional_enumeration_oracle() {
        // A(x) = 2x on R, C the whole space, x = 1: y(psi) = 1 - 2 psi,
        // condition psi * 4 psi <= 0.4 * 2 psi forces psi <= 0.2, so the grid
        // {0.5, 0.25, 0.125, ...} accepts 0.125.
        let a = MappingHandle::scaling(2.0);
        let c = FeasibleSet::whole_space();
        let x = euclid(&[1.0]);
        // independent enumeration of the grid with the closed-form y(psi)
        let mut expected = None;
        let mut trial: f64 = 0.5;
        for _ in 0..60 {
            let y = 1.0 - 2.0 * trial;
            let lhs = trial * (2.0 - 2.0 * y).abs();
            let rhs = 0.4 * (1.0 - y).abs();
            if lhs <= rhs {
                expected = Some(trial);
                break;
            }
            trial *= 0.5;
        }
        assert_eq!(expected, Some(0.125));
        let (psi, y) = armijo_psi(0.5, 0.5, 0.4, &x, &a, &c).unwrap();
        assert_eq!(psi, 0.125);
        assert!((y.coords()[0] - (1.0 - 2.0 * 0.125)).abs() < 1e-15);
    }

    #[test]
    fn armijo_at_a_solution_returns_alpha() {
        // x = P_C(x - psi Ax) for every psi at a solution: both sides zero
        let a = MappingHandle::scaling(1.0);
        let c = FeasibleSet::whole_space();
        let x = euclid(&[0.0, 0.0]);
        let (psi, y) = armijo_psi(0.5, 0.5, 0.4, &x, &a, &c).unwrap();
        assert_eq!(psi, 0.5);
        assert_eq!(y, x);
    }

    #[test]
    fn armijo_result_is_maximal_on_the_grid() {
        let p = crate::operators::make_example1().unwrap();
        let mut rng = crate::rng::SplitMix64::new(4);
        for _ in 0..50 {
            let x = euclid(&[rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)]);
            let (psi, y) = armijo_psi(0.5, 0.5, 0.4, &x, &p.a, &p.feasible).unwrap();
            // accepted step satisfies the defining inequality
            let a_x = p.a.apply(&x);
            let a_y = p.a.apply(&y);
            assert!(
                psi * norm(&sub(&a_x, &a_y).unwrap()) <= 0.4 * norm(&sub(&x, &y).unwrap()) + 1e-14
            );
            if psi < 0.5 {
                // one grid step larger violates it
                let bigger = psi / 0.5;
                let shifted = lincomb(1.0, &x, -bigger, &a_x).unwrap();
                let yb = p.feasible.project(&shifted).unwrap();
                let lhs = bigger * norm(&sub(&a_x, &p.a.apply(&yb)).unwrap());
                let rhs = 0.4 * norm(&sub(&x, &yb).unwrap());
                assert!(lhs > rhs);
            }
        }
    }

    #[test]
    fn armijo_cap_is_an_error() {
        // a (monotone) step discontinuity at the base point violates the
        // Lipschitz premise; the jump is large enough that y(psi) never
        // rounds back onto x within the backtracking budget
        let a = MappingHandle::new(|x: &HVector| {
            let coords = x
                .coords()
                .iter()
                .map(|v| if *v < 1.0 { 0.0 } else { 1e100 })
                .collect();
            HVector::from_parts(*x.space(), coords)
        });
        let c = FeasibleSet::whole_space();
        let x = euclid(&[1.0]);
        assert!(matches!(
            armijo_psi(0.5, 0.5, 0.4, &x, &a, &c),
            Err(Error::ArmijoCapExceeded { .. })
        ));
    }

    #[test]
    fn paper_default_sequence_values() {
        let rules = paper_default_rules();
        assert_eq!(rules.theta(1), 0.5);
        assert_eq!(rules.zeta(9), 0.01);
        assert!((rules.varphi(1) - 1.0 / 3.0).abs() < 1e-15);
        // varphi stays strictly below 1/2 = 1 - vartheta for vartheta = 0
        for k in 1..=10_000 {
            assert!(rules.varphi(k) < 0.5);
        }
        rules.validate_prefix(0.0, 10_000).unwrap();
    }

    #[test]
    fn sequence_validation_rejects_bad_rules() {
        // zeta/theta increasing
        let bad = SequenceRules::new(
            |k| 1.0 / (k as f64 + 1.0),
            |_| 1.0,
            |k| k as f64 / (2.0 * k as f64 + 1.0),
            1.0 / 3.0,
        );
        assert!(bad.validate_prefix(0.0, 10_000).is_err());
        // theta leaving (0, 1)
        let bad_theta = SequenceRules::new(
            |_| 1.5,
            |k| 1.0 / ((k * k) as f64),
            |k| k as f64 / (2.0 * k as f64 + 1.0),
            1.0 / 3.0,
        );
        assert!(bad_theta.validate_prefix(0.0, 10).is_err());
    }

    #[test]
    fn params_scalar_validation() {
        let mut p = SolverParams::paper_preset();
        p.validate_scalars().unwrap();
        p.phi = 1.0;
        assert!(p.validate_scalars().is_err());
    }
}
