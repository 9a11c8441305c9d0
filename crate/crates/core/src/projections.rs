//! Metric projections onto the feasible sets used by the solvers: boxes,
//! balls, half-spaces, and the trivial whole space.
//!
//! All projections are closed-form. Half-space projections back the
//! subgradient-extragradient steps, where the second projection of the
//! classical extragradient method is replaced by a projection onto a
//! constructed half-space containing the feasible set.

use crate::error::{Error, Result};
use crate::hilbert::{inner, lincomb, norm, sub, HVector, SpaceDescriptor};

/// Below this normal magnitude a half-space degenerates to the whole space
/// and its projection is the identity.
pub const DEGENERATE_NORMAL: f64 = 1e-14;

/// Absolute tolerance on constraint residuals for membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A closed convex feasible set with a closed-form metric projection.
#[derive(Clone, Debug)]
pub enum FeasibleSet {
    WholeSpace,
    Box {
        lower: HVector,
        upper: HVector,
    },
    Ball {
        center: HVector,
        radius: f64,
    },
    /// `{ x : <normal, x> <= offset }` in the space's inner product.
    HalfSpace {
        normal: HVector,
        offset: f64,
    },
}

impl FeasibleSet {
    pub fn whole_space() -> Self {
        FeasibleSet::WholeSpace
    }

    pub fn box_set(lower: HVector, upper: HVector) -> Result<Self> {
        if lower.space() != upper.space() {
            return Err(Error::SpaceMismatch {
                left: *lower.space(),
                right: *upper.space(),
            });
        }
        if lower
            .coords()
            .iter()
            .zip(upper.coords())
            .any(|(l, u)| l > u)
        {
            return Err(Error::EmptySet(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn ball(center: HVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", "must be positive and finite"));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    /// `{ x : <normal, x> <= offset }`. A zero normal with `offset >= 0` is
    /// the whole space; a zero normal with `offset < 0` is empty and rejected.
    pub fn half_space(normal: HVector, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::invalid("offset", "must be finite"));
        }
        if norm(&normal) < DEGENERATE_NORMAL && offset < 0.0 {
            return Err(Error::EmptySet(
                "half-space with zero normal and negative offset".into(),
            ));
        }
        Ok(FeasibleSet::HalfSpace { normal, offset })
    }

    /// Space the set's defining vectors live in; `None` for the whole space,
    /// which is compatible with any vector.
    pub fn space(&self) -> Option<&SpaceDescriptor> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Box { lower, .. } => Some(lower.space()),
            FeasibleSet::Ball { center, .. } => Some(center.space()),
            FeasibleSet::HalfSpace { normal, .. } => Some(normal.space()),
        }
    }

    fn check_space(&self, x: &HVector) -> Result<()> {
        if let Some(space) = self.space() {
            if space != x.space() {
                return Err(Error::SpaceMismatch {
                    left: *space,
                    right: *x.space(),
                });
            }
        }
        Ok(())
    }

    /// Metric projection onto the set.
    pub fn project(&self, x: &HVector) -> Result<HVector> {
        self.check_space(x)?;
        match self {
            FeasibleSet::WholeSpace => Ok(x.clone()),
            FeasibleSet::Box { lower, upper } => {
                let coords = x
                    .coords()
                    .iter()
                    .zip(lower.coords())
                    .zip(upper.coords())
                    .map(|((v, l), u)| v.max(*l).min(*u))
                    .collect();
                HVector::new(*x.space(), coords)
            }
            FeasibleSet::Ball { center, radius } => {
                let d = sub(x, center)?;
                let len = norm(&d);
                if len <= *radius {
                    // interior or boundary (covers x == center)
                    Ok(x.clone())
                } else {
                    lincomb(1.0, center, radius / len, &d)
                }
            }
            FeasibleSet::HalfSpace { normal, offset } => {
                let nn = inner(normal, normal)?;
                if nn.sqrt() < DEGENERATE_NORMAL {
                    return Ok(x.clone());
                }
                let excess = inner(normal, x)? - offset;
                if excess <= 0.0 {
                    Ok(x.clone())
                } else {
                    lincomb(1.0, x, -excess / nn, normal)
                }
            }
        }
    }

    /// Nonnegative violation of the set's constraint at `x`; zero inside the
    /// set. Membership is `constraint_residual <= tol` (absolute).
    pub fn constraint_residual(&self, x: &HVector) -> Result<f64> {
        self.check_space(x)?;
        Ok(match self {
            FeasibleSet::WholeSpace => 0.0,
            FeasibleSet::Box { lower, upper } => x
                .coords()
                .iter()
                .zip(lower.coords())
                .zip(upper.coords())
                .map(|((v, l), u)| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Ball { center, radius } => (dist_to(x, center)? - radius).max(0.0),
            FeasibleSet::HalfSpace { normal, offset } => {
                if norm(normal) < DEGENERATE_NORMAL {
                    0.0
                } else {
                    (inner(normal, x)? - offset).max(0.0)
                }
            }
        })
    }

    pub fn contains(&self, x: &HVector, tol: f64) -> Result<bool> {
        Ok(self.constraint_residual(x)? <= tol)
    }
}

fn dist_to(x: &HVector, y: &HVector) -> Result<f64> {
    Ok(norm(&sub(x, y)?))
}

/// Half-space `H = { x : <u - psi*Au - y, x - y> <= 0 }` used by the
/// subgradient-extragradient step. The point `y` lies on its boundary and the
/// feasible set that produced `y` is contained in `H`. When the projection was
/// inactive (`u - psi*Au == y`) the normal vanishes and `H` is the whole
/// space.
pub fn halfspace_for_subgradient_step(
    u: &HVector,
    psi: f64,
    a_u: &HVector,
    y: &HVector,
) -> Result<FeasibleSet> {
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(Error::invalid("psi", "must be positive and finite"));
    }
    let v = lincomb(1.0, u, -psi, a_u)?;
    let normal = sub(&v, y)?;
    let offset = inner(&normal, y)?;
    FeasibleSet::half_space(normal, offset)
}
