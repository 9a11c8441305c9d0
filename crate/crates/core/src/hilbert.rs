//! Hilbert-space vectors for the two spaces the solvers operate in:
//! Euclidean `R^n` and a uniform-grid discretization of `L^2([0,1])`.
//!
//! Grid vectors hold nodal values at `t_i = i/(points-1)`; inner products and
//! norms use trapezoidal quadrature weights, so the `L^2` space is a weighted
//! dot-product space and every closed-form projection carries over unchanged.

use std::fmt;

use crate::error::{Error, Result};

/// Which Hilbert space a vector lives in. Two vectors may combine only if
/// their descriptors are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceDescriptor {
    Euclidean {
        dim: usize,
    },
    /// `points` nodal values on the uniform grid over `[0, 1]`.
    GridL2 {
        points: usize,
    },
}

impl SpaceDescriptor {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        Ok(SpaceDescriptor::Euclidean { dim })
    }

    pub fn grid_l2(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("points", "must be at least 2"));
        }
        Ok(SpaceDescriptor::GridL2 { points })
    }

    /// Number of stored coordinates.
    pub fn len(&self) -> usize {
        match *self {
            SpaceDescriptor::Euclidean { dim } => dim,
            SpaceDescriptor::GridL2 { points } => points,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of coordinate `i`: 1 for Euclidean coordinates,
    /// trapezoid weights `h/2, h, ..., h, h/2` with `h = 1/(points-1)` on the
    /// grid.
    pub fn weight(&self, i: usize) -> f64 {
        match *self {
            SpaceDescriptor::Euclidean { .. } => 1.0,
            SpaceDescriptor::GridL2 { points } => {
                let h = 1.0 / (points - 1) as f64;
                if i == 0 || i == points - 1 {
                    0.5 * h
                } else {
                    h
                }
            }
        }
    }

    /// Grid node `t_i`, if this is a grid space.
    pub fn grid_node(&self, i: usize) -> Option<f64> {
        match *self {
            SpaceDescriptor::Euclidean { .. } => None,
            SpaceDescriptor::GridL2 { points } => Some(i as f64 / (points - 1) as f64),
        }
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpaceDescriptor::Euclidean { dim } => write!(f, "R^{dim}"),
            SpaceDescriptor::GridL2 { points } => write!(f, "L2[0,1]@{points}"),
        }
    }
}

/// A point in a Hilbert space: dense coordinates plus the space tag.
/// Entries are finite; constructors reject NaN and infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct HVector {
    space: SpaceDescriptor,
    coords: Vec<f64>,
}

impl HVector {
    pub fn new(space: SpaceDescriptor, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.len() {
            return Err(Error::invalid(
                "coords",
                format!("length {} does not match space {space}", coords.len()),
            ));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector construction".into(),
            });
        }
        Ok(HVector { space, coords })
    }

    /// Construction without the finiteness scan; used on hot paths where the
    /// caller checks the result (solver steps validate every intermediate).
    pub(crate) fn from_parts(space: SpaceDescriptor, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), space.len());
        HVector { space, coords }
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        HVector {
            space,
            coords: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: SpaceDescriptor, value: f64) -> Result<Self> {
        HVector::new(space, vec![value; space.len()])
    }

    /// Sample a function on the uniform grid of an `L^2([0,1])` space.
    pub fn sample_grid(points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let space = SpaceDescriptor::grid_l2(points)?;
        let coords = (0..points)
            .map(|i| f(space.grid_node(i).expect("grid space")))
            .collect();
        HVector::new(space, coords)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

fn check_same_space(x: &HVector, y: &HVector) -> Result<()> {
    if x.space != y.space {
        return Err(Error::SpaceMismatch {
            left: x.space,
            right: y.space,
        });
    }
    Ok(())
}

/// Inner product of the space: dot product for Euclidean vectors, trapezoidal
/// quadrature of `∫ x(t) y(t) dt` for grid vectors.
pub fn inner(x: &HVector, y: &HVector) -> Result<f64> {
    check_same_space(x, y)?;
    let mut acc = 0.0;
    for (i, (a, b)) in x.coords.iter().zip(&y.coords).enumerate() {
        acc += x.space.weight(i) * a * b;
    }
    Ok(acc)
}

/// Norm induced by [`inner`].
pub fn norm(x: &HVector) -> f64 {
    let mut acc = 0.0;
    for (i, a) in x.coords.iter().enumerate() {
        acc += x.space.weight(i) * a * a;
    }
    acc.sqrt()
}

/// Componentwise `a*x + b*y`.
pub fn lincomb(a: f64, x: &HVector, b: f64, y: &HVector) -> Result<HVector> {
    check_same_space(x, y)?;
    let coords = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(p, q)| a * p + b * q)
        .collect();
    Ok(HVector::from_parts(x.space, coords))
}

pub fn add(x: &HVector, y: &HVector) -> Result<HVector> {
    lincomb(1.0, x, 1.0, y)
}

pub fn sub(x: &HVector, y: &HVector) -> Result<HVector> {
    lincomb(1.0, x, -1.0, y)
}

pub fn scale(a: f64, x: &HVector) -> HVector {
    let coords = x.coords.iter().map(|p| a * p).collect();
    HVector::from_parts(x.space, coords)
}

pub fn dist(x: &HVector, y: &HVector) -> Result<f64> {
    Ok(norm(&sub(x, y)?))
}

/// Quadrature value of `∫_0^1 x(t) dt` for grid vectors (weighted coordinate
/// sum in general).
pub fn quadrature_integral(x: &HVector) -> f64 {
    x.coords
        .iter()
        .enumerate()
        .map(|(i, a)| x.space.weight(i) * a)
        .sum()
}
