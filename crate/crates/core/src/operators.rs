//! The nonlinear mappings of the problem class — the cost operator `A`, the
//! fixed-point mapping `T`, the strongly monotone selector `S`, and an
//! optional contraction `f` — together with metadata and constructors for the
//! three built-in benchmark problems.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{norm, quadrature_integral, sub, HVector, SpaceDescriptor};
use crate::projections::FeasibleSet;
use crate::rng::SplitMix64;

/// Analytic constants attached to a mapping. All optional; solvers check for
/// the ones they need at run start.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MappingMeta {
    /// Lipschitz constant of the mapping itself (the `L` of a cost operator,
    /// the `kappa` of a selector).
    pub lipschitz: Option<f64>,
    /// Strong-monotonicity modulus `eta`.
    pub strong_monotonicity: Option<f64>,
    /// Demicontractivity constant in `[0, 1)`.
    pub demicontractive: Option<f64>,
    /// Contraction constant in `[0, 1)`.
    pub contraction: Option<f64>,
}

impl MappingMeta {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lipschitz {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid("lipschitz", "must be nonnegative"));
            }
        }
        if let Some(eta) = self.strong_monotonicity {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid("strong_monotonicity", "must be nonnegative"));
            }
            if let Some(kappa) = self.lipschitz {
                if eta > 0.0 && eta > kappa {
                    return Err(Error::invalid(
                        "strong_monotonicity",
                        format!("eta = {eta} must not exceed the Lipschitz constant {kappa}"),
                    ));
                }
            }
        }
        if let Some(t) = self.demicontractive {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::invalid("demicontractive", "must lie in [0, 1)"));
            }
        }
        if let Some(r) = self.contraction {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::invalid("contraction", "must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// A mapping `H -> H` plus its metadata. Application is pure and preserves the
/// space descriptor; handles are cheap to clone and safe to share.
#[derive(Clone)]
pub struct MappingHandle {
    apply: Arc<dyn Fn(&HVector) -> HVector + Send + Sync>,
    pub meta: MappingMeta,
}

impl std::fmt::Debug for MappingHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MappingHandle")
            .field("meta", &self.meta)
            .finish()
    }
}

impl MappingHandle {
    pub fn new(apply: impl Fn(&HVector) -> HVector + Send + Sync + 'static) -> Self {
        MappingHandle {
            apply: Arc::new(apply),
            meta: MappingMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: MappingMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn apply(&self, x: &HVector) -> HVector {
        let y = (self.apply)(x);
        debug_assert_eq!(x.space(), y.space(), "mapping must preserve the space");
        y
    }

    /// The identity mapping.
    pub fn identity() -> Self {
        MappingHandle::new(|x: &HVector| x.clone()).with_meta(MappingMeta {
            lipschitz: Some(1.0),
            strong_monotonicity: Some(1.0),
            demicontractive: Some(0.0),
            ..MappingMeta::default()
        })
    }

    /// `x -> c * x` for `c >= 0`; Lipschitz and strongly monotone with
    /// modulus `c`, and a contraction when `c < 1`.
    pub fn scaling(c: f64) -> Self {
        let meta = MappingMeta {
            lipschitz: Some(c),
            strong_monotonicity: Some(c),
            contraction: if c < 1.0 { Some(c) } else { None },
            demicontractive: if c <= 1.0 { Some(0.0) } else { None },
        };
        MappingHandle::new(move |x: &HVector| crate::hilbert::scale(c, x)).with_meta(meta)
    }
}

/// Bundle of one benchmark instance: cost operator `A` over the feasible set
/// `C`, fixed-point mapping `T`, selector `S`, optional contraction `f`, and
/// (when analytically known) the common solution.
#[derive(Clone, Debug)]
pub struct Problem {
    pub space: SpaceDescriptor,
    pub a: MappingHandle,
    pub feasible: FeasibleSet,
    pub t: MappingHandle,
    pub s: MappingHandle,
    pub f: Option<MappingHandle>,
    pub known_solution: Option<HVector>,
}

/// Residual tolerance accepted when certifying a claimed solution.
const SOLUTION_RESIDUAL_TOL: f64 = 1e-9;

impl Problem {
    pub fn new(
        space: SpaceDescriptor,
        a: MappingHandle,
        feasible: FeasibleSet,
        t: MappingHandle,
        s: MappingHandle,
        f: Option<MappingHandle>,
        known_solution: Option<HVector>,
    ) -> Result<Self> {
        a.meta.validate()?;
        t.meta.validate()?;
        s.meta.validate()?;
        if let Some(fm) = &f {
            fm.meta.validate()?;
        }
        if let Some(set_space) = feasible.space() {
            if set_space != &space {
                return Err(Error::SpaceMismatch {
                    left: *set_space,
                    right: space,
                });
            }
        }
        let p = Problem {
            space,
            a,
            feasible,
            t,
            s,
            f,
            known_solution,
        };
        if let Some(star) = &p.known_solution {
            if star.space() != &p.space {
                return Err(Error::SpaceMismatch {
                    left: *star.space(),
                    right: p.space,
                });
            }
            let vi = p.natural_residual(star)?;
            if vi > SOLUTION_RESIDUAL_TOL {
                return Err(Error::invalid(
                    "known_solution",
                    format!("variational-inequality residual {vi:.3e} exceeds {SOLUTION_RESIDUAL_TOL:.0e}"),
                ));
            }
            let fp = norm(&sub(&p.t.apply(star), star)?);
            if fp > SOLUTION_RESIDUAL_TOL {
                return Err(Error::invalid(
                    "known_solution",
                    format!("fixed-point residual {fp:.3e} exceeds {SOLUTION_RESIDUAL_TOL:.0e}"),
                ));
            }
        }
        Ok(p)
    }

    /// `||x - P_C(x - Ax)||`, the natural residual of the variational
    /// inequality at `x`; zero exactly at solutions.
    pub fn natural_residual(&self, x: &HVector) -> Result<f64> {
        let ax = self.a.apply(x);
        let shifted = crate::hilbert::lincomb(1.0, x, -1.0, &ax)?;
        let proj = self.feasible.project(&shifted)?;
        Ok(norm(&sub(x, &proj)?))
    }
}

/// Dense row-major matrix; just enough linear algebra for the benchmark
/// problems.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix", "dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "matrix",
                format!("data length {} != {rows}x{cols}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix construction".into(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        out
    }
}

const POWER_ITER_MAX: usize = 10_000;

/// Largest singular value of a square matrix via power iteration on `G^T G`
/// with a deterministic all-ones start vector. Accurate to a relative
/// tolerance of 1e-8 for the matrix sizes used here.
pub fn spectral_norm(g: &DenseMatrix) -> Result<f64> {
    if g.rows != g.cols {
        return Err(Error::invalid(
            "matrix",
            format!(
                "spectral_norm expects a square matrix, got {}x{}",
                g.rows, g.cols
            ),
        ));
    }
    let n = g.rows;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0_f64;
    for _ in 0..POWER_ITER_MAX {
        let w = g.matvec(&v);
        let s = g.matvec_transpose(&w);
        // Rayleigh quotient of G^T G at the unit vector v
        let lambda: f64 = v.iter().zip(&s).map(|(a, b)| a * b).sum();
        let next = lambda.max(0.0).sqrt();
        let converged = (next - sigma).abs() <= 1e-12 * next.max(1e-300);
        sigma = next;
        let len: f64 = s.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len == 0.0 {
            return Ok(0.0);
        }
        for (vi, si) in v.iter_mut().zip(&s) {
            *vi = si / len;
        }
        if converged {
            break;
        }
    }
    Ok(sigma)
}

/// Two-dimensional test problem: a mildly nonlinear monotone operator over
/// the box `[-1, 1]^2`, a diagonal fixed-point mapping with fixed points on
/// the second axis, and `S = f = 0.5 * id`. The common solution is the
/// origin.
pub fn make_example1() -> Result<Problem> {
    let space = SpaceDescriptor::euclidean(2)?;
    let a = MappingHandle::new(|x: &HVector| {
        let c = x.coords();
        let (p, q) = (c[0], c[1]);
        HVector::from_parts(*x.space(), vec![p + q + p.sin(), -p + q + q.sin()])
    })
    .with_meta(MappingMeta {
        lipschitz: Some(3.0),
        ..MappingMeta::default()
    });
    let feasible = FeasibleSet::box_set(
        HVector::new(space, vec![-1.0, -1.0])?,
        HVector::new(space, vec![1.0, 1.0])?,
    )?;
    // T = D / ||D|| with D = diag(1, 2): halves the first coordinate and
    // keeps the second, so Fix(T) = {0} x R and T is 0-demicontractive.
    let t = MappingHandle::new(|x: &HVector| {
        let c = x.coords();
        HVector::from_parts(*x.space(), vec![0.5 * c[0], c[1]])
    })
    .with_meta(MappingMeta {
        lipschitz: Some(1.0),
        demicontractive: Some(0.0),
        ..MappingMeta::default()
    });
    let s = MappingHandle::scaling(0.5);
    let f = MappingHandle::scaling(0.5);
    Problem::new(
        space,
        a,
        feasible,
        t,
        s,
        Some(f),
        Some(HVector::zeros(space)),
    )
}

/// The random matrix `G = B B^T + M + E` of the n-dimensional linear test
/// problem: `B`, `E` entries uniform in `[0, 2]` (`E` diagonal), `M`
/// skew-symmetric built by antisymmetrizing a uniform `[-2, 2]` draw.
/// Deterministic in `seed`; draw order is `B`, then `M`, then `E`.
pub fn example2_matrix(n: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut rng = SplitMix64::stream(seed, 0);
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, rng.uniform(0.0, 2.0));
        }
    }
    let mut m0 = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m0.set(i, j, rng.uniform(-2.0, 2.0));
        }
    }
    let mut e = vec![0.0; n];
    for d in e.iter_mut() {
        *d = rng.uniform(0.0, 2.0);
    }
    let mut g = DenseMatrix::zeros(n, n);
    for (i, &e_i) in e.iter().enumerate() {
        for j in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                v += b.at(i, k) * b.at(j, k);
            }
            v += 0.5 * (m0.at(i, j) - m0.at(j, i));
            if i == j {
                v += e_i;
            }
            g.set(i, j, v);
        }
    }
    Ok(g)
}

/// Linear monotone problem `A(x) = Gx` over the box `[-2, 5]^n`, with
/// `T = S = f = 0.5 * id` and solution at the origin. The Lipschitz constant
/// is the computed spectral norm of `G`.
pub fn make_example2(n: usize, seed: u64) -> Result<Problem> {
    let g = Arc::new(example2_matrix(n, seed)?);
    let lipschitz = spectral_norm(&g)?;
    let space = SpaceDescriptor::euclidean(n)?;
    let g_apply = Arc::clone(&g);
    let a = MappingHandle::new(move |x: &HVector| {
        HVector::from_parts(*x.space(), g_apply.matvec(x.coords()))
    })
    .with_meta(MappingMeta {
        lipschitz: Some(lipschitz),
        ..MappingMeta::default()
    });
    let feasible = FeasibleSet::box_set(
        HVector::constant(space, -2.0)?,
        HVector::constant(space, 5.0)?,
    )?;
    let t = MappingHandle::scaling(0.5);
    let s = MappingHandle::scaling(0.5);
    let f = MappingHandle::scaling(0.5);
    Problem::new(
        space,
        a,
        feasible,
        t,
        s,
        Some(f),
        Some(HVector::zeros(space)),
    )
}

/// Infinite-dimensional test problem discretized on a uniform grid of
/// `L^2([0,1])`: `A` is the pointwise positive part over the unit ball,
/// `(Tx)(t) = t * ∫ x(s) ds`, and `S = f = 0.5 * id`. The solution is the
/// zero function.
pub fn make_example3(points: usize) -> Result<Problem> {
    let space = SpaceDescriptor::grid_l2(points)?;
    let a = MappingHandle::new(|x: &HVector| {
        let coords = x.coords().iter().map(|v| v.max(0.0)).collect();
        HVector::from_parts(*x.space(), coords)
    })
    .with_meta(MappingMeta {
        lipschitz: Some(1.0),
        ..MappingMeta::default()
    });
    let feasible = FeasibleSet::ball(HVector::zeros(space), 1.0)?;
    let t = MappingHandle::new(|x: &HVector| {
        let mass = quadrature_integral(x);
        let coords = (0..x.len())
            .map(|i| x.space().grid_node(i).expect("grid space") * mass)
            .collect();
        HVector::from_parts(*x.space(), coords)
    })
    .with_meta(MappingMeta {
        lipschitz: Some(1.0),
        demicontractive: Some(0.0),
        ..MappingMeta::default()
    });
    let s = MappingHandle::scaling(0.5);
    let f = MappingHandle::scaling(0.5);
    Problem::new(
        space,
        a,
        feasible,
        t,
        s,
        Some(f),
        Some(HVector::zeros(space)),
    )
}
