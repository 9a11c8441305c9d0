//! Solvers for finding a common solution of a variational inequality with a
//! monotone, Lipschitz continuous operator and a fixed-point problem with a
//! demicontractive mapping, in Euclidean space or a grid-discretized
//! `L^2([0,1])`.
//!
//! The crate implements two self-adaptive inertial extragradient iterations —
//! a subgradient-extragradient variant (`ISEGM`) and a Tseng variant
//! (`ITEGM`), both damped by a hybrid steepest-descent outer step — together
//! with their Halpern and viscosity specializations and four classical
//! baselines (`HSEGM`, `VSEGM`, `VTEGM`, `STEGM`). Step sizes adapt from
//! observed operator values, so no Lipschitz constant is needed up front and
//! only one projection onto the feasible set is taken per iteration.
//!
//! The [`harness`] module adds the benchmark layer: three built-in problem
//! instances with known solutions, comparison runs over a shared start
//! vector, CSV traces, and a runtime invariant suite.
//!
//! ```
//! use extragrad::harness::{build_problem, make_start, BenchConfig, ExampleId};
//! use extragrad::solvers::{run, AlgorithmId, StopRule};
//!
//! let cfg = BenchConfig::preset(ExampleId::Ex1);
//! let problem = build_problem(&cfg).unwrap();
//! let start = make_start(&cfg, &problem.space).unwrap();
//! let trace = run(
//!     &problem,
//!     AlgorithmId::Isegm,
//!     &cfg.params,
//!     &start,
//!     &StopRule::max_iter(100),
//! )
//! .unwrap();
//! let first = trace.rows.first().unwrap().d_k.unwrap();
//! let last = trace.rows.last().unwrap().d_k.unwrap();
//! assert!(last < 1e-2 * first);
//! ```

pub mod error;
pub mod harness;
pub mod hilbert;
pub mod operators;
pub mod projections;
pub mod rng;
pub mod solvers;
pub mod stepsize;

pub use error::{Error, Result};
pub use hilbert::{HVector, SpaceDescriptor};
pub use operators::{MappingHandle, MappingMeta, Problem};
pub use projections::FeasibleSet;
pub use solvers::{AlgorithmId, IterationTrace, SolverState, StepReport, StopRule};
pub use stepsize::{SequenceRules, SolverParams};
