// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod functionals;
pub mod grid;
pub mod potentials;
pub mod quad;
pub mod riesz;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;
pub use functionals::{HlsProfile, IdentityReport, Landscape};
pub use grid::{Field, ProblemParams, RadialGrid};
pub use potentials::{Potential, TabulatedPotential};
pub use riesz::RieszOperator;
pub use solver::{SolveOptions, SolveResult, Status};
