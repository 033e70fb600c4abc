//! Exact workbench for the first cohomology of vector-field Lie algebras with
//! coefficients in differential operators on skew tensor fields and on forms.
//!
//! Everything lives on ℝᵐ with polynomial coefficients over ℚ:
//!
//! * [`exactlinalg`]: rationals and sparse rank / solve over ℚ;
//! * [`polyfields`]: polynomials, vector fields, Jacobians and divergence;
//! * [`tensorfields`]: multivector fields and differential forms;
//! * [`diffops`]: differential operators in normal form and their principal symbols;
//! * [`slstructure`]: the projective realization of `sl(m+1)` by quadratic vector fields;
//! * [`cecomplex`]: Chevalley–Eilenberg cochains, weight blocks and cohomology dimensions;
//! * [`cocycles`]: the `χ` map, the invariant families and the named cocycles, and the
//!   connecting-homomorphism constant.

pub mod cecomplex;
pub mod cocycles;
pub mod diffops;
pub mod exactlinalg;
pub mod polyfields;
pub mod slstructure;
pub mod tensorfields;

use thiserror::Error;

pub use exactlinalg::{rat, ratio, Rational, SparseMatrix};
pub use polyfields::{Monomial, Poly, PolyMatrix, VectorField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("axis {axis} out of range for {nvars} variables")]
    AxisOutOfRange { axis: usize, nvars: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree {degree} exceeds dimension {m}")]
    DegreeOverflow { degree: usize, m: usize },
    #[error("interior product needs degree at least 1")]
    ZeroDegree,
    #[error("invalid module: {0}")]
    InvalidSpec(String),
    #[error("module mismatch: {0}")]
    ModuleMismatch(String),
    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("{0} is not a pure basis element")]
    NotPure(String),
    #[error("the given cochain is not a cocycle")]
    NotCocycle,
    #[error("incompatible family: {0}")]
    IncompatibleFamily(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Linalg(#[from] exactlinalg::LinalgError),
}
