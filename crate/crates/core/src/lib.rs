//! Symbolic-numeric toolkit for symplectic normal forms near stratified
//! subspaces on coordinate charts.
//!
//! * [`expr`]: scalar expressions (parse, differentiate, evaluate).
//! * [`forms`]: differential forms, vector fields and smooth maps.
//! * [`homotopy`]: fiber integration, relative Poincaré primitives and
//!   order-of-vanishing fits.
//! * [`moser`]: the Moser flow and its pullback verification.
//! * [`eulerlike`]: Euler-like fields, scalar multiplication and the
//!   concrete tubular neighbourhood.
//! * [`strata`]: stratified conical models and linear symplectic
//!   classification.
//!
//! The numeric kernels ([`linalg`], [`quadrature`], [`ode`], expression
//! evaluation) are generic over [`Scalar`]; the geometric pipelines run in
//! [`Real`] precision.

pub mod domain;
pub mod error;
pub mod eulerlike;
pub mod expr;
pub mod forms;
pub mod homotopy;
pub mod linalg;
pub mod moser;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod strata;

pub use domain::{Chart, DomainBox};
pub use error::{Error, Result};
pub use expr::{parse_expr, Binding, Expr};
pub use forms::{DifferentialForm, MultiIndex, SmoothMap, VectorField};
pub use scalar::Scalar;

/// Working precision of the geometric pipelines.
pub type Real = f64;
/// Dense matrix in working precision.
pub type Mat = linalg::Matrix<Real>;
/// Single-precision matrix, for callers that trade accuracy for speed.
pub type Mat32 = linalg::Matrix<f32>;
/// Default Gauss–Legendre rule.
pub type Quadrature = quadrature::GaussLegendre<Real>;
