//! Pointwise tensor calculus on closed-form metrics.

pub mod array;
pub mod curvature;
pub mod expr;
pub mod field;
pub mod jet;
pub mod linalg;
pub mod spline;

pub use array::{Mat, Tensor3, Tensor4};
pub use curvature::{
    christoffel, codazzi_residual, hessian, ricci_eigensystem, ricci_scalar, riemann, weyl,
    CurvatureBundle, RicciEigen,
};
pub use expr::Expr;
pub use field::{Chart, Domain, FieldRole, Interval, MetricField, ScalarField};
pub use jet::Jet;
