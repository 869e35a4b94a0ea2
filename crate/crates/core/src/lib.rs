//! Pointwise verification of 4-dimensional (m, ρ)-quasi-Einstein metrics with harmonic
//! Weyl curvature.
//!
//! The [`tensor`] layer evaluates curvature of closed-form metrics through order-3 jets.

pub mod catalog;
pub mod error;
pub mod identities;
pub mod qe;
pub mod residual;
pub mod scalar;
pub mod suite;
pub mod tensor;
pub mod tol;
pub mod zeta;

pub use error::{Error, Result};
pub use residual::{Residual, ResidualReport};
pub use scalar::{Ring, Scalar};
pub use tol::Tolerance;

pub type Jet64 = tensor::Jet<f64>;
pub type Jet32 = tensor::Jet<f32>;
pub type Bundle64 = tensor::CurvatureBundle<f64>;
pub type Bundle32 = tensor::CurvatureBundle<f32>;
