//! Residual tensors paired with the magnitude scale their tolerance is measured against.

use serde::Serialize;

use crate::scalar::Scalar;
use crate::tensor::array::{Mat, Tensor3, Tensor4};
use crate::tol::Tolerance;

/// Anything with a finite list of scalar components.
pub trait Components {
    fn sup_norm(&self) -> f64;
}

impl<T: Scalar> Components for Mat<T> {
    fn sup_norm(&self) -> f64 {
        crate::tensor::array::sup_norm(self.iter())
    }
}

impl<T: Scalar> Components for Tensor3<T> {
    fn sup_norm(&self) -> f64 {
        crate::tensor::array::sup_norm(self.iter())
    }
}

impl<T: Scalar> Components for Tensor4<T> {
    fn sup_norm(&self) -> f64 {
        crate::tensor::array::sup_norm(self.iter())
    }
}

impl<T: Scalar> Components for Vec<T> {
    fn sup_norm(&self) -> f64 {
        crate::tensor::array::sup_norm(self.iter())
    }
}

impl<T: Scalar> Components for T {
    fn sup_norm(&self) -> f64 {
        self.as_f64().abs()
    }
}

/// A residual with `scale = largest magnitude of the terms that were combined`.
///
/// Tolerances are applied as `abs + rel (1 + scale)`.
#[derive(Clone, Debug)]
pub struct Residual<A> {
    pub tensor: A,
    pub scale: f64,
}

impl<A: Components> Residual<A> {
    pub fn new(tensor: A, scale: f64) -> Self {
        Residual { tensor, scale }
    }

    pub fn sup(&self) -> f64 {
        self.tensor.sup_norm()
    }

    /// Residual divided by its allowed bound; at most 1 means pass.
    pub fn ratio(&self, tol: &Tolerance) -> f64 {
        self.sup() / tol.bound(self.scale)
    }

    pub fn passes(&self, tol: &Tolerance) -> bool {
        tol.accepts(self.sup(), self.scale)
    }

    pub fn summary(&self) -> Sample {
        Sample { residual: self.sup(), scale: self.scale }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub residual: f64,
    pub scale: f64,
}

/// Sup-norm reduction of a residual over a set of points.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub points: Vec<Vec<f64>>,
    pub samples: Vec<Sample>,
    pub max_residual: f64,
    /// Largest `residual / bound` over the points.
    pub max_ratio: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl ResidualReport {
    pub fn from_samples(points: Vec<Vec<f64>>, samples: Vec<Sample>, tolerance: Tolerance) -> Self {
        let max_residual = samples.iter().fold(0.0f64, |m, s| m.max(s.residual));
        let max_ratio = samples
            .iter()
            .fold(0.0f64, |m, s| m.max(s.residual / tolerance.bound(s.scale)));
        let pass = !samples.is_empty()
            && samples.iter().all(|s| tolerance.accepts(s.residual, s.scale));
        ResidualReport { points, samples, max_residual, max_ratio, tolerance, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_reduces_to_max() {
        let tol = Tolerance::DEFAULT;
        let s = vec![
            Sample { residual: 1e-12, scale: 1.0 },
            Sample { residual: 5e-11, scale: 10.0 },
        ];
        let r = ResidualReport::from_samples(vec![vec![0.0], vec![1.0]], s, tol);
        assert_eq!(r.max_residual, 5e-11);
        assert!(r.pass);
        let bad = ResidualReport::from_samples(
            vec![vec![0.0]],
            vec![Sample { residual: 1e-3, scale: 1.0 }],
            tol,
        );
        assert!(!bad.pass && bad.max_ratio > 1.0);
    }
}
