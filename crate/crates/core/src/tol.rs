//! Relative tolerances: `abs + rel * scale`, where `scale = 1 + largest participating magnitude`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-10, rel: 1e-9 };

    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Purely relative bound `rel * scale`.
    pub const fn relative(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel }
    }

    /// `scale` is the largest participating magnitude; the `1 +` is added here.
    pub fn bound(&self, magnitude: f64) -> f64 {
        self.abs + self.rel * (1.0 + magnitude.abs())
    }

    pub fn accepts(&self, residual: f64, magnitude: f64) -> bool {
        residual.abs() <= self.bound(magnitude)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}
