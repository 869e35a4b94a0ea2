//! Piecewise quintic Hermite interpolation from nodal value, slope and curvature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuinticSpline {
    knots: Vec<f64>,
    // per piece: coefficients of the degree-5 polynomial in t = (x - x_i) / h_i
    coeffs: Vec<[f64; 6]>,
}

impl QuinticSpline {
    /// `knots` strictly increasing with matching `values`, first and second derivatives.
    pub fn new(knots: &[f64], values: &[f64], d1: &[f64], d2: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n || d1.len() != n || d2.len() != n {
            return Err(Error::InvalidInput(
                "spline needs at least two knots and matching data".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must increase strictly".into()));
        }
        let coeffs = (0..n - 1)
            .map(|i| {
                let h = knots[i + 1] - knots[i];
                let (y0, p0, q0) = (values[i], h * d1[i], h * h * d2[i]);
                let (y1, p1, q1) = (values[i + 1], h * d1[i + 1], h * h * d2[i + 1]);
                [
                    y0,
                    p0,
                    0.5 * q0,
                    -10.0 * y0 - 6.0 * p0 - 1.5 * q0 + 10.0 * y1 - 4.0 * p1 + 0.5 * q1,
                    15.0 * y0 + 8.0 * p0 + 1.5 * q0 - 15.0 * y1 + 7.0 * p1 - q1,
                    -6.0 * y0 - 3.0 * p0 - 0.5 * q0 + 6.0 * y1 - 3.0 * p1 + 0.5 * q1,
                ]
            })
            .collect();
        Ok(QuinticSpline {
            knots: knots.to_vec(),
            coeffs,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// `d^k/dx^k` of the interpolant at `x`, for `k` in `0..=5` (zero above).
    pub fn derivative(&self, k: u8, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::Domain(format!(
                "spline argument {x} outside [{lo}, {hi}]"
            )));
        }
        if k > 5 {
            return Ok(0.0);
        }
        let i = self
            .knots
            .partition_point(|&kn| kn <= x)
            .saturating_sub(1)
            .min(self.coeffs.len() - 1);
        let h = self.knots[i + 1] - self.knots[i];
        let t = (x - self.knots[i]) / h;
        let c = &self.coeffs[i];
        // d^k/dt^k of sum c_j t^j
        let mut val = 0.0;
        let mut tp = 1.0;
        for j in k as usize..6 {
            let falling: f64 = (0..k as usize).map(|r| (j - r) as f64).product();
            val += falling * c[j] * tp;
            tp *= t;
        }
        Ok(val / h.powi(k as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodal_data_and_quintics() {
        // A quintic polynomial is reproduced exactly.
        let p = |x: f64| 1.0 - x + 0.5 * x.powi(3) + 0.1 * x.powi(5);
        let dp = |x: f64| -1.0 + 1.5 * x * x + 0.5 * x.powi(4);
        let ddp = |x: f64| 3.0 * x + 2.0 * x.powi(3);
        let xs: Vec<f64> = (0..6).map(|i| -1.0 + 0.4 * i as f64).collect();
        let sp = QuinticSpline::new(
            &xs,
            &xs.iter().map(|&x| p(x)).collect::<Vec<_>>(),
            &xs.iter().map(|&x| dp(x)).collect::<Vec<_>>(),
            &xs.iter().map(|&x| ddp(x)).collect::<Vec<_>>(),
        )
        .unwrap();
        for x in [-0.93, -0.2, 0.0, 0.55, 1.0] {
            assert!((sp.derivative(0, x).unwrap() - p(x)).abs() < 1e-13);
            assert!((sp.derivative(1, x).unwrap() - dp(x)).abs() < 1e-12);
            assert!((sp.derivative(2, x).unwrap() - ddp(x)).abs() < 1e-11);
            assert!((sp.derivative(3, x).unwrap() - (3.0 + 6.0 * x * x)).abs() < 1e-10);
        }
        assert!(sp.derivative(0, 1.5).is_err());
    }
}
