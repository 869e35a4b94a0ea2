//! Charts, metrics and scalar fields given by closed-form expressions.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::array::Mat;
use crate::tensor::expr::Expr;
use crate::tensor::jet::{Jet, MAX_ORDER};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = crate::tensor::jet::MAX_DIM;

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    names: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if !(MIN_DIM..=MAX_DIM).contains(&names.len()) {
            return Err(Error::InvalidInput(format!(
                "chart dimension {} outside {MIN_DIM}..={MAX_DIM}",
                names.len()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate coordinate name {a}")));
            }
        }
        Ok(Chart { names })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Coordinate expressions `x_0, ..., x_{n-1}`.
    pub fn coords(&self) -> Vec<Expr> {
        (0..self.dim()).map(Expr::var).collect()
    }
}

/// Open interval; infinite ends are allowed.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn shrink(&self, margin: f64) -> Self {
        Interval::new(self.lo + margin, self.hi - margin)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Admissible region of a chart: a product of open intervals, one per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub boxes: Vec<Interval>,
}

impl Domain {
    pub fn new(boxes: Vec<Interval>) -> Self {
        Domain { boxes }
    }

    pub fn unbounded(dim: usize) -> Self {
        Domain::new(vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); dim])
    }

    pub fn check<T: Scalar>(&self, point: &[T]) -> Result<()> {
        if point.len() != self.boxes.len() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.boxes.len()
            )));
        }
        for (i, (x, iv)) in point.iter().zip(&self.boxes).enumerate() {
            let x = x.as_f64();
            if !iv.contains(x) {
                return Err(Error::Domain(format!("coordinate {i} = {x} not in {iv}")));
            }
        }
        Ok(())
    }
}

/// Coordinate jets of order 3 at `point`.
pub fn coordinate_jets<T: Scalar>(point: &[T]) -> Vec<Jet<T>> {
    let n = point.len();
    point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet::variable(n, MAX_ORDER, i, x))
        .collect()
}

/// A Riemannian metric `g_ij(x)` on a chart, with its regularity guard.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Chart,
    upper: Vec<Expr>,
    domain: Domain,
}

impl MetricField {
    /// Builds from the full component matrix; it must be symmetric (structurally).
    pub fn new(chart: Chart, components: Vec<Vec<Expr>>, domain: Domain) -> Result<Self> {
        let n = chart.dim();
        if components.len() != n || components.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("metric must be {n}x{n}")));
        }
        if domain.boxes.len() != n {
            return Err(Error::InvalidInput("domain dimension differs from chart".into()));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                if components[i][j] != components[j][i] {
                    return Err(Error::InvalidInput(format!("metric component ({i},{j}) not symmetric")));
                }
                upper.push(components[i][j].clone());
            }
        }
        Ok(MetricField { chart, upper, domain })
    }

    pub fn diagonal(chart: Chart, diag: Vec<Expr>, domain: Domain) -> Result<Self> {
        let n = diag.len();
        let comps = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { Expr::zero() }).collect())
            .collect();
        Self::new(chart, comps, domain)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.dim();
        i * n - i * (i + 1) / 2 + j
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.upper[self.slot(i, j)]
    }

    /// Returns a copy with `delta` added to component `(i, j)` (and `(j, i)`).
    pub fn perturbed(&self, i: usize, j: usize, delta: Expr) -> Self {
        let mut out = self.clone();
        let k = self.slot(i, j);
        out.upper[k] = out.upper[k].clone() + delta;
        out
    }

    /// Order-3 jets of every component at `point`.
    pub fn eval_jets<T: Scalar>(&self, point: &[T]) -> Result<Mat<Jet<T>>> {
        self.domain.check(point)?;
        let vars = coordinate_jets(point);
        let upper = self
            .upper
            .iter()
            .map(|e| e.eval_jet(&vars))
            .collect::<Result<Vec<_>>>()?;
        let n = self.dim();
        Ok(Mat::from_fn(n, |i, j| upper[self.slot(i, j)]))
    }

    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<Mat<T>> {
        Ok(self.eval_jets(point)?.map(|j| j.value()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum FieldRole {
    /// Quasi-Einstein potential `f`.
    Potential,
    /// Warping profile `w`, positive on the interior.
    Profile,
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    pub expr: Expr,
    pub role: FieldRole,
}

impl ScalarField {
    pub fn potential(expr: Expr) -> Self {
        ScalarField { expr, role: FieldRole::Potential }
    }

    pub fn profile(expr: Expr) -> Self {
        ScalarField { expr, role: FieldRole::Profile }
    }

    pub fn eval_jet<T: Scalar>(&self, point: &[T]) -> Result<Jet<T>> {
        let j = self.expr.eval_jet(&coordinate_jets(point))?;
        if self.role == FieldRole::Profile && j.value() <= T::zero() {
            return Err(Error::Domain(format!("profile w = {} is not positive", j.value())));
        }
        Ok(j)
    }

    /// Adds a constant; both field equations are invariant under this gauge for `f`.
    pub fn shifted(&self, c: f64) -> Self {
        ScalarField { expr: self.expr.clone() + c, role: self.role }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_like() -> MetricField {
        let c = Chart::new(["s", "t"]).unwrap();
        let s = Expr::var(0);
        let dom = Domain::new(vec![Interval::new(0.0, std::f64::consts::PI), Interval::new(-10.0, 10.0)]);
        MetricField::diagonal(c, vec![Expr::one(), s.sin().sq()], dom).unwrap()
    }

    #[test]
    fn chart_invariants() {
        assert!(Chart::new(["s"]).is_err());
        assert!(Chart::new(["s", "s"]).is_err());
        assert!(Chart::new(["a", "b", "c", "d", "e", "f", "g"]).is_err());
        assert_eq!(Chart::new(["s", "t", "x3", "x4"]).unwrap().dim(), 4);
    }

    #[test]
    fn sin_squared_component_derivative() {
        let g = sphere_like();
        let j = g.eval_jets(&[std::f64::consts::FRAC_PI_4, 0.3]).unwrap();
        assert!((j[(1, 1)].d1(0) - 1.0).abs() < 1e-15);
        assert_eq!(j[(0, 0)].d1(0), 0.0);
        assert_eq!(j[(0, 1)].value(), 0.0);
    }

    #[test]
    fn guard_rejects_outside_points() {
        let g = sphere_like();
        assert!(matches!(g.eval_jets(&[-0.1, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(g.eval_jets(&[0.1]), Err(Error::Domain(_))));
    }

    #[test]
    fn fractional_power_component() {
        let c = Chart::new(["s", "t"]).unwrap();
        let s = Expr::var(0);
        let dom = Domain::new(vec![Interval::new(0.0, f64::INFINITY), Interval::new(-1.0, 1.0)]);
        let g = MetricField::diagonal(c, vec![Expr::one(), s.powf(2.0 / 9.0)], dom).unwrap();
        let j = g.eval_jets(&[1.0f64, 0.0]).unwrap();
        assert!((j[(1, 1)].d1(0) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_components_rejected() {
        let c = Chart::new(["s", "t"]).unwrap();
        let comps = vec![vec![Expr::one(), Expr::var(0)], vec![Expr::zero(), Expr::one()]];
        assert!(MetricField::new(c, comps, Domain::unbounded(2)).is_err());
    }
}
