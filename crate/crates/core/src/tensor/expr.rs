//! Closed-form scalar expressions over chart coordinates.
//!
//! Expressions are immutable trees with shared subtrees. They evaluate on [`Jet`]s, which
//! gives exact partial derivatives up to order 3, and they can also be differentiated
//! symbolically (used as an independent check on the jet path).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::jet::Jet;
use crate::tensor::spline::QuinticSpline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Powi(Expr, i32),
    Powf(Expr, f64),
    Func(Func, Expr),
    /// k-th derivative of an interpolant, applied to an argument.
    Spline(Arc<QuinticSpline>, u8, Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn cst(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::cst(0.0)
    }

    pub fn one() -> Self {
        Self::cst(1.0)
    }

    pub fn var(i: usize) -> Self {
        Self::node(Node::Var(i))
    }

    pub fn spline(spline: Arc<QuinticSpline>, arg: Expr) -> Self {
        Self::node(Node::Spline(spline, 0, arg))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn apply(&self, f: Func) -> Self {
        match (self.as_const(), f) {
            (Some(c), Func::Exp) => Self::cst(c.exp()),
            (Some(c), Func::Sin) => Self::cst(c.sin()),
            (Some(c), Func::Cos) => Self::cst(c.cos()),
            _ => Self::node(Node::Func(f, self.clone())),
        }
    }

    pub fn sin(&self) -> Self {
        self.apply(Func::Sin)
    }
    pub fn cos(&self) -> Self {
        self.apply(Func::Cos)
    }
    pub fn tan(&self) -> Self {
        self.apply(Func::Tan)
    }
    pub fn sinh(&self) -> Self {
        self.apply(Func::Sinh)
    }
    pub fn cosh(&self) -> Self {
        self.apply(Func::Cosh)
    }
    pub fn tanh(&self) -> Self {
        self.apply(Func::Tanh)
    }
    pub fn exp(&self) -> Self {
        self.apply(Func::Exp)
    }
    pub fn ln(&self) -> Self {
        self.apply(Func::Ln)
    }
    pub fn sqrt(&self) -> Self {
        self.apply(Func::Sqrt)
    }

    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => Self::one(),
            1 => self.clone(),
            _ => match self.as_const() {
                Some(c) => Self::cst(c.powi(k)),
                None => Self::node(Node::Powi(self.clone(), k)),
            },
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            Self::one()
        } else if p == 1.0 {
            self.clone()
        } else {
            Self::node(Node::Powf(self.clone(), p))
        }
    }

    pub fn sq(&self) -> Self {
        self.powi(2)
    }

    /// Symbolic partial derivative with respect to coordinate `v`.
    pub fn diff(&self, v: usize) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => Expr::cst(if *i == v { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff(v) + b.diff(v),
            Node::Sub(a, b) => a.diff(v) - b.diff(v),
            Node::Mul(a, b) => a.diff(v) * b.clone() + a.clone() * b.diff(v),
            Node::Div(a, b) => {
                (a.diff(v) * b.clone() - a.clone() * b.diff(v)) / b.sq()
            }
            Node::Neg(a) => -a.diff(v),
            Node::Powi(a, k) => Expr::cst(*k as f64) * a.powi(k - 1) * a.diff(v),
            Node::Powf(a, p) => Expr::cst(*p) * a.powf(p - 1.0) * a.diff(v),
            Node::Func(f, a) => {
                let da = a.diff(v);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Tan => Expr::one() + a.tan().sq(),
                    Func::Sinh => a.cosh(),
                    Func::Cosh => a.sinh(),
                    Func::Tanh => Expr::one() - a.tanh().sq(),
                    Func::Exp => a.exp(),
                    Func::Ln => Expr::one() / a.clone(),
                    Func::Sqrt => Expr::cst(0.5) / a.sqrt(),
                };
                outer * da
            }
            Node::Spline(s, k, a) => {
                Expr::node(Node::Spline(s.clone(), k + 1, a.clone())) * a.diff(v)
            }
        }
    }

    /// Evaluates on `vars`, the coordinate jets of the evaluation point.
    pub fn eval_jet<T: Scalar>(&self, vars: &[Jet<T>]) -> Result<Jet<T>> {
        let dim = vars.first().map(|j| j.dim()).unwrap_or(0);
        let r = self.eval_rec(vars, dim)?;
        if !r.is_finite() {
            return Err(Error::SingularExpr(format!("non-finite result of {self:?}")));
        }
        Ok(r)
    }

    /// Plain value at `point`.
    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T> {
        let vars: Vec<Jet<T>> = point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(point.len(), 0, i, x))
            .collect();
        Ok(self.eval_jet(&vars)?.value())
    }

    fn eval_rec<T: Scalar>(&self, vars: &[Jet<T>], dim: usize) -> Result<Jet<T>> {
        Ok(match &*self.0 {
            Node::Const(c) => Jet::constant(dim, T::of(*c)),
            Node::Var(i) => *vars.get(*i).ok_or_else(|| {
                Error::InvalidInput(format!("coordinate {i} not in a {dim}-dimensional chart"))
            })?,
            Node::Add(a, b) => a.eval_rec(vars, dim)? + b.eval_rec(vars, dim)?,
            Node::Sub(a, b) => a.eval_rec(vars, dim)? - b.eval_rec(vars, dim)?,
            Node::Mul(a, b) => a.eval_rec(vars, dim)? * b.eval_rec(vars, dim)?,
            Node::Div(a, b) => {
                let d = b.eval_rec(vars, dim)?;
                if d.value() == T::zero() {
                    return Err(Error::SingularExpr("division by zero".into()));
                }
                a.eval_rec(vars, dim)? / d
            }
            Node::Neg(a) => -a.eval_rec(vars, dim)?,
            Node::Powi(a, k) => {
                let u = a.eval_rec(vars, dim)?;
                if *k < 0 && u.value() == T::zero() {
                    return Err(Error::SingularExpr("negative power of zero".into()));
                }
                u.powi(*k)
            }
            Node::Powf(a, p) => {
                let u = a.eval_rec(vars, dim)?;
                if u.value() <= T::zero() {
                    return Err(Error::SingularExpr(format!(
                        "real power {p} of non-positive base {}",
                        u.value()
                    )));
                }
                u.powf(T::of(*p))
            }
            Node::Func(f, a) => {
                let u = a.eval_rec(vars, dim)?;
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => {
                        if u.value().cos() == T::zero() {
                            return Err(Error::SingularExpr("tan at a pole".into()));
                        }
                        u.tan()
                    }
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Tanh => u.tanh(),
                    Func::Exp => u.exp(),
                    Func::Ln => {
                        if u.value() <= T::zero() {
                            return Err(Error::SingularExpr(format!(
                                "ln of non-positive {}",
                                u.value()
                            )));
                        }
                        u.ln()
                    }
                    Func::Sqrt => {
                        if u.value() <= T::zero() {
                            return Err(Error::SingularExpr(format!(
                                "sqrt of non-positive {}",
                                u.value()
                            )));
                        }
                        u.sqrt()
                    }
                }
            }
            Node::Spline(s, k, a) => {
                let u = a.eval_rec(vars, dim)?;
                let x = u.value().as_f64();
                let d = |o: u8| s.derivative(k + o, x).map(T::of);
                u.compose(d(0)?, d(1)?, d(2)?, d(3)?)
            }
        })
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Sub(a, b) => write!(f, "({a:?} - {b:?})"),
            Node::Mul(a, b) => write!(f, "{a:?}*{b:?}"),
            Node::Div(a, b) => write!(f, "{a:?}/{b:?}"),
            Node::Neg(a) => write!(f, "-{a:?}"),
            Node::Powi(a, k) => write!(f, "{a:?}^{k}"),
            Node::Powf(a, p) => write!(f, "{a:?}^{p}"),
            Node::Func(g, a) => write!(f, "{}({a:?})", format!("{g:?}").to_lowercase()),
            Node::Spline(_, k, a) => write!(f, "spline{k}({a:?})"),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::cst(a + b),
            (Some(z), _) if z == 0.0 => o,
            (_, Some(z)) if z == 0.0 => self,
            _ => Expr::node(Node::Add(self, o)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::cst(a - b),
            (_, Some(z)) if z == 0.0 => self,
            (Some(z), _) if z == 0.0 => -o,
            _ => Expr::node(Node::Sub(self, o)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        if self.is_zero() || o.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return o;
        }
        if o.is_one() {
            return self;
        }
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::cst(a * b),
            _ => Expr::node(Node::Mul(self, o)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        if self.is_zero() && !o.is_zero() {
            return Expr::zero();
        }
        if o.is_one() {
            return self;
        }
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::cst(a / b),
            _ => Expr::node(Node::Div(self, o)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::cst(-c),
            None => Expr::node(Node::Neg(self)),
        }
    }
}

macro_rules! ref_and_scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr { self.clone().$m(o.clone()) }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, o: f64) -> Expr { self.$m(Expr::cst(o)) }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr { Expr::cst(self).$m(o) }
        }
    )*};
}
ref_and_scalar_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jets(p: &[f64]) -> Vec<Jet<f64>> {
        p.iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(p.len(), 3, i, x))
            .collect()
    }

    #[test]
    fn symbolic_and_jet_derivatives_agree() {
        let s = Expr::var(0);
        let t = Expr::var(1);
        let e = (s.clone() * 0.7).sin().sq() * t.cosh() / (1.0 + s.clone().sq()).sqrt()
            - (s.clone() * t.clone()).tanh().powi(3)
            + s.clone().powf(4.0 / 3.0) * (t.clone() * 0.3).tan().ln().exp();
        let p = [0.8, 0.4];
        let j = e.eval_jet(&jets(&p)).unwrap();
        for a in 0..2 {
            let da = e.diff(a);
            assert!((da.eval(&p).unwrap() - j.d1(a)).abs() < 1e-13);
            for b in 0..2 {
                let dab = da.diff(b);
                assert!((dab.eval(&p).unwrap() - j.d2(a, b)).abs() < 1e-12);
                for c in 0..2 {
                    let dabc = dab.diff(c).eval(&p).unwrap();
                    assert!((dabc - j.d3(a, b, c)).abs() < 1e-10 * (1.0 + dabc.abs()));
                }
            }
        }
    }

    #[test]
    fn singular_points_are_reported() {
        let s = Expr::var(0);
        assert!(matches!(s.ln().eval(&[0.0]), Err(Error::SingularExpr(_))));
        assert!(matches!(s.sqrt().eval(&[-1.0]), Err(Error::SingularExpr(_))));
        assert!(matches!(s.powf(2.0 / 9.0).eval(&[0.0]), Err(Error::SingularExpr(_))));
        assert!(matches!((1.0 / s.clone()).eval(&[0.0]), Err(Error::SingularExpr(_))));
        assert!(s.powi(2).eval(&[-2.0]).is_ok());
    }

    #[test]
    fn constant_folding_keeps_trees_small() {
        let s = Expr::var(0);
        assert!((Expr::cst(3.0) * Expr::zero() + s.clone() * 0.0).is_zero());
        assert_eq!(Expr::cst(2.0).diff(0).as_const(), Some(0.0));
        assert_eq!(s.diff(1).as_const(), Some(0.0));
    }
}
