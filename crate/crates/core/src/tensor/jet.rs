//! Truncated multivariate Taylor arithmetic up to total order 3.
//!
//! A [`Jet`] carries a value together with every mixed partial derivative up to its
//! `order` with respect to `dim` coordinates. Arithmetic applies the Leibniz rule and the
//! univariate chain rule (Faà di Bruno truncated at third order), so derivatives are exact
//! up to floating-point rounding. Combining jets of different orders yields the lower one.
//! Partials are stored as full symmetric arrays; index order never matters.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{Ring, Scalar};

pub const MAX_DIM: usize = 6;
pub const MAX_ORDER: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    dim: u8,
    order: u8,
    v: T,
    d1: [T; MAX_DIM],
    d2: [[T; MAX_DIM]; MAX_DIM],
    d3: [[[T; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl<T: Scalar> Jet<T> {
    fn blank(dim: usize, order: u8, v: T) -> Self {
        assert!(dim <= MAX_DIM, "jet dimension {dim} exceeds {MAX_DIM}");
        let z = T::zero();
        Jet {
            dim: dim as u8,
            order: order.min(MAX_ORDER),
            v,
            d1: [z; MAX_DIM],
            d2: [[z; MAX_DIM]; MAX_DIM],
            d3: [[[z; MAX_DIM]; MAX_DIM]; MAX_DIM],
        }
    }

    /// A constant; carries full order so it never truncates what it is combined with.
    pub fn constant(dim: usize, v: T) -> Self {
        Self::blank(dim, MAX_ORDER, v)
    }

    /// The coordinate function `x_idx` evaluated at `v`, with derivatives up to `order`.
    pub fn variable(dim: usize, order: u8, idx: usize, v: T) -> Self {
        assert!(idx < dim);
        let mut j = Self::blank(dim, order, v);
        if j.order >= 1 {
            j.d1[idx] = T::one();
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> T {
        self.v
    }

    pub fn d1(&self, i: usize) -> T {
        debug_assert!(self.order >= 1);
        self.d1[i]
    }

    pub fn d2(&self, i: usize, j: usize) -> T {
        debug_assert!(self.order >= 2);
        self.d2[i][j]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> T {
        debug_assert!(self.order >= 3);
        self.d3[i][j][k]
    }

    pub fn gradient(&self) -> Vec<T> {
        self.d1[..self.dim()].to_vec()
    }

    /// Drops derivatives above `order`.
    pub fn truncate(mut self, order: u8) -> Self {
        if order < self.order {
            self.order = order;
        }
        self
    }

    /// `∂/∂x_i` of the jet; the result has one order less.
    pub fn partial(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.dim();
        let mut r = Self::blank(n, self.order - 1, self.d1[i]);
        if r.order >= 1 {
            for j in 0..n {
                r.d1[j] = self.d2[i][j];
            }
        }
        if r.order >= 2 {
            for j in 0..n {
                for k in 0..n {
                    r.d2[j][k] = self.d3[i][j][k];
                }
            }
        }
        r
    }

    pub fn scale(&self, c: T) -> Self {
        self.map_linear(|x| x * c)
    }

    pub fn add_scalar(mut self, c: T) -> Self {
        self.v = self.v + c;
        self
    }

    fn map_linear(&self, f: impl Fn(T) -> T) -> Self {
        let n = self.dim();
        let mut r = Self::blank(n, self.order, f(self.v));
        if self.order >= 1 {
            for i in 0..n {
                r.d1[i] = f(self.d1[i]);
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    r.d2[i][j] = f(self.d2[i][j]);
                }
            }
        }
        if self.order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        r.d3[i][j][k] = f(self.d3[i][j][k]);
                    }
                }
            }
        }
        r
    }

    fn zip_linear(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        let n = self.dim();
        let order = self.order.min(o.order);
        let mut r = Self::blank(n, order, f(self.v, o.v));
        if order >= 1 {
            for i in 0..n {
                r.d1[i] = f(self.d1[i], o.d1[i]);
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    r.d2[i][j] = f(self.d2[i][j], o.d2[i][j]);
                }
            }
        }
        if order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        r.d3[i][j][k] = f(self.d3[i][j][k], o.d3[i][j][k]);
                    }
                }
            }
        }
        r
    }

    fn product(&self, o: &Self) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        let n = self.dim();
        let order = self.order.min(o.order);
        let (a, b) = (self, o);
        let mut r = Self::blank(n, order, a.v * b.v);
        if order >= 1 {
            for i in 0..n {
                r.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let x = a.d2[i][j] * b.v
                        + a.d1[i] * b.d1[j]
                        + a.d1[j] * b.d1[i]
                        + a.v * b.d2[i][j];
                    r.d2[i][j] = x;
                    r.d2[j][i] = x;
                }
            }
        }
        if order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let x = a.d3[i][j][k] * b.v
                            + a.d2[i][j] * b.d1[k]
                            + a.d2[i][k] * b.d1[j]
                            + a.d2[j][k] * b.d1[i]
                            + a.d1[i] * b.d2[j][k]
                            + a.d1[j] * b.d2[i][k]
                            + a.d1[k] * b.d2[i][j]
                            + a.v * b.d3[i][j][k];
                        r.set3(i, j, k, x);
                    }
                }
            }
        }
        r
    }

    fn set3(&mut self, i: usize, j: usize, k: usize, x: T) {
        self.d3[i][j][k] = x;
        self.d3[i][k][j] = x;
        self.d3[j][i][k] = x;
        self.d3[j][k][i] = x;
        self.d3[k][i][j] = x;
        self.d3[k][j][i] = x;
    }

    /// Applies a univariate function given its value and first three derivatives at
    /// `self.value()`.
    pub fn compose(&self, f0: T, f1: T, f2: T, f3: T) -> Self {
        let n = self.dim();
        let u = self;
        let mut r = Self::blank(n, self.order, f0);
        if u.order >= 1 {
            for i in 0..n {
                r.d1[i] = f1 * u.d1[i];
            }
        }
        if u.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let x = f2 * u.d1[i] * u.d1[j] + f1 * u.d2[i][j];
                    r.d2[i][j] = x;
                    r.d2[j][i] = x;
                }
            }
        }
        if u.order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let x = f3 * u.d1[i] * u.d1[j] * u.d1[k]
                            + f2 * (u.d2[i][j] * u.d1[k]
                                + u.d2[i][k] * u.d1[j]
                                + u.d2[j][k] * u.d1[i])
                            + f1 * u.d3[i][j][k];
                        r.set3(i, j, k, x);
                    }
                }
            }
        }
        r
    }

    pub fn recip(&self) -> Self {
        let u = self.v;
        let r = T::one() / u;
        let r2 = r * r;
        self.compose(r, -r2, T::of(2.0) * r2 * r, T::of(-6.0) * r2 * r2)
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e, e)
    }

    pub fn ln(&self) -> Self {
        let u = self.v;
        let r = T::one() / u;
        self.compose(u.ln(), r, -r * r, T::of(2.0) * r * r * r)
    }

    pub fn sqrt(&self) -> Self {
        let u = self.v;
        let s = u.sqrt();
        let half = T::of(0.5);
        self.compose(
            s,
            half / s,
            T::of(-0.25) / (s * u),
            T::of(0.375) / (s * u * u),
        )
    }

    pub fn powf(&self, p: T) -> Self {
        let u = self.v;
        let one = T::one();
        let two = T::of(2.0);
        let three = T::of(3.0);
        self.compose(
            u.powf(p),
            p * u.powf(p - one),
            p * (p - one) * u.powf(p - two),
            p * (p - one) * (p - two) * u.powf(p - three),
        )
    }

    pub fn powi(&self, k: i32) -> Self {
        let u = self.v;
        let p = T::of(k as f64);
        let one = T::one();
        let two = T::of(2.0);
        let fac = |e: i32| u.powi(k - e);
        self.compose(
            u.powi(k),
            p * fac(1),
            p * (p - one) * fac(2),
            p * (p - one) * (p - two) * fac(3),
        )
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s, -c)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c, s)
    }

    pub fn tan(&self) -> Self {
        let t = self.v.tan();
        let sec2 = T::one() + t * t;
        let two = T::of(2.0);
        self.compose(
            t,
            sec2,
            two * t * sec2,
            sec2 * (two + T::of(6.0) * t * t),
        )
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.compose(s, c, s, c)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.compose(c, s, c, s)
    }

    pub fn tanh(&self) -> Self {
        let t = self.v.tanh();
        let q = T::one() - t * t;
        let two = T::of(2.0);
        self.compose(t, q, -two * t * q, q * (T::of(6.0) * t * t - two))
    }

    /// True when the value and every stored partial is finite.
    pub fn is_finite(&self) -> bool {
        let n = self.dim();
        if !self.v.is_finite() {
            return false;
        }
        let o = self.order;
        (o < 1 || self.d1[..n].iter().all(|x| x.is_finite()))
            && (o < 2 || self.d2[..n].iter().all(|r| r[..n].iter().all(|x| x.is_finite())))
            && (o < 3
                || self.d3[..n]
                    .iter()
                    .all(|p| p[..n].iter().all(|r| r[..n].iter().all(|x| x.is_finite()))))
    }

    /// Largest absolute value over the value and all stored partials.
    pub fn max_abs(&self) -> T {
        let n = self.dim();
        let mut m = self.v.abs();
        let o = self.order;
        for i in 0..n {
            if o >= 1 {
                m = m.max(self.d1[i].abs());
            }
            for j in 0..n {
                if o >= 2 {
                    m = m.max(self.d2[i][j].abs());
                }
                if o >= 3 {
                    for k in 0..n {
                        m = m.max(self.d3[i][j][k].abs());
                    }
                }
            }
        }
        m
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, o: Self) -> Self {
        self.zip_linear(&o, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, o: Self) -> Self {
        self.zip_linear(&o, |a, b| a - b)
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, o: Self) -> Self {
        self.product(&o)
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Jet<T>;
    fn div(self, o: Self) -> Self {
        self.product(&o.recip())
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Self {
        self.map_linear(|x| -x)
    }
}

impl<T: Scalar> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, o: Self) -> Jet<T> {
        self.zip_linear(o, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, o: Self) -> Jet<T> {
        self.zip_linear(o, |a, b| a - b)
    }
}

impl<T: Scalar> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, o: Self) -> Jet<T> {
        self.product(o)
    }
}

impl<T: Scalar> Ring for Jet<T> {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(self.dim(), T::of(c))
    }

    fn real(&self) -> f64 {
        self.v.as_f64()
    }
}
