//! Residuals of the quasi-Einstein equation and its companions, evaluated pointwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::residual::{Residual, ResidualReport};
use crate::scalar::Scalar;
use crate::tensor::array::{sup_norm, Mat, Tensor3};
use crate::tensor::curvature::CurvatureBundle;
use crate::tensor::field::{MetricField, ScalarField};
use crate::tensor::linalg;
use crate::tol::Tolerance;

const EXCLUSION_TOL: f64 = 1e-12;

/// The constants `(m, ρ, λ)` of `Ric + ∇df − (1/m) df⊗df = (ρR + λ) g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QEParams {
    pub m: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl QEParams {
    pub fn new(m: f64, rho: f64, lambda: f64) -> Result<Self> {
        if !(m.is_finite() && rho.is_finite() && lambda.is_finite()) {
            return Err(Error::ExcludedParameter("parameters must be finite".into()));
        }
        for bad in [0.0, 1.0, -1.0, -2.0] {
            if (m - bad).abs() <= EXCLUSION_TOL {
                return Err(Error::ExcludedParameter(format!("m = {m}")));
            }
        }
        for bad in [0.25, 1.0 / 6.0] {
            if (rho - bad).abs() <= EXCLUSION_TOL {
                return Err(Error::ExcludedParameter(format!("rho = {rho}")));
            }
        }
        Ok(QEParams { m, rho, lambda })
    }

    /// `4ρ − 1 + m(2ρ − 1)`.
    pub fn denominator(&self) -> f64 {
        4.0 * self.rho - 1.0 + self.m * (2.0 * self.rho - 1.0)
    }

    /// `Λ = −λ / (4ρ − 1 + m(2ρ − 1))`, when the denominator is nonzero.
    pub fn big_lambda(&self) -> Option<f64> {
        let d = self.denominator();
        (d.abs() > EXCLUSION_TOL).then(|| -self.lambda / d)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        QEParams { lambda, ..self }
    }
}

/// Curvature of the metric plus first and second derivatives of a scalar field at a point.
#[derive(Clone, Debug)]
pub struct PointData<T> {
    pub bundle: CurvatureBundle<T>,
    pub value: T,
    /// `df` in coordinates.
    pub df: Vec<T>,
    /// `∇df` in coordinates.
    pub hess: Mat<T>,
}

impl<T: Scalar> PointData<T> {
    pub fn new(metric: &MetricField, field: &ScalarField, point: &[T]) -> Result<Self> {
        let bundle = CurvatureBundle::compute(metric, point)?;
        Self::from_bundle(bundle, field)
    }

    pub fn from_bundle(bundle: CurvatureBundle<T>, field: &ScalarField) -> Result<Self> {
        let (hess, jet) = bundle.hessian(field)?;
        Ok(PointData { value: jet.value(), df: jet.gradient(), hess, bundle })
    }

    pub fn grad(&self) -> Vec<T> {
        self.bundle.raise(&self.df)
    }

    pub fn grad_norm_sq(&self) -> T {
        self.df.iter().zip(self.grad()).fold(T::zero(), |a, (&x, y)| a + x * y)
    }

    pub fn laplacian(&self) -> T {
        let n = self.bundle.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + self.bundle.g_inv[(i, j)] * self.hess[(i, j)];
            }
        }
        s
    }

    /// `Ric + ∇df − (1/m) df⊗df − (ρR + λ) g`.
    pub fn qe_residual(&self, p: &QEParams) -> Residual<Mat<T>> {
        let b = &self.bundle;
        let n = b.dim();
        let inv_m = T::of(1.0 / p.m);
        let c = T::of(p.rho) * b.scalar + T::of(p.lambda);
        let mut scale = 0.0f64;
        let res = Mat::from_fn(n, |i, j| {
            let terms = [
                b.ricci[(i, j)],
                self.hess[(i, j)],
                inv_m * self.df[i] * self.df[j],
                c * b.g[(i, j)],
            ];
            for t in terms {
                scale = scale.max(t.as_f64().abs());
            }
            terms[0] + terms[1] - terms[2] - terms[3]
        });
        Residual::new(res, scale)
    }

    /// `∇dw − (w/m)(Ric − λg)`, reading the field as the profile `w`.
    pub fn w_residual(&self, m: f64, lambda: f64) -> Residual<Mat<T>> {
        let b = &self.bundle;
        let n = b.dim();
        let c = self.value / T::of(m);
        let l = T::of(lambda);
        let mut scale = 0.0f64;
        let res = Mat::from_fn(n, |i, j| {
            let rhs = c * (b.ricci[(i, j)] - l * b.g[(i, j)]);
            scale = scale
                .max(self.hess[(i, j)].as_f64().abs())
                .max((c * b.ricci[(i, j)]).as_f64().abs())
                .max((c * l * b.g[(i, j)]).as_f64().abs());
            self.hess[(i, j)] - rhs
        });
        Residual::new(res, scale)
    }

    /// `μ = wΔw + (m − 1)|∇w|² + λw²`.
    pub fn mu_value(&self, m: f64, lambda: f64) -> T {
        let w = self.value;
        w * self.laplacian() + T::of(m - 1.0) * self.grad_norm_sq() + T::of(lambda) * w * w
    }

    /// The orthonormal frame `E_1 = ∇f/|∇f|`, `E_2..E_n` diagonalizing `Ric` on `E_1^⊥`.
    pub fn adapted_frame(&self) -> Result<AdaptedFrame<T>> {
        adapted_frame(&self.bundle, &self.df)
    }

    /// Left minus right side of
    /// `R(X,Y,∇f,Z) = (ρ − 1/(2n−2)) (X(R) g(Y,Z) − Y(R) g(X,Z)) − (1/m)(df(X)∇df(Y,Z) − df(Y)∇df(X,Z))`
    /// for all frame triples `(X, Y, Z)` of the adapted frame.
    pub fn curvature_identity_residual(&self, p: &QEParams) -> Result<Residual<Tensor3<T>>> {
        let frame = self.adapted_frame()?;
        let b = &self.bundle;
        let n = b.dim();
        let grad = self.grad();
        let e = |a: usize| frame.column(a);
        let cols: Vec<Vec<T>> = (0..n).map(e).collect();
        let dot = |w: &[T], v: &[T]| w.iter().zip(v).fold(T::zero(), |a, (&x, &y)| a + x * y);
        let dr: Vec<T> = cols.iter().map(|c| dot(&b.d_scalar, c)).collect();
        // rounding in dR is relative to the terms it is summed from
        let dr_scale: Vec<f64> = cols.iter().map(|c| b.d_scalar_scale * abs_sum(c)).collect();
        let dfe: Vec<T> = cols.iter().map(|c| dot(&self.df, c)).collect();
        let h = Mat::from_fn(n, |a, c| self.hess.form(&cols[a], &cols[c]));
        let k = T::of(p.rho - 1.0 / (2.0 * n as f64 - 2.0));
        let inv_m = T::of(1.0 / p.m);
        let mut scale = 0.0f64;
        let res = Tensor3::from_fn(n, |x, y, z| {
            let mut lhs = T::zero();
            for i in 0..n {
                for j in 0..n {
                    for kk in 0..n {
                        for l in 0..n {
                            lhs = lhs
                                + b.riemann[(i, j, kk, l)]
                                    * cols[x][i]
                                    * cols[y][j]
                                    * grad[kk]
                                    * cols[z][l];
                        }
                    }
                }
            }
            let gyz = if y == z { T::one() } else { T::zero() };
            let gxz = if x == z { T::one() } else { T::zero() };
            let t1 = k * (dr[x] * gyz - dr[y] * gxz);
            let t2 = inv_m * (dfe[x] * h[(y, z)] - dfe[y] * h[(x, z)]);
            scale = scale
                .max(lhs.as_f64().abs())
                .max(t1.as_f64().abs())
                .max(k.as_f64().abs() * dr_scale[x].max(dr_scale[y]))
                .max((inv_m * dfe[x] * h[(y, z)]).as_f64().abs())
                .max((inv_m * dfe[y] * h[(x, z)]).as_f64().abs());
            lhs - t1 + t2
        });
        Ok(Residual::new(res, scale))
    }

    /// Principal curvatures of the level sets, two ways:
    /// `⟨∇_{E_i}E_1, E_i⟩ = ∇df(E_i,E_i)/|∇f|` and `(ρR + λ − R_ii)/f′`, for `i ≥ 2`.
    pub fn zeta_pair(&self, p: &QEParams) -> Result<(Vec<T>, Vec<T>)> {
        let frame = self.adapted_frame()?;
        let fp = frame.grad_norm;
        let n = self.bundle.dim();
        let c = T::of(p.rho) * self.bundle.scalar + T::of(p.lambda);
        let mut conn = Vec::new();
        let mut ric = Vec::new();
        for i in 1..n {
            let col = frame.column(i);
            conn.push(self.hess.form(&col, &col) / fp);
            ric.push((c - frame.ricci[i]) / fp);
        }
        Ok((conn, ric))
    }

    /// `R_1ii1 − [(R′/f′)(1/6 − ρ) − (1/m)(R_ii − ρR − λ)]` for `i ≥ 2`, in dimension 4.
    ///
    /// `None` when `|f′|` is below `skip_below`; the caller counts such samples.
    pub fn radial_curvature_residual(&self, p: &QEParams, skip_below: f64) -> Result<Option<Residual<Vec<T>>>> {
        let frame = self.adapted_frame()?;
        let fp = frame.grad_norm;
        if fp.as_f64().abs() < skip_below {
            return Ok(None);
        }
        let b = &self.bundle;
        let n = b.dim();
        let e1 = frame.column(0);
        let rp = b.d_scalar.iter().zip(&e1).fold(T::zero(), |a, (&x, &y)| a + x * y);
        let rp_scale = b.d_scalar_scale * abs_sum(&e1);
        let k = T::of(1.0 / (2.0 * n as f64 - 2.0) - p.rho);
        let c = T::of(p.rho) * b.scalar + T::of(p.lambda);
        let inv_m = T::of(1.0 / p.m);
        let mut scale = 0.0f64;
        let mut res = Vec::new();
        for i in 1..n {
            let ei = frame.column(i);
            let mut radial_curvature = T::zero();
            for a in 0..n {
                for bb in 0..n {
                    for cc in 0..n {
                        for d in 0..n {
                            radial_curvature = radial_curvature + b.riemann[(a, bb, cc, d)] * e1[a] * ei[bb] * ei[cc] * e1[d];
                        }
                    }
                }
            }
            let t1 = rp / fp * k;
            let t2 = inv_m * (frame.ricci[i] - c);
            for t in [radial_curvature, t1, t2, frame.ricci[i], c] {
                scale = scale.max(t.as_f64().abs());
            }
            scale = scale.max(rp_scale / fp.as_f64().abs() * k.as_f64().abs());
            res.push(radial_curvature - t1 + t2);
        }
        Ok(Some(Residual::new(res, scale)))
    }
}

fn abs_sum<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.as_f64().abs()).sum()
}

#[derive(Clone, Debug)]
pub struct AdaptedFrame<T> {
    /// Columns are `E_1, ..., E_n` in coordinate components.
    pub frame: Mat<T>,
    /// `Ric(E_i, E_i)`.
    pub ricci: Vec<T>,
    /// `|∇f|`, which is `f′` in the normal form.
    pub grad_norm: T,
    /// Largest `|Ric(E_1, E_i)|`, `i ≥ 2`; zero when `E_1` is an eigenvector.
    pub off_diagonal: T,
}

impl<T: Scalar> AdaptedFrame<T> {
    pub fn column(&self, a: usize) -> Vec<T> {
        (0..self.frame.n()).map(|i| self.frame[(i, a)]).collect()
    }
}

pub fn adapted_frame<T: Scalar>(bundle: &CurvatureBundle<T>, df: &[T]) -> Result<AdaptedFrame<T>> {
    let n = bundle.dim();
    let g = &bundle.g;
    let v = bundle.raise(df);
    let norm = g.form(&v, &v).max(T::zero()).sqrt();
    let df_scale = sup_norm(df.iter());
    if !(norm.as_f64() > 1e-12 * (1.0 + df_scale)) || norm.as_f64() == 0.0 {
        return Err(Error::ZeroGradient(norm.as_f64()));
    }
    let e1: Vec<T> = v.iter().map(|&x| x / norm).collect();

    // Orthonormal basis of E_1^⊥ by Gram–Schmidt, taking coordinate vectors in order of how
    // much survives projection.
    let mut basis = vec![e1.clone()];
    let mut cand: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    while basis.len() < n {
        let mut best: Option<(usize, Vec<T>, T)> = None;
        for (ci, c) in cand.iter().enumerate() {
            let mut w = c.clone();
            for b in &basis {
                let p = g.form(&w, b);
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi = *wi - p * bi;
                }
            }
            let len = g.form(&w, &w).max(T::zero()).sqrt();
            if best.as_ref().is_none_or(|(_, _, l)| len > *l) {
                best = Some((ci, w, len));
            }
        }
        let (ci, w, len) = best.expect("candidates remain");
        basis.push(w.iter().map(|&x| x / len).collect());
        cand.remove(ci);
    }
    let ric = &bundle.ricci;
    let m = n - 1;
    let red = Mat::from_fn(m, |a, b| ric.form(&basis[a + 1], &basis[b + 1]));
    let (vals, vecs) = linalg::symmetric_eigen(&red);
    let mut frame = Mat::filled(n, T::zero());
    for i in 0..n {
        frame[(i, 0)] = e1[i];
    }
    for k in 0..m {
        for i in 0..n {
            let mut x = T::zero();
            for a in 0..m {
                x = x + vecs[(a, k)] * basis[a + 1][i];
            }
            frame[(i, k + 1)] = x;
        }
    }
    let mut ricci = vec![ric.form(&e1, &e1)];
    ricci.extend(vals);
    let mut off = T::zero();
    for k in 1..n {
        let col: Vec<T> = (0..n).map(|i| frame[(i, k)]).collect();
        off = off.max(ric.form(&e1, &col).abs());
    }
    Ok(AdaptedFrame { frame, ricci, grad_norm: norm, off_diagonal: off })
}

pub fn qe_residual<T: Scalar>(
    metric: &MetricField,
    f: &ScalarField,
    params: &QEParams,
    point: &[T],
) -> Result<Residual<Mat<T>>> {
    Ok(PointData::new(metric, f, point)?.qe_residual(params))
}

pub fn w_residual<T: Scalar>(
    metric: &MetricField,
    w: &ScalarField,
    m: f64,
    lambda: f64,
    point: &[T],
) -> Result<Residual<Mat<T>>> {
    Ok(PointData::new(metric, w, point)?.w_residual(m, lambda))
}

pub fn mu_value<T: Scalar>(
    metric: &MetricField,
    w: &ScalarField,
    m: f64,
    lambda: f64,
    point: &[T],
) -> Result<T> {
    Ok(PointData::new(metric, w, point)?.mu_value(m, lambda))
}

pub fn curvature_identity_residual<T: Scalar>(
    metric: &MetricField,
    f: &ScalarField,
    params: &QEParams,
    point: &[T],
    (x, y, z): (usize, usize, usize),
) -> Result<T> {
    let r = PointData::new(metric, f, point)?.curvature_identity_residual(params)?;
    Ok(r.tensor[(x, y, z)])
}

fn report<T: Scalar, A: crate::residual::Components>(
    points: &[Vec<T>],
    tol: Tolerance,
    mut f: impl FnMut(&[T]) -> Result<Residual<A>>,
) -> Result<ResidualReport> {
    if points.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut samples = Vec::with_capacity(points.len());
    for p in points {
        samples.push(f(p)?.summary());
    }
    let pts = points.iter().map(|p| p.iter().map(|x| x.as_f64()).collect()).collect();
    Ok(ResidualReport::from_samples(pts, samples, tol))
}

/// Sup-norm of the Codazzi residual of `Ric − R/(2n−2) g` over `points`.
pub fn harmonic_weyl_residual<T: Scalar>(
    metric: &MetricField,
    points: &[Vec<T>],
    tol: Tolerance,
) -> Result<ResidualReport> {
    report(points, tol, |p| Ok(CurvatureBundle::compute(metric, p)?.codazzi_residual()))
}

/// Sup-norm of `Ric − c g` over `points`.
pub fn einstein_residual<T: Scalar>(
    metric: &MetricField,
    einstein_constant: f64,
    points: &[Vec<T>],
    tol: Tolerance,
) -> Result<ResidualReport> {
    report(points, tol, |p| {
        let b = CurvatureBundle::compute(metric, p)?;
        Ok(einstein_of(&b, einstein_constant))
    })
}

pub fn einstein_of<T: Scalar>(b: &CurvatureBundle<T>, c: f64) -> Residual<Mat<T>> {
    let c = T::of(c);
    let res = Mat::from_fn(b.dim(), |i, j| b.ricci[(i, j)] - c * b.g[(i, j)]);
    let scale = sup_norm(b.ricci.iter()).max(c.abs().as_f64() * sup_norm(b.g.iter()));
    Residual::new(res, scale)
}
