//! Levi-Civita connection and curvature of a [`MetricField`] at a point.
//!
//! Sign convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and
//! `R_ijkl = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩`, so `R_ijji` is a sectional curvature (positive on spheres).
//! `Ric_jk = g^il R_ijkl`.

use crate::error::Result;
use crate::residual::Residual;
use crate::scalar::Scalar;
use crate::tensor::array::{Mat, Tensor3, Tensor4};
use crate::tensor::field::{MetricField, ScalarField};
use crate::tensor::jet::Jet;
use crate::tensor::linalg;

/// Pointwise curvature data, all in coordinate components.
#[derive(Clone, Debug)]
pub struct CurvatureBundle<T> {
    pub point: Vec<T>,
    pub g: Mat<T>,
    pub g_inv: Mat<T>,
    /// `∂_k g_ij` stored at `(k, i, j)`.
    pub dg: Tensor3<T>,
    /// `Γ^k_ij` stored at `(k, i, j)`.
    pub gamma: Tensor3<T>,
    pub riemann: Tensor4<T>,
    pub ricci: Mat<T>,
    pub scalar: T,
    /// `∂_k Ric_ij` at `(k, i, j)`.
    pub d_ricci: Tensor3<T>,
    pub d_scalar: Vec<T>,
    /// Largest single term `∂_k g^{ij} Ric_ij` or `g^{ij} ∂_k Ric_ij` entering `dR`.
    pub d_scalar_scale: f64,
    /// `∇_k Ric_ij` at `(k, i, j)`.
    pub nabla_ricci: Tensor3<T>,
    /// Largest single term entering `∇Ric`, the natural scale for its cancellations.
    pub nabla_ricci_scale: f64,
    pub weyl: Tensor4<T>,
}

impl<T: Scalar> CurvatureBundle<T> {
    pub fn compute(metric: &MetricField, point: &[T]) -> Result<Self> {
        let n = metric.dim();
        let gj = metric.eval_jets(point)?;
        let g = gj.map(|j| j.value());
        linalg::cholesky(&g)?;
        let dg = Tensor3::from_fn(n, |k, i, j| gj[(i, j)].d1(k));

        // Γ needs one derivative of g and is kept to order 2 so Ric can be differentiated.
        let g2 = gj.map(|j| j.truncate(2));
        let ginv = linalg::invert(&g2);
        let dgj = Tensor3::from_fn(n, |k, i, j| gj[(i, j)].partial(k));
        let half = T::of(0.5);
        let lowered = Tensor3::from_fn(n, |l, i, j| {
            (dgj[(i, j, l)] + dgj[(j, i, l)] - dgj[(l, i, j)]).scale(half)
        });
        let gamma_j = Tensor3::from_fn(n, |k, i, j| {
            (0..n).fold(Jet::constant(n, T::zero()), |acc, l| {
                acc + ginv[(k, l)] * lowered[(l, i, j)]
            })
        });
        let gamma = gamma_j.map(|j| j.value());
        let d_gamma = Tensor4::from_fn(n, |m, k, i, j| gamma_j[(k, i, j)].d1(m));

        // A^p_kij = ∂_iΓ^p_jk − ∂_jΓ^p_ik + Γ^p_im Γ^m_jk − Γ^p_jm Γ^m_ik (values only).
        let mut a = Tensor4::filled(n, T::zero());
        for p in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut x = d_gamma[(i, p, j, k)] - d_gamma[(j, p, i, k)];
                        for m in 0..n {
                            x = x + gamma[(p, i, m)] * gamma[(m, j, k)]
                                - gamma[(p, j, m)] * gamma[(m, i, k)];
                        }
                        a[(p, k, i, j)] = x;
                        a[(p, k, j, i)] = -x;
                    }
                }
            }
        }
        let riemann = Tensor4::from_fn(n, |i, j, k, l| {
            (0..n).fold(T::zero(), |acc, p| acc + g[(l, p)] * a[(p, k, i, j)])
        });

        // Ric_jk = A^i_kij, evaluated on jets to keep first derivatives.
        let gamma1 = gamma_j.map(|j| j.truncate(1));
        let ric_j = Mat::from_fn(n, |j, k| {
            let mut x = Jet::constant(n, T::zero());
            for i in 0..n {
                x = x + gamma_j[(i, j, k)].partial(i) - gamma_j[(i, i, k)].partial(j);
                for m in 0..n {
                    x = x + gamma1[(i, i, m)] * gamma1[(m, j, k)]
                        - gamma1[(i, j, m)] * gamma1[(m, i, k)];
                }
            }
            x
        });
        let scal_j = (0..n).fold(Jet::constant(n, T::zero()), |acc, j| {
            (0..n).fold(acc, |acc, k| acc + ginv[(j, k)] * ric_j[(j, k)])
        });
        let ricci = ric_j.map(|j| j.value());
        let d_ricci = Tensor3::from_fn(n, |k, i, j| ric_j[(i, j)].d1(k));
        let mut nabla_ricci_scale = 0.0f64;
        let nabla_ricci = Tensor3::from_fn(n, |k, i, j| {
            let mut x = d_ricci[(k, i, j)];
            nabla_ricci_scale = nabla_ricci_scale.max(x.as_f64().abs());
            for p in 0..n {
                let (u, v) = (gamma[(p, k, i)] * ricci[(p, j)], gamma[(p, k, j)] * ricci[(i, p)]);
                nabla_ricci_scale = nabla_ricci_scale.max(u.as_f64().abs()).max(v.as_f64().abs());
                x = x - u - v;
            }
            x
        });
        let mut d_scalar_scale = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let u = ginv[(i, j)].d1(k) * ricci[(i, j)];
                    let v = ginv[(i, j)].value() * d_ricci[(k, i, j)];
                    d_scalar_scale = d_scalar_scale.max(u.as_f64().abs()).max(v.as_f64().abs());
                }
            }
        }
        let scalar = scal_j.value();
        let d_scalar = scal_j.gradient();
        let g_inv = ginv.map(|j| j.value());
        let weyl = weyl_from(&riemann, &ricci, scalar, &g);
        Ok(CurvatureBundle {
            point: point.to_vec(),
            g,
            g_inv,
            dg,
            gamma,
            riemann,
            ricci,
            scalar,
            d_ricci,
            d_scalar,
            d_scalar_scale,
            nabla_ricci,
            nabla_ricci_scale,
            weyl,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.n()
    }

    fn max_riemann(&self) -> f64 {
        crate::tensor::array::sup_norm(self.riemann.iter())
    }

    /// `C_kij = ∇_k T_ij − ∇_i T_kj` with `T = Ric − R/(2n−2) g`.
    pub fn codazzi_residual(&self) -> Residual<Tensor3<T>> {
        let n = self.dim();
        let c = T::one() / T::of(2.0 * n as f64 - 2.0);
        let nt = Tensor3::from_fn(n, |k, i, j| {
            self.nabla_ricci[(k, i, j)] - c * self.d_scalar[k] * self.g[(i, j)]
        });
        let res = Tensor3::from_fn(n, |k, i, j| nt[(k, i, j)] - nt[(i, k, j)]);
        let dr = crate::tensor::array::sup_norm(self.d_scalar.iter())
            * crate::tensor::array::sup_norm(self.g.iter())
            * c.as_f64();
        Residual::new(res, self.nabla_ricci_scale.max(dr))
    }

    /// `∇_k Ric_ij − ∇_i Ric_kj`; vanishes for harmonic curvature.
    pub fn ricci_codazzi_residual(&self) -> Residual<Tensor3<T>> {
        let n = self.dim();
        let nr = &self.nabla_ricci;
        let res = Tensor3::from_fn(n, |k, i, j| nr[(k, i, j)] - nr[(i, k, j)]);
        Residual::new(res, self.nabla_ricci_scale)
    }

    /// Contracted second Bianchi identity `g^ki ∇_k Ric_ij − ∂_j R / 2`.
    pub fn bianchi_residual(&self) -> Residual<Vec<T>> {
        let n = self.dim();
        let half = T::of(0.5);
        let mut scale = 0.0f64;
        let res = (0..n)
            .map(|j| {
                let mut div = T::zero();
                for k in 0..n {
                    for i in 0..n {
                        let t = self.g_inv[(k, i)] * self.nabla_ricci[(k, i, j)];
                        let w = self.g_inv[(k, i)].as_f64().abs() * self.nabla_ricci_scale;
                        scale = scale.max(w);
                        div = div + t;
                    }
                }
                scale = scale.max(self.d_scalar[j].as_f64().abs());
                div - half * self.d_scalar[j]
            })
            .collect();
        Residual::new(res, scale)
    }

    /// `∇_k g_ij`, which must vanish for the Levi-Civita connection.
    pub fn metric_compatibility(&self) -> Residual<Tensor3<T>> {
        let n = self.dim();
        let res = Tensor3::from_fn(n, |k, i, j| {
            (0..n).fold(self.dg[(k, i, j)], |acc, p| {
                acc - self.gamma[(p, k, i)] * self.g[(p, j)] - self.gamma[(p, k, j)] * self.g[(i, p)]
            })
        });
        let scale = crate::tensor::array::sup_norm(self.dg.iter())
            .max(crate::tensor::array::sup_norm(self.gamma.iter()) * crate::tensor::array::sup_norm(self.g.iter()));
        Residual::new(res, scale)
    }

    /// Largest violation among the pair symmetries and first Bianchi identity of `Rm`.
    pub fn riemann_symmetry_residual(&self) -> Residual<T> {
        let n = self.dim();
        let r = &self.riemann;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let x = r[(i, j, k, l)];
                        let terms = [
                            x + r[(j, i, k, l)],
                            x + r[(i, j, l, k)],
                            x - r[(k, l, i, j)],
                            x + r[(j, k, i, l)] + r[(k, i, j, l)],
                        ];
                        for t in terms {
                            worst = worst.max(t.abs());
                        }
                    }
                }
            }
        }
        Residual::new(worst, self.max_riemann())
    }

    /// `Ric − g^il R_ijkl` together with the asymmetry of `Ric`.
    pub fn ricci_consistency_residual(&self) -> Residual<Mat<T>> {
        let n = self.dim();
        let res = Mat::from_fn(n, |j, k| {
            let mut tr = T::zero();
            for i in 0..n {
                for l in 0..n {
                    tr = tr + self.g_inv[(i, l)] * self.riemann[(i, j, k, l)];
                }
            }
            (self.ricci[(j, k)] - tr).abs().max((self.ricci[(j, k)] - self.ricci[(k, j)]).abs())
        });
        Residual::new(res, self.max_riemann().max(crate::tensor::array::sup_norm(self.ricci.iter())))
    }

    /// All `g`-traces of `W`.
    pub fn weyl_trace_residual(&self) -> Residual<Mat<T>> {
        let n = self.dim();
        let res = Mat::from_fn(n, |j, k| {
            let mut tr = T::zero();
            for i in 0..n {
                for l in 0..n {
                    tr = tr + self.g_inv[(i, l)] * self.weyl[(i, j, k, l)];
                }
            }
            tr
        });
        Residual::new(res, self.max_riemann())
    }

    /// `W` with scale `max |Rm|`.
    pub fn weyl_residual(&self) -> Residual<Tensor4<T>> {
        Residual::new(self.weyl.clone(), self.max_riemann())
    }

    /// Covariant Hessian `∇df_ij = ∂_i∂_j f − Γ^k_ij ∂_k f`, the matching jet of `f`.
    pub fn hessian(&self, f: &ScalarField) -> Result<(Mat<T>, Jet<T>)> {
        let fj = f.eval_jet(&self.point)?;
        let n = self.dim();
        let h = Mat::from_fn(n, |i, j| {
            (0..n).fold(fj.d2(i, j), |acc, k| acc - self.gamma[(k, i, j)] * fj.d1(k))
        });
        Ok((h, fj))
    }

    /// `g⁻¹ ω` for a covector `ω`.
    pub fn raise(&self, covector: &[T]) -> Vec<T> {
        self.g_inv.mul_vec(covector)
    }

    pub fn ricci_eigensystem(&self, grad_f: Option<&[T]>) -> Result<RicciEigen<T>> {
        let (values, vectors) = linalg::generalized_eigen(&self.g, &self.ricci)?;
        let clusters = linalg::cluster_sizes(&values);
        let radius = values.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
        let gradient_is_eigenvector = grad_f.map(|df| {
            let v = self.raise(df);
            let w = self.g_inv.mul_vec(&self.ricci.mul_vec(&v));
            let vv = self.g.form(&v, &v);
            let wv = self.g.form(&w, &v);
            let c = wv / vv;
            let perp: Vec<T> = w.iter().zip(&v).map(|(&a, &b)| a - c * b).collect();
            let sin = self.g.form(&perp, &perp).max(T::zero()).sqrt().as_f64()
                / ((1.0 + radius) * vv.sqrt().as_f64());
            sin <= EIGENVECTOR_ANGLE_TOL
        });
        Ok(RicciEigen { values, vectors, clusters, gradient_is_eigenvector })
    }
}

/// Angle tolerance for the gradient eigenvector test.
pub const EIGENVECTOR_ANGLE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RicciEigen<T> {
    /// Eigenvalues of `g⁻¹Ric`, nondecreasing.
    pub values: Vec<T>,
    /// `g`-orthonormal eigenvectors as columns.
    pub vectors: Mat<T>,
    /// Multiplicities of numerically equal eigenvalues, in order.
    pub clusters: Vec<usize>,
    pub gradient_is_eigenvector: Option<bool>,
}

/// `(h ⊙ k)_ijkl = h_il k_jk + h_jk k_il − h_ik k_jl − h_jl k_ik`.
fn kulkarni_nomizu<T: Scalar>(h: &Mat<T>, k: &Mat<T>) -> Tensor4<T> {
    Tensor4::from_fn(h.n(), |i, j, a, l| {
        h[(i, l)] * k[(j, a)] + h[(j, a)] * k[(i, l)] - h[(i, a)] * k[(j, l)] - h[(j, l)] * k[(i, a)]
    })
}

fn weyl_from<T: Scalar>(rm: &Tensor4<T>, ric: &Mat<T>, r: T, g: &Mat<T>) -> Tensor4<T> {
    let n = g.n();
    if n < 4 {
        return Tensor4::filled(n, T::zero());
    }
    let nf = T::of(n as f64);
    let two = T::of(2.0);
    let a = T::one() / (nf - two);
    let b = r / (two * (nf - T::one()) * (nf - two));
    let rg = kulkarni_nomizu(ric, g);
    let gg = kulkarni_nomizu(g, g);
    Tensor4::from_fn(n, |i, j, k, l| rm[(i, j, k, l)] - a * rg[(i, j, k, l)] + b * gg[(i, j, k, l)])
}

pub fn christoffel<T: Scalar>(metric: &MetricField, point: &[T]) -> Result<Tensor3<T>> {
    Ok(CurvatureBundle::compute(metric, point)?.gamma)
}

pub fn riemann<T: Scalar>(metric: &MetricField, point: &[T]) -> Result<Tensor4<T>> {
    Ok(CurvatureBundle::compute(metric, point)?.riemann)
}

pub fn ricci_scalar<T: Scalar>(metric: &MetricField, point: &[T]) -> Result<(Mat<T>, T)> {
    let b = CurvatureBundle::compute(metric, point)?;
    Ok((b.ricci, b.scalar))
}

pub fn weyl<T: Scalar>(metric: &MetricField, point: &[T]) -> Result<Tensor4<T>> {
    Ok(CurvatureBundle::compute(metric, point)?.weyl)
}

pub fn codazzi_residual<T: Scalar>(metric: &MetricField, point: &[T]) -> Result<Residual<Tensor3<T>>> {
    Ok(CurvatureBundle::compute(metric, point)?.codazzi_residual())
}

pub fn hessian<T: Scalar>(f: &ScalarField, metric: &MetricField, point: &[T]) -> Result<Mat<T>> {
    Ok(CurvatureBundle::compute(metric, point)?.hessian(f)?.0)
}

pub fn ricci_eigensystem<T: Scalar>(
    metric: &MetricField,
    point: &[T],
    grad_f: Option<&[T]>,
) -> Result<RicciEigen<T>> {
    CurvatureBundle::compute(metric, point)?.ricci_eigensystem(grad_f)
}
