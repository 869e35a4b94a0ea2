//! Small dense linear algebra: Cholesky, inversion over any [`Ring`], symmetric eigen.

use crate::error::{Error, Result};
use crate::scalar::{Ring, Scalar};
use crate::tensor::array::Mat;

/// Lower factor `L` with `A = L Lᵀ`; fails unless `A` is positive definite.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.n();
    let mut l = Mat::filled(n, T::zero());
    let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = scale * T::epsilon() * T::of(n as f64);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::DegenerateMetric(format!(
                "pivot {j} is {d}; matrix is not positive definite"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Gauss–Jordan inverse without pivoting.
///
/// Only valid when every leading principal minor is nonzero, which holds for
/// positive definite matrices; callers check that through [`cholesky`] first.
pub fn invert<R: Ring>(a: &Mat<R>) -> Mat<R> {
    let n = a.n();
    let mut m = a.clone();
    let one = a[(0, 0)].lift(1.0);
    let zero = a[(0, 0)].lift(0.0);
    let mut inv = Mat::from_fn(n, |i, j| if i == j { one.clone() } else { zero.clone() });
    for p in 0..n {
        let r = one.clone() / m[(p, p)].clone();
        for j in 0..n {
            m[(p, j)] = m[(p, j)].clone() * r.clone();
            inv[(p, j)] = inv[(p, j)].clone() * r.clone();
        }
        for i in 0..n {
            if i == p {
                continue;
            }
            let f = m[(i, p)].clone();
            for j in 0..n {
                m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(p, j)].clone();
                inv[(i, j)] = inv[(i, j)].clone() - f.clone() * inv[(p, j)].clone();
            }
        }
    }
    inv
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in nondecreasing order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.n();
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + m[(i, i)] * m[(i, i)];
            for j in i + 1..n {
                off = off + m[(i, j)] * m[(i, j)];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = Mat::from_fn(n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_solve<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.n();
    let mut x = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn backward_solve_transpose<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.n();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Eigenpairs of `g⁻¹ A` for symmetric `A` and positive definite `g`.
///
/// Eigenvectors are returned as columns and are orthonormal with respect to `g`.
pub fn generalized_eigen<T: Scalar>(g: &Mat<T>, a: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = g.n();
    let l = cholesky(g)?;
    // C = L⁻¹ A L⁻ᵀ, built column by column.
    let mut linv_a = Mat::filled(n, T::zero());
    for j in 0..n {
        let col: Vec<T> = (0..n).map(|i| a[(i, j)]).collect();
        let x = forward_solve(&l, &col);
        for i in 0..n {
            linv_a[(i, j)] = x[i];
        }
    }
    let mut c = Mat::filled(n, T::zero());
    for i in 0..n {
        let row: Vec<T> = (0..n).map(|j| linv_a[(i, j)]).collect();
        let x = forward_solve(&l, &row);
        for j in 0..n {
            c[(i, j)] = x[j];
        }
    }
    let c = Mat::from_fn(n, |i, j| (c[(i, j)] + c[(j, i)]) / T::of(2.0));
    let (vals, y) = symmetric_eigen(&c);
    let mut vecs = Mat::filled(n, T::zero());
    for k in 0..n {
        let col: Vec<T> = (0..n).map(|i| y[(i, k)]).collect();
        let x = backward_solve_transpose(&l, &col);
        for i in 0..n {
            vecs[(i, k)] = x[i];
        }
    }
    Ok((vals, vecs))
}

/// Groups sorted eigenvalues whose consecutive gaps are below `1e-6 (1 + spectral radius)`.
pub fn cluster_sizes<T: Scalar>(sorted: &[T]) -> Vec<usize> {
    let radius = sorted.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
    let gap = 1e-6 * (1.0 + radius);
    let mut out = Vec::new();
    let mut run = 0;
    for (i, x) in sorted.iter().enumerate() {
        if i > 0 && (x.as_f64() - sorted[i - 1].as_f64()).abs() > gap {
            out.push(run);
            run = 0;
        }
        run += 1;
    }
    if run > 0 {
        out.push(run);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::jet::Jet;

    fn spd() -> Mat<f64> {
        Mat::from_fn(3, |i, j| if i == j { 4.0 + i as f64 } else { 0.5 + 0.1 * (i + j) as f64 })
    }

    fn matmul(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
        let n = a.n();
        Mat::from_fn(n, |i, j| (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let a = spd();
        let l = cholesky(&a).unwrap();
        let lt = Mat::from_fn(3, |i, j| l[(j, i)]);
        let r = matmul(&l, &lt);
        for (x, y) in r.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
        let bad = Mat::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(cholesky(&bad), Err(Error::DegenerateMetric(_))));
    }

    #[test]
    fn inverse_of_values_and_jets() {
        let a = spd();
        let inv = invert(&a);
        let id = matmul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        // d(A⁻¹) = -A⁻¹ dA A⁻¹ for A(x) = diag(1 + x, 2) at x = 1.
        let x = Jet::variable(1, 3, 0, 1.0f64);
        let c = |v| Jet::constant(1, v);
        let m = Mat::from_fn(2, |i, j| match (i, j) {
            (0, 0) => x + c(1.0),
            (1, 1) => c(2.0),
            _ => c(0.0),
        });
        let mi = invert(&m);
        assert!((mi[(0, 0)].value() - 0.5).abs() < 1e-15);
        assert!((mi[(0, 0)].d1(0) + 0.25).abs() < 1e-15);
        assert!((mi[(0, 0)].d3(0, 0, 0) + 6.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_eigenpairs() {
        let a = spd();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..3 {
            let v: Vec<f64> = (0..3).map(|i| vecs[(i, k)]).collect();
            let av = a.mul_vec(&v);
            for i in 0..3 {
                assert!((av[i] - vals[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generalized_eigen_is_g_orthonormal() {
        let g = spd();
        let a = Mat::from_fn(3, |i, j| (i * j) as f64 + if i == j { 1.0 } else { 0.0 });
        let (vals, vecs) = generalized_eigen(&g, &a).unwrap();
        for k in 0..3 {
            let v: Vec<f64> = (0..3).map(|i| vecs[(i, k)]).collect();
            let av = a.mul_vec(&v);
            let gv = g.mul_vec(&v);
            for i in 0..3 {
                assert!((av[i] - vals[k] * gv[i]).abs() < 1e-12);
            }
            assert!((g.form(&v, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clusters() {
        assert_eq!(cluster_sizes(&[1.0 / 3.0, 1.0 / 3.0 + 1e-12, 1.0, 1.0]), vec![2, 2]);
        assert_eq!(cluster_sizes(&[0.0, 0.5, 0.5, 0.5]), vec![1, 3]);
        assert_eq!(cluster_sizes::<f64>(&[]), Vec::<usize>::new());
    }
}
