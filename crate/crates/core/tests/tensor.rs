use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qem_core::catalog::{build_entry, sample_domain, ConstCurvChart, EntryId};
use qem_core::qe::{qe_residual, PointData, QEParams};
use qem_core::tensor::*;
use qem_core::{Error, Tolerance};
use std::f64::consts::PI;

fn chart(n: usize) -> Chart {
    Chart::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

fn flat(n: usize) -> MetricField {
    MetricField::diagonal(chart(n), vec![Expr::one(); n], Domain::unbounded(n)).unwrap()
}

fn sphere2() -> MetricField {
    let s = Expr::var(0);
    let g = vec![Expr::one(), s.sin().sq()];
    MetricField::diagonal(Chart::new(["s", "t"]).unwrap(), g, Domain::new(vec![Interval::new(0.0, PI), Interval::new(-PI, PI)])).unwrap()
}

fn t1ii() -> qem_core::catalog::CatalogEntry {
    build_entry(EntryId::T1II, EntryId::T1II.defaults()).unwrap()
}

#[test]
fn flat_metric_has_no_curvature() {
    let g = flat(4);
    let p = [0.3, -1.0, 2.0, 0.7];
    let j = g.eval_jets(&p).unwrap();
    for i in 0..4 {
        for k in 0..4 {
            assert_eq!(j[(i, k)].value(), if i == k { 1.0 } else { 0.0 });
            assert!(j[(i, k)].gradient().iter().all(|&x| x == 0.0));
        }
    }
    let b = CurvatureBundle::compute(&g, &p).unwrap();
    assert!(b.gamma.iter().all(|&x| x == 0.0));
    assert!(b.riemann.iter().all(|&x| x == 0.0));
    assert!(b.ricci.iter().all(|&x| x == 0.0));
    assert_eq!(b.scalar, 0.0);
    assert!(b.weyl.iter().all(|&x| x == 0.0));
    assert_eq!(b.codazzi_residual().sup(), 0.0);
    let f = ScalarField::potential(Expr::cst(3.0));
    assert!(hessian(&f, &g, &p).unwrap().iter().all(|&x| x == 0.0));
    let eig = ricci_eigensystem(&g, &p, None).unwrap();
    assert_eq!(eig.values, vec![0.0; 4]);
    assert_eq!(eig.gradient_is_eigenvector, None);
    let q = QEParams::new(2.0, 0.3, 0.0).unwrap();
    assert_eq!(qe_residual(&g, &f, &q, &p).unwrap().sup(), 0.0);
}

#[test]
fn metric_jets_match_hand_derivatives() {
    let g = sphere2();
    let j = g.eval_jets(&[PI / 4.0, 0.0]).unwrap();
    assert_abs_diff_eq!(j[(1, 1)].d1(0), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(j[(1, 1)].d2(0, 0), 2.0 * (PI / 2.0).cos(), epsilon = 1e-15);
    assert_abs_diff_eq!(j[(1, 1)].d3(0, 0, 0), -4.0 * (PI / 2.0).sin(), epsilon = 1e-14);

    let s = Expr::var(0);
    let g = MetricField::diagonal(Chart::new(["s", "t"]).unwrap(), vec![Expr::one(), s.powf(2.0 / 9.0)], Domain::new(vec![Interval::new(0.0, 10.0), Interval::new(-PI, PI)])).unwrap();
    let j = g.eval_jets(&[1.0, 0.0]).unwrap();
    assert_abs_diff_eq!(j[(1, 1)].d1(0), 2.0 / 9.0, epsilon = 1e-15);
    assert_abs_diff_eq!(j[(1, 1)].d2(0, 0), 2.0 / 9.0 * (2.0 / 9.0 - 1.0), epsilon = 1e-15);
    assert!(matches!(g.eval_jets(&[-1.0, 0.0]), Err(Error::Domain(_))));
}

#[test]
fn sphere_christoffels_and_curvature() {
    let g = sphere2();
    for &s in &[0.4f64, 1.0, 2.5] {
        let p = [s, 0.3];
        let gm = christoffel(&g, &p).unwrap();
        assert_abs_diff_eq!(gm[(0, 1, 1)], -s.sin() * s.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(gm[(1, 0, 1)], s.cos() / s.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(gm[(1, 1, 0)], s.cos() / s.sin(), epsilon = 1e-14);
        let rm = riemann(&g, &p).unwrap();
        // R_stts = K g_ss g_tt
        assert_abs_diff_eq!(rm[(0, 1, 1, 0)], s.sin().powi(2), epsilon = 1e-13);
        let (_, r) = ricci_scalar(&g, &p).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-13);
        assert!(weyl(&g, &p).unwrap().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn constant_curvature_charts_have_their_curvature() {
    for &k in &[1.0, -1.0, 0.0, 0.25, -4.0] {
        for dim in [2, 3] {
            let c = ConstCurvChart::new(k, dim);
            let g = c.metric();
            let p: Vec<f64> = (0..dim).map(|i| [0.6, 1.1, 0.4][i]).collect();
            let (_, r) = ricci_scalar(&g, &p).unwrap();
            assert_abs_diff_eq!(r, k * (dim * (dim - 1)) as f64, epsilon = 1e-11);
        }
    }
}

fn finite_difference_gamma(g: &MetricField, p: &[f64], h: f64) -> Tensor3<f64> {
    let n = p.len();
    let dg = Tensor3::from_fn(n, |k, i, j| {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[k] += h;
        b[k] -= h;
        (g.eval(&a).unwrap()[(i, j)] - g.eval(&b).unwrap()[(i, j)]) / (2.0 * h)
    });
    let gi = qem_core::tensor::linalg::invert(&g.eval(p).unwrap());
    Tensor3::from_fn(n, |k, i, j| {
        (0..n).map(|l| 0.5 * gi[(k, l)] * (dg[(i, j, l)] + dg[(j, i, l)] - dg[(l, i, j)])).sum()
    })
}

#[test]
fn christoffels_and_riemann_agree_with_finite_differences() {
    for id in [EntryId::T1II, EntryId::T1V, EntryId::T53Sin] {
        let e = build_entry(id, id.defaults()).unwrap();
        for p in sample_domain(&e, 5, 3).unwrap() {
            let b = CurvatureBundle::compute(&e.metric, &p).unwrap();
            let fd = finite_difference_gamma(&e.metric, &p, 1e-5);
            let scale = 1.0 + b.gamma.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (x, y) in b.gamma.iter().zip(fd.iter()) {
                assert!((x - y).abs() <= 1e-7 * scale, "{id}: {x} vs {y}");
            }
            // Riemann from centered differences of the jet-computed Γ
            let n = p.len();
            let h = 1e-5;
            let dgam = |m: usize| {
                let mut a = p.clone();
                let mut c = p.clone();
                a[m] += h;
                c[m] -= h;
                let ga = christoffel(&e.metric, &a).unwrap();
                let gc = christoffel(&e.metric, &c).unwrap();
                Tensor3::from_fn(n, |k, i, j| (ga[(k, i, j)] - gc[(k, i, j)]) / (2.0 * h))
            };
            let d: Vec<Tensor3<f64>> = (0..n).map(dgam).collect();
            let gm = &b.gamma;
            let rscale = 1.0 + b.riemann.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mut a = 0.0;
                            for q in 0..n {
                                let mut apq = d[i][(q, j, k)] - d[j][(q, i, k)];
                                for mm in 0..n {
                                    apq += gm[(q, i, mm)] * gm[(mm, j, k)] - gm[(q, j, mm)] * gm[(mm, i, k)];
                                }
                                a += b.g[(l, q)] * apq;
                            }
                            assert!((a - b.riemann[(i, j, k, l)]).abs() <= 1e-5 * rscale, "{id}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn product_metric_curvature_values() {
    let e = t1ii();
    let b = CurvatureBundle::compute(&e.metric, &[0.7, 0.2, 1.0, 0.5]).unwrap();
    let sec = b.riemann[(0, 1, 1, 0)] / (b.g[(0, 0)] * b.g[(1, 1)]);
    assert_abs_diff_eq!(sec, 1.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b.scalar, 8.0 / 3.0, epsilon = 1e-12);
    let f = e.field.as_ref().unwrap();
    let d = PointData::from_bundle(b.clone(), f).unwrap();
    let eig = b.ricci_eigensystem(Some(&d.df)).unwrap();
    for (x, y) in eig.values.iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0, 1.0]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    assert_eq!(eig.gradient_is_eigenvector, Some(true));
    let w = b.weyl_residual().sup();
    assert!(w > 1e-3);

    let v = build_entry(EntryId::T1V, EntryId::T1V.defaults()).unwrap();
    let (_, r) = ricci_scalar(&v.metric, &[1.0, 0.1, 0.2, 0.3]).unwrap();
    assert_abs_diff_eq!(r, -8.0 / 81.0, epsilon = 1e-14);
}

#[test]
fn hessian_examples() {
    let e = t1ii();
    let q = e.qe_params().unwrap();
    let f = e.field.as_ref().unwrap();
    for &s in &[0.3, 1.2, 2.0] {
        let d: PointData<f64> = PointData::new(&e.metric, f, &[s, 0.1, 1.0, 0.2]).unwrap();
        // s is a unit-speed coordinate, so E₁ = ∂_s
        let fp = d.df[0];
        assert_abs_diff_eq!(d.hess[(0, 0)] - fp * fp / 2.0, 2.0 / 3.0, epsilon = 1e-11);
        let r = d.qe_residual(&q);
        assert!(r.tensor[(0, 0)].abs() < 1e-12);
        let r = d.qe_residual(&q.with_lambda(1.01));
        assert_abs_diff_eq!(r.tensor[(0, 0)], -0.01, epsilon = 1e-12);
    }
    let c = build_entry(EntryId::C62II, EntryId::C62II.defaults()).unwrap();
    let w = c.field.as_ref().unwrap();
    for &s in &[0.3, 1.2] {
        let pt = [s, 0.1, 1.0, 0.2];
        let d = PointData::new(&c.metric, w, &pt).unwrap();
        assert_abs_diff_eq!(d.hess[(0, 0)], -(1.0 / 4.0) * w.eval_jet(&pt).unwrap().value(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.mu_value(3.0, 1.0), 0.5, epsilon = 1e-12);
    }
    // constant w on an Einstein metric: μ = λc²
    let s = ConstCurvChart::new(1.0, 3);
    let mut diag = vec![Expr::one()];
    diag.extend(s.diagonal(1).into_iter().map(|c| Expr::var(0).sin().sq() * c));
    let mut guard = vec![Interval::new(0.0, PI)];
    guard.extend(s.guard());
    let g = MetricField::diagonal(chart(4), diag, Domain::new(guard)).unwrap();
    let d = PointData::new(&g, &ScalarField::profile(Expr::cst(2.0)), &[1.0, 0.8, 1.0, 0.3]).unwrap();
    assert_abs_diff_eq!(d.mu_value(3.0, 3.0), 12.0, epsilon = 1e-12);
    assert!(d.w_residual(3.0, 3.0).passes(&Tolerance::DEFAULT));
    assert!(einstein_of_ok(&g));
}

fn einstein_of_ok(g: &MetricField) -> bool {
    let p = [vec![1.0, 0.8, 1.0, 0.3], vec![2.0, 0.4, 2.0, -1.0]];
    qem_core::qe::einstein_residual(g, 3.0, &p, Tolerance::DEFAULT).unwrap().pass
}

#[test]
fn codazzi_perturbation_is_linear() {
    let e = t1ii();
    let p = [0.9, 0.3, 1.0, 0.4];
    let s = Expr::var(0);
    let mut prev = None;
    for eps in [1e-4, 2e-4, 4e-4] {
        let g = e.metric.perturbed(0, 0, eps * s.powi(3) * Expr::var(2));
        let c = codazzi_residual(&g, &p).unwrap().sup();
        assert!(c > 1e-7);
        if let Some(c0) = prev {
            let ratio: f64 = c / c0;
            assert!((ratio - 2.0).abs() < 0.01, "{ratio}");
        }
        prev = Some(c);
    }
    let g = e.metric.perturbed(0, 0, 1e-4 * s.powi(3) * Expr::var(2));
    let pts = sample_domain(&e, 10, 1).unwrap();
    let r = qem_core::qe::harmonic_weyl_residual(&g, &pts, Tolerance::DEFAULT).unwrap();
    assert!(!r.pass);
}

#[test]
fn algebraic_symmetries_hold_on_catalog_samples() {
    let tol = Tolerance::DEFAULT;
    for id in EntryId::ALL {
        let e = build_entry(id, id.defaults()).unwrap();
        for p in sample_domain(&e, 10, 11).unwrap() {
            let b = CurvatureBundle::compute(&e.metric, &p).unwrap();
            assert!(b.riemann_symmetry_residual().passes(&tol), "{id}");
            assert!(b.bianchi_residual().passes(&tol), "{id}");
            assert!(b.metric_compatibility().passes(&tol), "{id}");
            assert!(b.ricci_consistency_residual().passes(&tol), "{id}");
            assert!(b.weyl_trace_residual().passes(&tol), "{id}");
        }
    }
}

#[test]
fn single_precision_smoke() {
    let e = t1ii();
    let p = [0.7f32, 0.2, 1.0, 0.5];
    let b = CurvatureBundle::<f32>::compute(&e.metric, &p).unwrap();
    assert!((b.scalar - 8.0 / 3.0).abs() < 1e-3);
    let q = e.qe_params().unwrap();
    let r = qe_residual(&e.metric, e.field.as_ref().unwrap(), &q, &p).unwrap();
    assert!(r.passes(&Tolerance::relative(1e-4)));
}

#[test]
fn degenerate_metric_is_rejected() {
    let s = Expr::var(0);
    let g = MetricField::diagonal(chart(2), vec![Expr::one(), s.clone() - s], Domain::unbounded(2)).unwrap();
    assert!(matches!(CurvatureBundle::compute(&g, &[0.5, 0.5]), Err(Error::DegenerateMetric(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn warped_product_invariants(a in 0.2f64..2.0, b in 0.2f64..2.0, s in 0.2f64..1.3, x in 0.2f64..1.3) {
        // ds² + exp(2as) dt² + (1 + b s²) dx² + dy², random warping
        let sv = Expr::var(0);
        let g = MetricField::diagonal(
            chart(4),
            vec![Expr::one(), (2.0 * a * sv.clone()).exp(), 1.0 + b * sv.sq(), Expr::one()],
            Domain::unbounded(4),
        ).unwrap();
        let bun = CurvatureBundle::compute(&g, &[s, 0.1, x, 0.3]).unwrap();
        let tol = Tolerance::DEFAULT;
        prop_assert!(bun.riemann_symmetry_residual().passes(&tol));
        prop_assert!(bun.bianchi_residual().passes(&tol));
        prop_assert!(bun.metric_compatibility().passes(&tol));
        prop_assert!(bun.weyl_trace_residual().passes(&tol));
        // isometries in t, x, y: curvature does not depend on them
        let other = CurvatureBundle::compute(&g, &[s, 2.0, -x, 5.0]).unwrap();
        prop_assert!((bun.scalar - other.scalar).abs() <= 1e-12 * (1.0 + bun.scalar.abs()));
    }

    #[test]
    fn scaling_the_metric_scales_curvature(c in 0.3f64..3.0, s in 0.3f64..2.5) {
        let sv = Expr::var(0);
        let base = vec![Expr::one(), sv.sin().sq()];
        let scaled: Vec<Expr> = base.iter().map(|e| c * e.clone()).collect();
        let dom = || Domain::new(vec![Interval::new(0.0, PI), Interval::new(-PI, PI)]);
        let g0 = MetricField::diagonal(chart(2), base, dom()).unwrap();
        let g1 = MetricField::diagonal(chart(2), scaled, dom()).unwrap();
        let (_, r0) = ricci_scalar(&g0, &[s, 0.0]).unwrap();
        let (_, r1) = ricci_scalar(&g1, &[s, 0.0]).unwrap();
        prop_assert!((r1 - r0 / c).abs() <= 1e-12 * (1.0 + r0.abs()));
    }
}
