use qem_core::catalog::{build_entry, cluster_pattern, sample_domain, sample_spectral, EntryId, Equation};
use qem_core::qe::{einstein_of, PointData};
use qem_core::tensor::CurvatureBundle;
use qem_core::tensor::linalg::cluster_sizes;
use qem_core::Tolerance;

const TOL: Tolerance = Tolerance::relative(1e-9);

#[test]
fn every_entry_satisfies_its_equation() {
    for id in EntryId::ALL {
        let e = build_entry(id, id.defaults()).unwrap();
        let pts = sample_domain(&e, 100, 42).unwrap();
        let (mut eq_ratio, mut cod_ratio) = (0.0f64, 0.0f64);
        for p in &pts {
            let b = CurvatureBundle::compute(&e.metric, p).unwrap();
            cod_ratio = cod_ratio.max(b.codazzi_residual().ratio(&TOL));
            let r = match (&e.equation, &e.field) {
                (Equation::QuasiEinstein(q), Some(f)) => {
                    PointData::from_bundle(b, f).unwrap().qe_residual(q).ratio(&TOL)
                }
                (Equation::WForm { m, lambda }, Some(w)) => {
                    PointData::from_bundle(b, w).unwrap().w_residual(*m, *lambda).ratio(&TOL)
                }
                (Equation::Einstein { lambda }, _) => einstein_of(&b, *lambda).ratio(&TOL),
                _ => unreachable!(),
            };
            eq_ratio = eq_ratio.max(r);
        }
        println!("{id}: equation {eq_ratio:.3e} codazzi {cod_ratio:.3e}");
        assert!(eq_ratio <= 1.0, "{id} equation residual ratio {eq_ratio}");
        assert!(cod_ratio <= 1.0, "{id} codazzi residual ratio {cod_ratio}");
    }
}

#[test]
fn scalar_curvature_and_clusters_match_expectations() {
    for id in EntryId::ALL {
        let e = build_entry(id, id.defaults()).unwrap();
        for p in sample_spectral(&e, 20, 7).unwrap() {
            let b = CurvatureBundle::compute(&e.metric, &p).unwrap();
            let want = e.expected_scalar(&p).unwrap();
            assert!(
                (b.scalar - want).abs() <= 1e-9 * (1.0 + want.abs()),
                "{id}: R = {} expected {want} at {p:?}",
                b.scalar
            );
            let eig = b.ricci_eigensystem(None).unwrap();
            assert_eq!(cluster_pattern(&cluster_sizes(&eig.values)), e.expected_clusters(), "{id} at {p:?}: {:?}", eig.values);
        }
    }
}
