//! End-to-end acceptance criteria. Runs without the libtest harness so that each criterion
//! always prints its `PASS`/`FAIL` line; the process fails if any criterion does.

use qem_core::catalog::{build_entry, EntryId, NumericParams};
use qem_core::identities::{sweep, SWEEP_M};
use qem_core::qe::QEParams;
use qem_core::suite::{verify_entry, EntryReport, VerifyConfig};
use qem_core::zeta::*;
use qem_core::{Error, Tolerance};
use std::f64::consts::PI;

const REL9: Tolerance = Tolerance::relative(1e-9);

fn cfg(tol: Tolerance) -> VerifyConfig {
    VerifyConfig { samples: 100, seed: 42, tolerance: tol }
}

/// All parameter combinations the criteria name, keeping those the case constraints admit.
fn product_entries() -> Vec<(EntryId, NumericParams)> {
    let mut out = Vec::new();
    for id in [EntryId::T1II, EntryId::T1III, EntryId::T1IV] {
        for m in [2.0, 3.0, -3.0] {
            for rho in [0.0, 0.1] {
                for lambda in [1.0, -1.0] {
                    let p = NumericParams { m, rho, lambda, ..id.defaults() };
                    if build_entry(id, p).is_ok() {
                        out.push((id, p));
                    }
                }
            }
        }
    }
    out
}

fn singular_entries() -> Vec<(EntryId, NumericParams)> {
    [2.0, 5.0].iter().map(|&m| (EntryId::T1V, NumericParams { m, ..EntryId::T1V.defaults() })).collect()
}

fn space_form_entries() -> Vec<(EntryId, NumericParams)> {
    [(EntryId::T53Sin, 1.0), (EntryId::T53Cosh, -1.0), (EntryId::T53Sinh, -1.0)]
        .iter()
        .map(|&(id, kappa)| (id, NumericParams { kappa, ..id.defaults() }))
        .collect()
}

fn profile_entries() -> Vec<(EntryId, NumericParams)> {
    [EntryId::C62II, EntryId::C62III, EntryId::C62IV, EntryId::C62V].iter().map(|&id| (id, id.defaults())).collect()
}

fn run(list: &[(EntryId, NumericParams)], tol: Tolerance) -> Vec<EntryReport> {
    list.iter().map(|(id, p)| verify_entry(&build_entry(*id, *p).unwrap(), &cfg(tol)).unwrap()).collect()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn checks(reports: &[EntryReport], names: &[&str]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut count = 0;
    for r in reports {
        for name in names {
            match r.check(name) {
                Some(c) => {
                    count += 1;
                    worst = worst.max(c.ratio.unwrap_or(0.0));
                    if !c.pass {
                        failures.push(format!("{} {name} value {:.3e}", r.entry, c.value));
                    }
                }
                None => failures.push(format!("{} missing {name}", r.entry)),
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{count} checks over {} entries, worst ratio {worst:.3e}", reports.len())
        } else {
            failures.join("; ")
        },
    }
}

fn criterion_1() -> Outcome {
    let mut all = product_entries();
    all.extend(singular_entries());
    all.extend(space_form_entries());
    let mut reports = run(&all, REL9);
    let a = checks(&reports, &["quasi_einstein", "harmonic_weyl"]);
    let prof = run(&profile_entries(), REL9);
    let b = checks(&prof, &["w_equation", "harmonic_weyl"]);
    reports.extend(prof);
    Outcome { pass: a.pass && b.pass, detail: format!("{}; {}", a.detail, b.detail) }
}

fn criterion_2() -> Outcome {
    let a = checks(&run(&product_entries(), REL9), &["scalar_curvature", "scalar_curvature_lambda", "scalar_curvature_parameters"]);
    // the singular metric: R = −4m(m−1)/(9(m+1)²s²) pointwise, recomputed here
    let mut fails = Vec::new();
    let mut n = 0;
    for (id, p) in singular_entries() {
        let e = build_entry(id, p).unwrap();
        for pt in qem_core::catalog::sample_domain(&e, 100, 42).unwrap() {
            let b = qem_core::tensor::CurvatureBundle::compute(&e.metric, &pt).unwrap();
            let m = p.m;
            let want = -4.0 * m * (m - 1.0) / (9.0 * (m + 1.0).powi(2) * pt[0] * pt[0]);
            n += 1;
            if (b.scalar - want).abs() > 1e-9 * want.abs() {
                fails.push(format!("m={m} s={}", pt[0]));
            }
        }
    }
    Outcome {
        pass: a.pass && fails.is_empty(),
        detail: format!("{}; singular metric {n} points, {} outside 1e-9 relative", a.detail, fails.len()),
    }
}

fn criterion_3() -> Outcome {
    let mut list = product_entries();
    list.extend(singular_entries());
    list.extend(profile_entries());
    checks(
        &run(&list, REL9),
        &["ricci_clusters", "ricci_clusters_perp", "gradient_eigenvector", "level_set_eigenvalues"],
    )
}

fn closed_form_error(case: ClosedForm, p: &QEParams, s0: f64, s1: f64, step: f64) -> f64 {
    let lam = p.big_lambda().unwrap();
    let z0 = closed_form_zeta2(case, lam, s0).unwrap();
    let t = integrate(ZetaState::new(s0, z0, 0.0), s1, step, p).unwrap();
    assert_eq!(t.termination, Termination::ReachedEnd);
    t.closed_form_mismatch(case, 0.0).unwrap()
}

fn criterion_4() -> Outcome {
    // m = 2, ρ = 0 gives Λ = λ/3
    let cot = QEParams::new(2.0, 0.0, 1.0).unwrap();
    let hyp = QEParams::new(2.0, 0.0, -3.0).unwrap();
    let r3 = 3f64.sqrt();
    let cases = [
        (ClosedForm::Cot, cot, 0.1 * r3, r3 * (PI / 2.0 - 0.1)),
        (ClosedForm::Tanh, hyp, 0.2, 3.0),
        (ClosedForm::Coth, hyp, 0.2, 3.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (case, p, s0, s1) in cases {
        let e1 = closed_form_error(case, &p, s0, s1, 1e-3);
        let e2 = closed_form_error(case, &p, s0, s1, 5e-4);
        // below 1e-12 both errors are rounding and their ratio carries no order information
        let order_ok = e1 <= 1e-12 || e1 >= 8.0 * e2;
        pass &= e1 <= 1e-6 && order_ok;
        let ratio = if e1 <= 1e-12 { "rounding-limited".to_string() } else { format!("ratio {:.1}", e1 / e2) };
        parts.push(format!("{case:?} {e1:.2e} ({ratio})"));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn criterion_5() -> Outcome {
    let tol = Tolerance::relative(1e-10);
    let params = [(2.0, 0.0, 1.0), (3.0, 0.1, -1.0), (5.0, 0.3, 2.0), (-3.0, 0.05, 1.0)];
    let mut on_locus = 0;
    let mut fails = Vec::new();
    for &(m, rho, l) in &params {
        let p = QEParams::new(m, rho, l).unwrap();
        for &z2 in &[0.35, -0.8, 1.7] {
            let mut pts = vec![(1, z2, 0.0)];
            pts.push((2, z2, l / (3.0 * (4.0 * rho - 1.0) * z2)));
            let d = p.denominator();
            let z3 = -(l * (m - 1.0) * (3.0 * rho - 1.0) + z2 * z2 * (9.0 * rho - 2.0) * d)
                / (z2 * (m - 1.0) * (4.0 * rho - 1.0));
            pts.push((3, z2, z3));
            for (locus, a, b) in pts {
                let tag = branch_classify(a, b, &p, &tol);
                let flagged = [tag.zeta3_zero, tag.product, tag.quadratic][locus - 1];
                match harmonic_branch_relation(a, b, &p) {
                    Ok(r) => {
                        on_locus += 1;
                        if !r.passes(&tol) || !flagged {
                            fails.push(format!("locus {locus} at ({a:.3},{b:.3}) value {:.2e}", r.value));
                        }
                    }
                    Err(Error::QSingular(_)) => {}
                    Err(e) => fails.push(e.to_string()),
                }
            }
            // locus 4: Q = 0, where the obstruction is undefined and must be refused
            let z3 = -d * z2 / ((m - 1.0) * (4.0 * rho - 1.0));
            if !matches!(harmonic_branch_check(z2, z3, &p), Err(Error::QSingular(_))) {
                fails.push(format!("locus 4 at ({z2},{z3}) not refused"));
            }
            if !branch_classify(z2, z3, &p, &tol).q_zero {
                fails.push(format!("locus 4 at ({z2},{z3}) not flagged"));
            }
        }
    }
    let generic = harmonic_branch_check(1.0, 2.0, &QEParams::new(2.0, 0.0, 1.0).unwrap()).unwrap();
    let tag = branch_classify(1.0, 2.0, &QEParams::new(2.0, 0.0, 1.0).unwrap(), &tol);
    if generic.abs() < 1e-3 || !tag.generic {
        fails.push(format!("generic point value {generic:.3e}"));
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("{on_locus} locus points vanish, locus 4 refused, generic |value| = {:.3}", generic.abs())
        } else {
            fails.join("; ")
        },
    }
}

fn criterion_6() -> Outcome {
    let r = sweep(&SWEEP_M, 1000, 42, &Tolerance::relative(1e-10)).unwrap();
    let p31 = r.blocks.iter().fold(0.0f64, |m, b| m.max(b.pair_sum.max_ratio));
    let al = r.blocks.iter().fold(0.0f64, |m, b| m.max(b.alpha.max_ratio));
    let fp = r.blocks.iter().fold(0.0f64, |m, b| m.max(b.constructed_f_prime.max_residual));
    let ok = r.blocks.iter().all(|b| b.pair_sum.pass && b.alpha.pass) && fp <= 1e-10;
    Outcome {
        pass: ok,
        detail: format!("5 x 1000 triples: pair_sum ratio {p31:.2e}, alpha ratio {al:.2e}, constructed |f'| {fp:.2e}"),
    }
}

fn criterion_7() -> Outcome {
    let mut fails = Vec::new();
    for (id, p) in profile_entries() {
        let coeff = (p.m - 1.0) / (p.m + 1.0);
        let want = match id {
            EntryId::C62II | EntryId::C62III => coeff * p.lambda.abs() * p.c * p.c,
            EntryId::C62IV => coeff * p.lambda * p.c * p.c,
            _ => 0.0,
        };
        let e = build_entry(id, p).unwrap();
        if e.expected.mu != Some(want) {
            fails.push(format!("{id} expected mu {:?} vs {want}", e.expected.mu));
        }
    }
    let c = checks(&run(&profile_entries(), REL9), &["mu_constant"]);
    if !c.pass {
        fails.push(c.detail.clone());
    }
    Outcome { pass: fails.is_empty(), detail: if fails.is_empty() { c.detail } else { fails.join("; ") } }
}

fn criterion_8() -> Outcome {
    let a = checks(&run(&[(EntryId::GeSphere, EntryId::GeSphere.defaults()), (EntryId::GeHyp, EntryId::GeHyp.defaults())], REL9), &["einstein"]);
    let b = checks(&run(&[(EntryId::GeFlatFiber, EntryId::GeFlatFiber.defaults())], Tolerance::relative(1e-8)), &["einstein"]);
    Outcome { pass: a.pass && b.pass, detail: format!("{}; flat fiber: {}", a.detail, b.detail) }
}

fn criterion_9() -> Outcome {
    let a = checks(&run(&space_form_entries(), REL9), &["weyl_vanishes"]);
    let t1 = run(&[(EntryId::T1II, EntryId::T1II.defaults())], REL9);
    let b = checks(&t1, &["weyl_nonzero"]);
    let floor = t1[0].check("weyl_nonzero").map_or(0.0, |c| c.value);
    Outcome { pass: a.pass && b.pass, detail: format!("{}; T1-II min max|W| = {floor:.3e}", a.detail) }
}

fn criterion_10() -> Outcome {
    let first = Tolerance::relative(1e-7);
    let second = Tolerance::relative(1e-5);
    let mut fails = Vec::new();
    let mut exact = 0;
    let mut generic = 0;

    let cot = QEParams::new(2.0, 0.0, 1.0).unwrap();
    let hyp = QEParams::new(2.0, 0.0, -3.0).unwrap();
    let r3 = 3f64.sqrt();
    let mut exact_runs = Vec::new();
    for (case, p, s0, s1) in [
        (ClosedForm::Cot, cot, 0.1 * r3, r3 * (PI / 2.0 - 0.1)),
        (ClosedForm::Tanh, hyp, 0.2, 3.0),
        (ClosedForm::Coth, hyp, 0.2, 3.0),
    ] {
        let z0 = closed_form_zeta2(case, p.big_lambda().unwrap(), s0).unwrap();
        exact_runs.push((format!("{case:?}"), integrate(ZetaState::new(s0, z0, 0.0), s1, 1e-3, &p).unwrap()));
    }
    for m in [2.0, 5.0] {
        let p = QEParams::new(m, 0.0, 0.0).unwrap();
        let init = ZetaState::new(1.0, (m - 1.0) / (3.0 * (m + 1.0)), 2.0 / 3.0);
        exact_runs.push((format!("singular m={m}"), integrate(init, 3.0, 1e-3, &p).unwrap()));
    }
    for (name, t) in &exact_runs {
        exact += 1;
        let r = t.system_report(&second).unwrap();
        if !r.first_order.iter().all(|x| x.passes(&first)) {
            fails.push(format!("{name}: first-order {:?}", r.first_order));
        }
        if !r.second_order.iter().all(|x| x.passes(&second)) {
            fails.push(format!("{name}: second-order {:?}", r.second_order));
        }
        match reconstruct_warped(t) {
            Ok(rec) if rec.k_spread <= 1e-6 => {}
            Ok(rec) => fails.push(format!("{name}: k spread {:.2e}", rec.k_spread)),
            Err(e) => fails.push(format!("{name}: {e}")),
        }
    }

    // generic runs stay on intervals where |Q| ≥ 0.1, away from the poles of the system
    let starts = [
        (QEParams::new(2.0, 0.0, 1.0).unwrap(), 1.0, 2.0, 0.5),
        (QEParams::new(3.0, 0.1, -1.0).unwrap(), 0.8, 0.3, 1.0),
        (QEParams::new(5.0, 0.3, 2.0).unwrap(), -0.4, 0.9, 0.1),
        (QEParams::new(-3.0, 0.05, 1.0).unwrap(), 0.6, -0.7, 1.0),
    ];
    for (p, a, b, s1) in starts {
        let t = integrate(ZetaState::new(0.0, a, b), s1, 1e-3, &p).unwrap();
        let q_min = t.states.iter().map(|st| q_of(st.zeta2, st.zeta3, &p).abs()).fold(f64::INFINITY, f64::min);
        if t.termination != Termination::ReachedEnd || q_min < 0.1 {
            fails.push(format!("generic ({a},{b}): {:?}, min |Q| {q_min:.2e}", t.termination));
            continue;
        }
        generic += 1;
        let r = t.system_report(&second).unwrap();
        if !r.first_order.iter().all(|x| x.passes(&first)) {
            fails.push(format!("generic ({a},{b}): first-order {:?}", r.first_order));
        }
        if !r.defect_identity.passes(&second) {
            fails.push(format!("generic ({a},{b}): defect identity {:?}", r.defect_identity));
        }
        if t.k_spread <= K_SPREAD_MAX || !matches!(reconstruct_warped(&t), Err(Error::InconsistentK(_))) {
            fails.push(format!("generic ({a},{b}): k spread {:.2e} not rejected", t.k_spread));
        }
    }
    Outcome {
        pass: fails.is_empty() && generic > 0,
        detail: if fails.is_empty() {
            format!("{exact} exact trajectories (all relations, k constant), {generic} generic (first-order, defect identity, k rejected)")
        } else {
            fails.join("; ")
        },
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("catalog certification", criterion_1),
        ("scalar curvature formulas", criterion_2),
        ("eigenstructure", criterion_3),
        ("ODE vs closed form", criterion_4),
        ("branch obstruction", criterion_5),
        ("identity suite", criterion_6),
        ("mu constants", criterion_7),
        ("six-dimensional Einstein metrics", criterion_8),
        ("conformal flatness", criterion_9),
        ("along-trajectory system", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("criterion {:>2} {:<34} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
