//! Verification driver: runs every applicable check for a catalog entry over seeded samples
//! and collects the results into serializable reports.

use serde::Serialize;

use crate::catalog::{
    build_entry, cluster_pattern, level_set_points, sample_domain, sample_spectral, CatalogEntry, EntryId,
    Equation, NumericParams,
};
use crate::error::{Error, Result};
use crate::qe::{einstein_of, PointData};
use crate::residual::{Residual, Sample};
use crate::tensor::linalg::cluster_sizes;
use crate::tensor::CurvatureBundle;
use crate::tol::Tolerance;

/// Samples with `|f′|` below this are skipped by checks that divide by it.
pub const GRADIENT_SKIP: f64 = 1e-6;
/// A check fails when it had to skip more than this fraction of its samples.
pub const MAX_SKIPPED: f64 = 0.1;
/// Relative tolerance for eigenvalues along a level set.
pub const LEVEL_SET_TOL: Tolerance = Tolerance::relative(1e-8);
/// Lower bound on `max |W|` for the non-conformally-flat control.
pub const WEYL_FLOOR: f64 = 1e-3;
const LEVEL_SETS: usize = 5;
const LEVEL_SET_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `value` is the largest residual; passes when every sample is within tolerance.
    Residual,
    /// `value` is the smallest observed magnitude; passes when it reaches `threshold`.
    LowerBound,
    /// `value` counts samples where a structural property failed.
    Count,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    /// Largest `residual / bound` for residual checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
    pub pass: bool,
}

impl Check {
    pub fn residual(name: impl Into<String>, samples: &[Sample], skipped: usize, tol: Tolerance) -> Self {
        let value = samples.iter().fold(0.0f64, |m, s| m.max(s.residual));
        let ratio = samples.iter().fold(0.0f64, |m, s| m.max(s.residual / tol.bound(s.scale)));
        let total = samples.len() + skipped;
        let pass = !samples.is_empty()
            && samples.iter().all(|s| tol.accepts(s.residual, s.scale))
            && (skipped as f64) <= MAX_SKIPPED * total as f64;
        Check {
            name: name.into(),
            kind: CheckKind::Residual,
            value,
            ratio: Some(ratio),
            tolerance: Some(tol),
            threshold: None,
            samples: samples.len(),
            skipped,
            pass,
        }
    }

    pub fn lower_bound(name: impl Into<String>, values: &[f64], threshold: f64) -> Self {
        let value = values.iter().fold(f64::INFINITY, |m, &x| m.min(x.abs()));
        Check {
            name: name.into(),
            kind: CheckKind::LowerBound,
            value,
            ratio: None,
            tolerance: None,
            threshold: Some(threshold),
            samples: values.len(),
            skipped: 0,
            pass: !values.is_empty() && value >= threshold,
        }
    }

    pub fn count(name: impl Into<String>, failures: usize, samples: usize) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Count,
            value: failures as f64,
            ratio: None,
            tolerance: None,
            threshold: None,
            samples,
            skipped: 0,
            pass: samples > 0 && failures == 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: Tolerance,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { samples: 100, seed: 42, tolerance: Tolerance::DEFAULT }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub entry: EntryId,
    pub params: NumericParams,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl EntryReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn rel(value: f64, want: f64) -> Sample {
    Sample { residual: (value - want).abs(), scale: want.abs().max(value.abs()) }
}

/// Runs every check that applies to `entry`.
pub fn verify_entry(entry: &CatalogEntry, cfg: &VerifyConfig) -> Result<EntryReport> {
    let tol = cfg.tolerance;
    let pts = sample_domain(entry, cfg.samples, cfg.seed)?;
    let bundles: Vec<CurvatureBundle<f64>> =
        pts.iter().map(|p| CurvatureBundle::compute(&entry.metric, p)).collect::<Result<_>>()?;
    let data: Option<Vec<PointData<f64>>> = match &entry.field {
        Some(f) => Some(bundles.iter().map(|b| PointData::from_bundle(b.clone(), f)).collect::<Result<_>>()?),
        None => None,
    };
    let exp = &entry.expected;
    let mut checks = Vec::new();

    let eq: Vec<Sample> = match (&entry.equation, &data) {
        (Equation::QuasiEinstein(q), Some(d)) => d.iter().map(|x| x.qe_residual(q).summary()).collect(),
        (Equation::WForm { m, lambda }, Some(d)) => d.iter().map(|x| x.w_residual(*m, *lambda).summary()).collect(),
        (Equation::Einstein { lambda }, _) => bundles.iter().map(|b| einstein_of(b, *lambda).summary()).collect(),
        _ => return Err(Error::InvalidInput(format!("{} has no field for its equation", entry.id))),
    };
    let eq_name = match entry.equation {
        Equation::QuasiEinstein(_) => "quasi_einstein",
        Equation::WForm { .. } => "w_equation",
        Equation::Einstein { .. } => "einstein",
    };
    checks.push(Check::residual(eq_name, &eq, 0, tol));

    let cod: Vec<Sample> = bundles.iter().map(|b| b.codazzi_residual().summary()).collect();
    checks.push(Check::residual("harmonic_weyl", &cod, 0, tol));
    if exp.harmonic_curvature {
        let c: Vec<Sample> = bundles.iter().map(|b| b.ricci_codazzi_residual().summary()).collect();
        checks.push(Check::residual("harmonic_curvature", &c, 0, tol));
    }

    let sc: Vec<Sample> = bundles
        .iter()
        .zip(&pts)
        .map(|(b, p)| Ok(rel(b.scalar, exp.scalar.eval(p)?)))
        .collect::<Result<_>>()?;
    checks.push(Check::residual("scalar_curvature", &sc, 0, tol));
    if let (Some(lam), Equation::QuasiEinstein(q)) = (exp.big_lambda, &entry.equation) {
        let m = q.m;
        let a: Vec<Sample> = bundles.iter().map(|b| rel(b.scalar, 2.0 * (m + 2.0) * lam)).collect();
        checks.push(Check::residual("scalar_curvature_lambda", &a, 0, tol));
        if (q.rho - (m + 1.0) / (2.0 * (m + 2.0))).abs() > 1e-12 {
            let want = -2.0 * q.lambda * (m + 2.0) / q.denominator();
            let b: Vec<Sample> = bundles.iter().map(|b| rel(b.scalar, want)).collect();
            checks.push(Check::residual("scalar_curvature_parameters", &b, 0, tol));
        }
    }

    checks.extend(spectral_checks(entry, cfg)?);

    if let (Equation::QuasiEinstein(q), Some(d)) = (&entry.equation, &data) {
        if entry.id != EntryId::EFlat {
            let (mut zp, mut r1, mut ci) = (Vec::new(), Vec::new(), Vec::new());
            let mut skipped = 0;
            for x in d {
                let Some(r) = x.radial_curvature_residual(q, GRADIENT_SKIP)? else {
                    skipped += 1;
                    continue;
                };
                r1.push(r.summary());
                let (conn, ric) = x.zeta_pair(q)?;
                let res: Vec<f64> = conn.iter().zip(&ric).map(|(a, b)| a - b).collect();
                let scale = conn.iter().chain(&ric).fold(0.0f64, |m, v| m.max(v.abs()));
                zp.push(Residual::new(res, scale).summary());
                ci.push(x.curvature_identity_residual(q)?.summary());
            }
            checks.push(Check::residual("zeta_pair", &zp, skipped, tol));
            checks.push(Check::residual("radial_curvature", &r1, skipped, tol));
            checks.push(Check::residual("curvature_identity", &ci, skipped, tol));
        }
    }

    if let (Some(mu), Some(d), Equation::WForm { m, lambda }) = (exp.mu, &data, &entry.equation) {
        let s: Vec<Sample> = d
            .iter()
            .map(|x| {
                let w = x.value;
                let terms = [w * x.laplacian(), (m - 1.0) * x.grad_norm_sq(), lambda * w * w];
                let v: f64 = terms.iter().sum();
                let scale = terms.iter().fold(mu.abs(), |a, t| a.max(t.abs()));
                Sample { residual: (v - mu).abs(), scale }
            })
            .collect();
        checks.push(Check::residual("mu_constant", &s, 0, tol));
    }

    if bundles[0].dim() == 4 {
        if exp.conformally_flat {
            let w: Vec<Sample> = bundles.iter().map(|b| b.weyl_residual().summary()).collect();
            checks.push(Check::residual("weyl_vanishes", &w, 0, tol));
        } else if matches!(entry.id, EntryId::T1II | EntryId::T1III | EntryId::T1IV) {
            let w: Vec<f64> = bundles.iter().map(|b| b.weyl_residual().sup()).collect();
            checks.push(Check::lower_bound("weyl_nonzero", &w, WEYL_FLOOR));
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(EntryReport { entry: entry.id, params: entry.params, checks, pass })
}

/// The gradient direction of the entry's field, where it has one.
fn gradient_of(entry: &CatalogEntry, b: &CurvatureBundle<f64>) -> Result<Option<Vec<f64>>> {
    match &entry.field {
        Some(f) if entry.id != EntryId::EFlat => Ok(Some(b.hessian(f)?.1.gradient())),
        _ => Ok(None),
    }
}

fn spectral_checks(entry: &CatalogEntry, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let exp = &entry.expected;
    let pts = sample_spectral(entry, cfg.samples, cfg.seed.wrapping_add(1))?;
    let want = entry.expected_clusters();
    let (mut bad_full, mut bad_perp, mut bad_vec) = (0, 0, 0);
    let mut with_grad = 0;
    for p in &pts {
        let b = CurvatureBundle::compute(&entry.metric, p)?;
        let df = gradient_of(entry, &b)?;
        let eig = b.ricci_eigensystem(df.as_deref())?;
        if cluster_pattern(&eig.clusters) != want {
            bad_full += 1;
        }
        if let Some(df) = df {
            with_grad += 1;
            if eig.gradient_is_eigenvector != Some(true) {
                bad_vec += 1;
            }
            if let Some(perp) = &exp.perp_clusters {
                let frame = crate::qe::adapted_frame(&b, &df)?;
                if cluster_pattern(&cluster_sizes(&frame.ricci[1..])) != cluster_pattern(perp) {
                    bad_perp += 1;
                }
            }
        }
    }
    let mut out = vec![Check::count("ricci_clusters", bad_full, pts.len())];
    if with_grad > 0 {
        out.push(Check::count("gradient_eigenvector", bad_vec, with_grad));
        if exp.perp_clusters.is_some() {
            out.push(Check::count("ricci_clusters_perp", bad_perp, with_grad));
        }
    }

    // Eigenvalues along level sets of s.
    if entry.field.is_some() && entry.id != EntryId::EFlat {
        let mut samples = Vec::new();
        for (k, s0) in pts.iter().take(LEVEL_SETS).map(|p| p[0]).enumerate() {
            let lv = level_set_points(entry, s0, LEVEL_SET_POINTS, cfg.seed.wrapping_add(2 + k as u64))?;
            let mut first: Option<Vec<f64>> = None;
            for p in &lv {
                let b = CurvatureBundle::compute(&entry.metric, p)?;
                let vals = b.ricci_eigensystem(None)?.values;
                match &first {
                    None => first = Some(vals),
                    Some(v0) => {
                        let d = vals.iter().zip(v0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                        let scale = vals.iter().chain(v0).fold(0.0f64, |m, x| m.max(x.abs()));
                        samples.push(Sample { residual: d, scale });
                    }
                }
            }
        }
        out.push(Check::residual("level_set_eigenvalues", &samples, 0, LEVEL_SET_TOL));
    }
    Ok(out)
}

/// Builds and verifies one entry; `params` defaults to the entry's own defaults.
pub fn verify(id: EntryId, params: Option<NumericParams>, cfg: &VerifyConfig) -> Result<EntryReport> {
    let entry = build_entry(id, params.unwrap_or_else(|| id.defaults()))?;
    verify_entry(&entry, cfg)
}
