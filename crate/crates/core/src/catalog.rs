//! Concrete metric families of the classification, with domains and expected invariants.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qe::QEParams;
use crate::tensor::expr::Expr;
use crate::tensor::field::{Chart, Domain, Interval, MetricField, ScalarField};

/// Distance kept from singular loci and boundaries when sampling.
pub const MARGIN: f64 = 1e-3;

/// Distance kept from the coordinate singularities of the polar fiber charts. These are not
/// geometric boundaries, and near them the chart itself amplifies rounding in third
/// derivatives like `1/r³`.
pub const CHART_MARGIN: f64 = 0.1;

/// Unbounded `s` ranges are cut where `√|Λ| |s|` reaches this value, to keep
/// `cosh` and `sinh` factors moderate.
pub const UNBOUNDED_REACH: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EntryId {
    #[serde(rename = "E-FLAT")]
    EFlat,
    #[serde(rename = "T1-II")]
    T1II,
    #[serde(rename = "T1-III")]
    T1III,
    #[serde(rename = "T1-IV")]
    T1IV,
    #[serde(rename = "T1-V")]
    T1V,
    #[serde(rename = "T53-V-SIN")]
    T53Sin,
    #[serde(rename = "T53-V-COSH")]
    T53Cosh,
    #[serde(rename = "T53-V-SINH")]
    T53Sinh,
    #[serde(rename = "C62-II")]
    C62II,
    #[serde(rename = "C62-III")]
    C62III,
    #[serde(rename = "C62-IV")]
    C62IV,
    #[serde(rename = "C62-V")]
    C62V,
    #[serde(rename = "GE-SPHERE")]
    GeSphere,
    #[serde(rename = "GE-HYP")]
    GeHyp,
    #[serde(rename = "GE-FLAT-FIBER")]
    GeFlatFiber,
}

impl EntryId {
    pub const ALL: [EntryId; 15] = [
        EntryId::EFlat,
        EntryId::T1II,
        EntryId::T1III,
        EntryId::T1IV,
        EntryId::T1V,
        EntryId::T53Sin,
        EntryId::T53Cosh,
        EntryId::T53Sinh,
        EntryId::C62II,
        EntryId::C62III,
        EntryId::C62IV,
        EntryId::C62V,
        EntryId::GeSphere,
        EntryId::GeHyp,
        EntryId::GeFlatFiber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntryId::EFlat => "E-FLAT",
            EntryId::T1II => "T1-II",
            EntryId::T1III => "T1-III",
            EntryId::T1IV => "T1-IV",
            EntryId::T1V => "T1-V",
            EntryId::T53Sin => "T53-V-SIN",
            EntryId::T53Cosh => "T53-V-COSH",
            EntryId::T53Sinh => "T53-V-SINH",
            EntryId::C62II => "C62-II",
            EntryId::C62III => "C62-III",
            EntryId::C62IV => "C62-IV",
            EntryId::C62V => "C62-V",
            EntryId::GeSphere => "GE-SPHERE",
            EntryId::GeHyp => "GE-HYP",
            EntryId::GeFlatFiber => "GE-FLAT-FIBER",
        }
    }

    /// Entries in the normal form `ds² + p(s)²dt² + h(s)²g̃` with a potential depending on `s`.
    pub fn is_normal_form(self) -> bool {
        matches!(
            self,
            EntryId::T1II
                | EntryId::T1III
                | EntryId::T1IV
                | EntryId::T1V
                | EntryId::C62II
                | EntryId::C62III
                | EntryId::C62IV
                | EntryId::C62V
        )
    }

    pub fn defaults(self) -> NumericParams {
        let base = NumericParams { m: 2.0, rho: 0.0, lambda: 1.0, c: 1.0, kappa: 1.0 };
        match self {
            EntryId::EFlat => NumericParams { lambda: 0.0, ..base },
            EntryId::T1II | EntryId::GeSphere | EntryId::T53Sin => base,
            EntryId::T1III | EntryId::T1IV | EntryId::GeHyp => NumericParams { lambda: -1.0, ..base },
            EntryId::T1V | EntryId::GeFlatFiber => NumericParams { lambda: 0.0, ..base },
            EntryId::T53Cosh | EntryId::T53Sinh => NumericParams { kappa: -1.0, ..base },
            EntryId::C62II => NumericParams { m: 3.0, ..base },
            EntryId::C62III | EntryId::C62IV => NumericParams { m: 3.0, lambda: -1.0, ..base },
            EntryId::C62V => NumericParams { m: 3.0, lambda: 0.0, ..base },
        }
    }
}

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        EntryId::ALL
            .into_iter()
            .find(|e| e.name() == up)
            .ok_or_else(|| Error::InvalidInput(format!("unknown catalog entry {s}")))
    }
}

/// Numeric inputs. Which fields matter depends on the entry: `(m, ρ, λ)` for the
/// product families, `(m, ρ, κ)` for the warped space forms (κ is the constant curvature,
/// and λ is derived), `(m, λ, C)` for the profile entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NumericParams {
    pub m: f64,
    pub rho: f64,
    pub lambda: f64,
    pub c: f64,
    pub kappa: f64,
}

/// The equation an entry is meant to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Equation {
    QuasiEinstein(QEParams),
    /// `∇dw = (w/m)(Ric − λg)`.
    WForm { m: f64, lambda: f64 },
    /// `Ric = λ g`.
    Einstein { lambda: f64 },
}

#[derive(Clone, Debug)]
pub struct Expected {
    /// Scalar curvature as a function of the chart coordinates.
    pub scalar: Expr,
    pub big_lambda: Option<f64>,
    /// Multiplicities of the Ricci eigenvalues, largest first.
    pub clusters: Vec<usize>,
    /// Multiplicities on the orthogonal complement of `∇f`, largest first.
    pub perp_clusters: Option<Vec<usize>>,
    pub mu: Option<f64>,
    /// Curvature of the 2-dimensional factor, for the product families.
    pub fiber_curvature: Option<f64>,
    pub conformally_flat: bool,
    /// `d^∇ Ric = 0` (constant scalar curvature).
    pub harmonic_curvature: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: EntryId,
    pub params: NumericParams,
    pub metric: MetricField,
    pub field: Option<ScalarField>,
    pub equation: Equation,
    /// Box the samples are drawn from; strictly inside the metric's guard.
    pub sampling: Vec<Interval>,
    /// Sub-box where Ricci eigenvalue gaps exceed the clustering threshold. It differs from
    /// `sampling` only for the singular metric, whose curvature decays like `s⁻²`.
    pub spectral_sampling: Vec<Interval>,
    pub expected: Expected,
}

/// 2- or 3-dimensional constant curvature chart in geodesic polar form
/// `dx² + sn_δ(x)² dy²` or `dr² + sn_δ(r)²(dθ² + sin²θ dφ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstCurvChart {
    pub delta: f64,
    pub dim: usize,
}

impl ConstCurvChart {
    pub fn new(delta: f64, dim: usize) -> Self {
        assert!(dim == 2 || dim == 3);
        ConstCurvChart { delta, dim }
    }

    /// `sin(√δ x)/√δ`, `x` or `sinh(√−δ x)/√−δ`.
    pub fn sn(delta: f64, x: Expr) -> Expr {
        if delta > 0.0 {
            let a = delta.sqrt();
            (a * x).sin() / a
        } else if delta < 0.0 {
            let a = (-delta).sqrt();
            (a * x).sinh() / a
        } else {
            x
        }
    }

    fn radial_limit(&self) -> f64 {
        if self.delta > 0.0 {
            PI / self.delta.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Diagonal components over coordinates starting at `first`.
    pub fn diagonal(&self, first: usize) -> Vec<Expr> {
        let r = Expr::var(first);
        let sn2 = Self::sn(self.delta, r).sq();
        match self.dim {
            2 => vec![Expr::one(), sn2],
            _ => vec![Expr::one(), sn2.clone(), sn2 * Expr::var(first + 1).sin().sq()],
        }
    }

    pub fn guard(&self) -> Vec<Interval> {
        let radial = Interval::new(0.0, self.radial_limit());
        match self.dim {
            2 => vec![radial, Interval::new(-PI, PI)],
            _ => vec![radial, Interval::new(0.0, PI), Interval::new(-PI, PI)],
        }
    }

    pub fn sampling(&self) -> Vec<Interval> {
        let hi = if self.delta > 0.0 {
            self.radial_limit() - CHART_MARGIN
        } else if self.delta < 0.0 {
            3.0 / (-self.delta).sqrt()
        } else {
            3.0
        };
        let radial = Interval::new(CHART_MARGIN, hi);
        let angle = Interval::new(-PI + MARGIN, PI - MARGIN);
        match self.dim {
            2 => vec![radial, angle],
            _ => vec![radial, Interval::new(CHART_MARGIN, PI - CHART_MARGIN), angle],
        }
    }

    /// The chart alone as a metric.
    pub fn metric(&self) -> MetricField {
        let names: Vec<String> = (0..self.dim).map(|i| format!("y{i}")).collect();
        let chart = Chart::new(names).expect("valid chart");
        MetricField::diagonal(chart, self.diagonal(0), Domain::new(self.guard())).expect("diagonal metric")
    }
}

fn violated(what: impl Into<String>) -> Error {
    Error::ConstraintViolation(what.into())
}

fn four_chart() -> Chart {
    Chart::new(["s", "t", "x3", "x4"]).expect("valid chart")
}

fn six_chart() -> Chart {
    Chart::new(["s", "t", "x3", "x4", "y5", "y6"]).expect("valid chart")
}

/// `s` ranges of the three profile shapes: the hemisphere, and the two half-line cases.
fn s_guard_positive(a: f64) -> (Interval, Interval) {
    let hi = FRAC_PI_2 / a;
    (Interval::new(0.0, hi), Interval::new(MARGIN, hi - MARGIN))
}

fn s_guard_negative(a: f64) -> (Interval, Interval) {
    (
        Interval::new(f64::NEG_INFINITY, 0.0),
        Interval::new(-UNBOUNDED_REACH / a, -MARGIN),
    )
}

struct Shape {
    /// `p(s)²` in front of `dt²`.
    base_warp: Expr,
    s_guard: Interval,
    s_sampling: Interval,
}

#[derive(Clone, Copy)]
enum Profile {
    Sin,
    Cosh,
    Sinh,
}

fn shape(profile: Profile, a: f64) -> Shape {
    let s = Expr::var(0);
    let (s_guard, s_sampling) = match profile {
        Profile::Sin => s_guard_positive(a),
        _ => s_guard_negative(a),
    };
    let base_warp = match profile {
        Profile::Sin => (a * s).sin().sq(),
        Profile::Cosh => (a * s).cosh().sq(),
        Profile::Sinh => (a * s).sinh().sq(),
    };
    Shape { base_warp, s_guard, s_sampling }
}

/// `f` for the three shapes: `−m ln cos(as)`, `−m ln(−sinh(as))`, `−m ln cosh(as)`.
fn potential(profile: Profile, a: f64, m: f64) -> Expr {
    let s = Expr::var(0);
    let inner = match profile {
        Profile::Sin => (a * s).cos(),
        Profile::Cosh => -(a * s).sinh(),
        Profile::Sinh => (a * s).cosh(),
    };
    -m * inner.ln()
}

fn product_metric(sh: &Shape, fiber: ConstCurvChart) -> Result<(MetricField, Vec<Interval>)> {
    let mut diag = vec![Expr::one(), sh.base_warp.clone()];
    diag.extend(fiber.diagonal(2));
    let mut guard = vec![sh.s_guard, Interval::new(-PI, PI)];
    guard.extend(fiber.guard());
    let mut sampling = vec![sh.s_sampling, Interval::new(-PI + MARGIN, PI - MARGIN)];
    sampling.extend(fiber.sampling());
    let g = MetricField::diagonal(four_chart(), diag, Domain::new(guard))?;
    Ok((g, sampling))
}

fn singular_exponents(m: f64) -> (f64, f64) {
    (2.0 * (m - 1.0) / (3.0 * (m + 1.0)), 4.0 / 3.0)
}

fn singular_metric(m: f64, extra_fiber: Option<f64>) -> Result<(MetricField, Vec<Interval>)> {
    let s = Expr::var(0);
    let (pe, he) = singular_exponents(m);
    let mut diag = vec![Expr::one(), s.powf(pe), s.powf(he), s.powf(he)];
    let mut guard = vec![Interval::new(0.0, f64::INFINITY)];
    let mut sampling = vec![Interval::new(MARGIN, 1.0 / MARGIN)];
    let flat = Interval::new(-1.0 / MARGIN, 1.0 / MARGIN);
    let flat_sampling = Interval::new(-3.0, 3.0);
    let fiber_dims = if extra_fiber.is_some() { 5 } else { 3 };
    for _ in 0..fiber_dims {
        guard.push(flat);
        sampling.push(flat_sampling);
    }
    let chart = if let Some(e) = extra_fiber {
        diag.push(s.powf(e));
        diag.push(s.powf(e));
        six_chart()
    } else {
        four_chart()
    };
    let g = MetricField::diagonal(chart, diag, Domain::new(guard))?;
    Ok((g, sampling))
}

/// Largest `s` used for spectral checks on the singular metric.
pub const SPECTRAL_S_MAX: f64 = 10.0;

fn spectral_box(sampling: &[Interval]) -> Vec<Interval> {
    let mut b = sampling.to_vec();
    b[0].hi = b[0].hi.min(SPECTRAL_S_MAX);
    b
}

fn singular_scalar(m: f64) -> Expr {
    let s = Expr::var(0);
    (-4.0 * m * (m - 1.0) / (9.0 * (m + 1.0) * (m + 1.0))) * s.powi(-2)
}

fn sorted_desc(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

fn product_expected(lam: f64, m: f64) -> Expected {
    Expected {
        scalar: Expr::cst(2.0 * (m + 2.0) * lam),
        big_lambda: Some(lam),
        clusters: vec![2, 2],
        perp_clusters: Some(vec![2, 1]),
        mu: None,
        fiber_curvature: Some((m + 1.0) * lam),
        conformally_flat: false,
        harmonic_curvature: true,
    }
}

fn singular_expected(m: f64) -> Expected {
    Expected {
        scalar: singular_scalar(m),
        big_lambda: None,
        clusters: vec![2, 1, 1],
        perp_clusters: Some(vec![2, 1]),
        mu: None,
        fiber_curvature: Some(0.0),
        conformally_flat: false,
        harmonic_curvature: false,
    }
}

fn einstein_expected(n: usize, c: f64) -> Expected {
    Expected {
        scalar: Expr::cst(n as f64 * c),
        big_lambda: None,
        clusters: vec![n],
        perp_clusters: None,
        mu: None,
        fiber_curvature: None,
        conformally_flat: n == 4 || c == 0.0,
        harmonic_curvature: true,
    }
}

/// Builds an entry, checking the sign and parameter constraints of its case.
pub fn build_entry(id: EntryId, p: NumericParams) -> Result<CatalogEntry> {
    match id {
        EntryId::EFlat => {
            let qp = QEParams::new(p.m, p.rho, 0.0)?;
            let g = MetricField::diagonal(four_chart(), vec![Expr::one(); 4], Domain::unbounded(4))?;
            Ok(CatalogEntry {
                id,
                params: NumericParams { lambda: 0.0, ..p },
                metric: g,
                field: Some(ScalarField::potential(Expr::zero())),
                equation: Equation::QuasiEinstein(qp),
                sampling: vec![Interval::new(-1.0, 1.0); 4],
                spectral_sampling: vec![Interval::new(-1.0, 1.0); 4],
                expected: einstein_expected(4, 0.0),
            })
        }
        EntryId::T1II | EntryId::T1III | EntryId::T1IV => {
            let qp = QEParams::new(p.m, p.rho, p.lambda)?;
            let lam = qp
                .big_lambda()
                .ok_or_else(|| violated("4rho - 1 + m(2rho - 1) != 0"))?;
            let profile = match id {
                EntryId::T1II if lam > 0.0 => Profile::Sin,
                EntryId::T1II => return Err(violated(format!("R/(2(m+2)) = {lam} > 0"))),
                _ if lam >= 0.0 => return Err(violated(format!("R/(2(m+2)) = {lam} < 0"))),
                EntryId::T1III => Profile::Cosh,
                _ => Profile::Sinh,
            };
            let a = lam.abs().sqrt();
            let sh = shape(profile, a);
            let (metric, sampling) = product_metric(&sh, ConstCurvChart::new((p.m + 1.0) * lam, 2))?;
            Ok(CatalogEntry {
                id,
                params: p,
                metric,
                field: Some(ScalarField::potential(potential(profile, a, p.m))),
                equation: Equation::QuasiEinstein(qp),
                spectral_sampling: sampling.clone(),
                sampling,
                expected: product_expected(lam, p.m),
            })
        }
        EntryId::T1V => {
            if p.rho != 0.0 || p.lambda != 0.0 {
                return Err(violated("rho = lambda = 0"));
            }
            if !(p.m * (p.m + 1.0) > 0.0) {
                return Err(violated("m(m+1) > 0"));
            }
            let qp = QEParams::new(p.m, 0.0, 0.0)?;
            let (metric, sampling) = singular_metric(p.m, None)?;
            let f = (2.0 * p.m / (3.0 * (p.m + 1.0))) * Expr::var(0).ln();
            Ok(CatalogEntry {
                id,
                params: p,
                metric,
                field: Some(ScalarField::potential(f)),
                equation: Equation::QuasiEinstein(qp),
                spectral_sampling: spectral_box(&sampling),
                sampling,
                expected: singular_expected(p.m),
            })
        }
        EntryId::T53Sin | EntryId::T53Cosh | EntryId::T53Sinh => {
            let k = p.kappa;
            let profile = match id {
                EntryId::T53Sin if k > 0.0 => Profile::Sin,
                EntryId::T53Sin => return Err(violated(format!("(rho R + lambda)/(m+3) = {k} > 0"))),
                _ if k >= 0.0 => return Err(violated(format!("(rho R + lambda)/(m+3) = {k} < 0"))),
                EntryId::T53Cosh => Profile::Cosh,
                _ => Profile::Sinh,
            };
            // The result is a space form of curvature κ, so R = 12κ and λ = (m+3)κ − ρR.
            let lambda = k * (p.m + 3.0 - 12.0 * p.rho);
            let qp = QEParams::new(p.m, p.rho, lambda)?;
            let a = k.abs().sqrt();
            let sh = shape(profile, a);
            // Warping by sinh needs a positively curved fiber to close up into a space form.
            let fiber_k = if matches!(profile, Profile::Sinh) { -k } else { k };
            let fiber = ConstCurvChart::new(fiber_k, 3);
            let mut diag = vec![Expr::one()];
            diag.extend(fiber.diagonal(1).into_iter().map(|c| sh.base_warp.clone() * c));
            let mut guard = vec![sh.s_guard];
            guard.extend(fiber.guard());
            let mut sampling = vec![sh.s_sampling];
            sampling.extend(fiber.sampling());
            let chart = Chart::new(["s", "r", "theta", "phi"])?;
            let metric = MetricField::diagonal(chart, diag, Domain::new(guard))?;
            let mut expected = einstein_expected(4, 3.0 * k);
            expected.perp_clusters = Some(vec![3]);
            expected.fiber_curvature = Some(fiber_k);
            Ok(CatalogEntry {
                id,
                params: NumericParams { lambda, ..p },
                metric,
                field: Some(ScalarField::potential(potential(profile, a, p.m))),
                equation: Equation::QuasiEinstein(qp),
                spectral_sampling: sampling.clone(),
                sampling,
                expected,
            })
        }
        EntryId::C62II | EntryId::C62III | EntryId::C62IV | EntryId::C62V => {
            if !(p.m > 1.0) {
                return Err(violated("m > 1"));
            }
            if !(p.c > 0.0) {
                return Err(violated("C > 0"));
            }
            let (m, l, c) = (p.m, p.lambda, p.c);
            let mu_coeff = (m - 1.0) / (m + 1.0);
            if id == EntryId::C62V {
                if l != 0.0 {
                    return Err(violated("lambda = 0"));
                }
                let (metric, sampling) = singular_metric(m, None)?;
                let w = c * Expr::var(0).powf(-2.0 / (3.0 * (m + 1.0)));
                let mut expected = singular_expected(m);
                expected.mu = Some(0.0);
                return Ok(CatalogEntry {
                    id,
                    params: p,
                    metric,
                    field: Some(ScalarField::profile(w)),
                    equation: Equation::WForm { m, lambda: 0.0 },
                    spectral_sampling: spectral_box(&sampling),
                    sampling,
                    expected,
                });
            }
            let (profile, mu) = match id {
                EntryId::C62II if l > 0.0 => (Profile::Sin, mu_coeff * l.abs() * c * c),
                EntryId::C62II => return Err(violated("lambda > 0")),
                _ if l >= 0.0 => return Err(violated("lambda < 0")),
                EntryId::C62III => (Profile::Cosh, mu_coeff * l.abs() * c * c),
                _ => (Profile::Sinh, mu_coeff * l * c * c),
            };
            let lam = l / (m + 1.0);
            let a = lam.abs().sqrt();
            let sh = shape(profile, a);
            let (metric, sampling) = product_metric(&sh, ConstCurvChart::new(l, 2))?;
            let s = Expr::var(0);
            let w = match profile {
                Profile::Sin => c * (a * s).cos(),
                Profile::Cosh => -c * (a * s).sinh(),
                Profile::Sinh => c * (a * s).cosh(),
            };
            let mut expected = product_expected(lam, m);
            expected.mu = Some(mu);
            Ok(CatalogEntry {
                id,
                params: p,
                metric,
                field: Some(ScalarField::profile(w)),
                equation: Equation::WForm { m, lambda: l },
                spectral_sampling: sampling.clone(),
                sampling,
                expected,
            })
        }
        EntryId::GeSphere | EntryId::GeHyp | EntryId::GeFlatFiber => {
            if p.m != 2.0 {
                return Err(violated("m = 2 (six-dimensional construction)"));
            }
            let l = p.lambda;
            let (metric, sampling) = match id {
                EntryId::GeFlatFiber => {
                    if l != 0.0 {
                        return Err(violated("lambda = 0"));
                    }
                    singular_metric(p.m, Some(-4.0 / (3.0 * (p.m + 1.0))))?
                }
                _ => {
                    let positive = id == EntryId::GeSphere;
                    if positive && !(l > 0.0) {
                        return Err(violated("lambda > 0"));
                    }
                    if !positive && !(l < 0.0) {
                        return Err(violated("lambda < 0"));
                    }
                    let b2 = l / (p.m + 1.0);
                    let a = b2.abs().sqrt();
                    let s = Expr::var(0);
                    let (sh, second) = if positive {
                        (shape(Profile::Sin, a), (a * s).cos().sq())
                    } else {
                        (shape(Profile::Sinh, a), (a * s).cosh().sq())
                    };
                    // The last factor carries Ric = μ = (m − 1) b², i.e. curvature b² for m = 2.
                    let fiber = ConstCurvChart::new(b2, 2);
                    let (g4, mut sampling) = product_metric(&sh, ConstCurvChart::new(l, 2))?;
                    let mut diag: Vec<Expr> = (0..4).map(|i| g4.component(i, i).clone()).collect();
                    diag.extend(fiber.diagonal(4).into_iter().map(|c| second.clone() * c));
                    let mut guard = g4.domain().boxes.clone();
                    guard.extend(fiber.guard());
                    sampling.extend(fiber.sampling());
                    (MetricField::diagonal(six_chart(), diag, Domain::new(guard))?, sampling)
                }
            };
            Ok(CatalogEntry {
                id,
                params: p,
                metric,
                field: None,
                equation: Equation::Einstein { lambda: l },
                spectral_sampling: sampling.clone(),
                sampling,
                expected: einstein_expected(6, l),
            })
        }
    }
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Quasi-random points in `boxes`: a Halton sequence with a seeded random shift.
pub fn sample_box(boxes: &[Interval], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 || boxes.iter().any(|b| b.is_empty() || !b.lo.is_finite() || !b.hi.is_finite()) {
        return Err(Error::EmptyDomain);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = boxes.iter().map(|_| rng.gen::<f64>()).collect();
    let pts = (1..=count as u64)
        .map(|i| {
            boxes
                .iter()
                .enumerate()
                .map(|(d, b)| {
                    let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                    // Keep strictly inside the open box.
                    let u = u.clamp(1e-9, 1.0 - 1e-9);
                    b.lo + u * (b.hi - b.lo)
                })
                .collect()
        })
        .collect();
    Ok(pts)
}

pub fn sample_domain(entry: &CatalogEntry, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    sample_box(&entry.sampling, count, seed)
}

pub fn sample_spectral(entry: &CatalogEntry, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    sample_box(&entry.spectral_sampling, count, seed)
}

/// Points with the first coordinate fixed at `s` and the rest sampled.
pub fn level_set_points(entry: &CatalogEntry, s: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut pts = sample_box(&entry.sampling[1..], count, seed)?;
    for p in &mut pts {
        p.insert(0, s);
    }
    Ok(pts)
}

pub fn expected_invariants(entry: &CatalogEntry) -> &Expected {
    &entry.expected
}

impl CatalogEntry {
    pub fn qe_params(&self) -> Option<QEParams> {
        match self.equation {
            Equation::QuasiEinstein(q) => Some(q),
            _ => None,
        }
    }

    /// Expected scalar curvature at a point.
    pub fn expected_scalar(&self, point: &[f64]) -> Result<f64> {
        self.expected.scalar.eval(point)
    }

    /// Expected clusters, largest multiplicity first.
    pub fn expected_clusters(&self) -> Vec<usize> {
        sorted_desc(self.expected.clusters.clone())
    }
}

/// Sorts multiplicities so cluster patterns compare as multisets.
pub fn cluster_pattern(sizes: &[usize]) -> Vec<usize> {
    sorted_desc(sizes.to_vec())
}
