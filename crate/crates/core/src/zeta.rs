//! The reduced ODE system for the principal curvatures `ζ₂ = p′/p`, `ζ₃ = h′/h` of the
//! normal form `ds² + p(s)²dt² + h(s)²g̃`, its branch loci, closed-form solutions and
//! reconstruction of metrics from integrated trajectories.
//!
//! `X = −k/h²` is an algebraic function of `(ζ₂, ζ₃)` here; the compatibility
//! `X′ = −2ζ₃X` is checked, not imposed.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::catalog::ConstCurvChart;
use crate::error::{Error, Result};
use crate::qe::{PointData, QEParams};
use crate::residual::Sample;
use crate::scalar::Ring;
use crate::tensor::expr::Expr;
use crate::tensor::field::{Chart, Domain, Interval, MetricField, ScalarField};
use crate::tensor::jet::Jet;
use crate::tensor::spline::QuinticSpline;
use crate::tol::Tolerance;

/// Trajectories stop once `|Q|` falls below this.
pub const Q_MIN: f64 = 1e-8;
/// Components beyond this magnitude count as blow-up.
pub const BLOWUP: f64 = 1e8;
/// Smallest `|ζ₂|` accepted as a denominator.
pub const ZETA2_MIN: f64 = 1e-12;
/// Closed forms refuse arguments this close to a pole.
pub const POLE_MARGIN: f64 = 1e-3;
/// Reconstruction fails when nodewise `k` spreads more than this, relative to `1 + |k|`.
pub const K_SPREAD_MAX: f64 = 1e-6;

// --- formulas over any ring --------------------------------------------------------------

fn cst<R: Ring>(like: &R, c: f64) -> R {
    like.lift(c)
}

/// `Q = ζ₃(m−1)(4ρ−1) + ζ₂{4ρ−1+m(2ρ−1)}`.
pub fn q_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (m, r) = (p.m, p.rho);
    z3.clone() * cst(z3, (m - 1.0) * (4.0 * r - 1.0)) + z2.clone() * cst(z2, p.denominator())
}

/// `X` without the `Q` guard.
pub fn x_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let c = |x: f64| cst(z2, x);
    let bracket = z3.clone() * z3.clone() * c((m - 1.0) * (1.0 - 4.0 * r)) - c(l * (m + 1.0))
        + z2.clone() * z3.clone() * c(2.0 * (4.0 * r - 1.0 + m * (5.0 * r - 1.0)));
    (z3.clone() - z2.clone()) * bracket / q_ring(z2, z3, p)
}

/// `(ζ₂′, ζ₃′)` without the `Q` guard.
pub fn rhs_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> (R, R) {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let c = |x: f64| cst(z2, x);
    let q = q_ring(z2, z3, p);
    let z22 = z2.clone() * z2.clone();
    let z33 = z3.clone() * z3.clone();
    let d2 = z3.clone() * c(l * (m - 1.0))
        + z22.clone() * z3.clone() * c(1.0 - 2.0 * (m + 2.0) * r)
        + z22.clone() * z2.clone() * c(1.0 - 4.0 * r + m * (1.0 - 2.0 * r))
        + z2.clone() * (c(l) - z33.clone() * c(2.0 * (m - 1.0) * (4.0 * r - 1.0)));
    let d3 = z3.clone()
        * (c(l * m)
            - z33 * c((m - 1.0) * (4.0 * r - 1.0))
            - z22 * c(1.0 + m - 4.0 * r - 2.0 * m * r)
            - z2.clone() * z3.clone() * c(8.0 * r - 2.0 + m * (10.0 * r - 3.0)));
    (d2 / q.clone(), d3 / q)
}

/// Scalar curvature `R = −2ζ₂′ − 4ζ₃′ − 2ζ₂² − 6ζ₃² − 4ζ₂ζ₃ − 2X` of the normal form.
pub fn scalar_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (d2, d3) = rhs_ring(z2, z3, p);
    let x = x_ring(z2, z3, p);
    let c = |v: f64| cst(z2, v);
    c(-2.0) * d2 - c(4.0) * d3 - c(2.0) * z2.clone() * z2.clone() - c(6.0) * z3.clone() * z3.clone()
        - c(4.0) * z2.clone() * z3.clone()
        - c(2.0) * x
}

/// `f′ = (ρR + λ + ζ₂′ + ζ₂² + 2ζ₂ζ₃)/ζ₂`.
pub fn f_prime_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (d2, _) = rhs_ring(z2, z3, p);
    let r = scalar_ring(z2, z3, p);
    let c = |v: f64| cst(z2, v);
    (c(p.rho) * r + c(p.lambda) + d2 + z2.clone() * z2.clone() + c(2.0) * z2.clone() * z3.clone())
        / z2.clone()
}

/// The obstruction `2(ζ₂−ζ₃)ζ₃m(m+1){3ζ₂ζ₃(4ρ−1)−λ}·{condition 3}/Q³`.
pub fn obstruction_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let c = |v: f64| cst(z2, v);
    let q = q_ring(z2, z3, p);
    let c2 = z2.clone() * z3.clone() * c(3.0 * (4.0 * r - 1.0)) - c(l);
    let c3 = cond3_ring(z2, z3, p);
    c(2.0 * m * (m + 1.0)) * (z2.clone() - z3.clone()) * z3.clone() * c2 * c3
        / (q.clone() * q.clone() * q)
}

fn cond3_ring<R: Ring>(z2: &R, z3: &R, p: &QEParams) -> R {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let c = |v: f64| cst(z2, v);
    c(l * (m - 1.0) * (3.0 * r - 1.0))
        + z2.clone() * z3.clone() * c((m - 1.0) * (4.0 * r - 1.0))
        + z2.clone() * z2.clone() * c((9.0 * r - 2.0) * p.denominator())
}

// --- checked f64 API ---------------------------------------------------------------------

pub fn q_of(z2: f64, z3: f64, p: &QEParams) -> f64 {
    q_ring(&z2, &z3, p)
}

fn check_q(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    let q = q_of(z2, z3, p);
    if q.abs() < Q_MIN {
        return Err(Error::QSingular(q));
    }
    Ok(q)
}

pub fn x_of(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    check_q(z2, z3, p)?;
    Ok(x_ring(&z2, &z3, p))
}

pub fn zeta_rhs(z2: f64, z3: f64, p: &QEParams) -> Result<(f64, f64)> {
    check_q(z2, z3, p)?;
    Ok(rhs_ring(&z2, &z3, p))
}

pub fn scalar_of(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    check_q(z2, z3, p)?;
    Ok(scalar_ring(&z2, &z3, p))
}

pub fn f_prime_of(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    check_q(z2, z3, p)?;
    if z2.abs() <= ZETA2_MIN {
        return Err(Error::ZeroDenominator("zeta2 in f'"));
    }
    Ok(f_prime_ring(&z2, &z3, p))
}

/// `f′ = (R₃₃ − R₂₂)/(ζ₂ − ζ₃)`, from the difference of the two fiber equations.
pub fn f_prime_from_ricci(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    let (d2, d3) = zeta_rhs(z2, z3, p)?;
    if (z2 - z3).abs() <= ZETA2_MIN * (1.0 + z2.abs()) {
        return Err(Error::ZeroDenominator("zeta2 - zeta3 in f'"));
    }
    let x = x_ring(&z2, &z3, p);
    let r22 = -d2 - z2 * z2 - 2.0 * z2 * z3;
    let r33 = -d3 - 2.0 * z3 * z3 - z2 * z3 - x;
    Ok((r33 - r22) / (z2 - z3))
}

pub fn harmonic_branch_check(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    check_q(z2, z3, p)?;
    Ok(obstruction_ring(&z2, &z3, p))
}

/// [`harmonic_branch_check`] with a scale: each factor replaced by the largest magnitude
/// among its terms.
pub fn harmonic_branch_relation(z2: f64, z3: f64, p: &QEParams) -> Result<Relation> {
    let q = check_q(z2, z3, p)?;
    let c = branch_conditions(z2, z3, p);
    let lead = 2.0 * p.m * (p.m + 1.0) * z3;
    let value = lead * (z2 - z3) * c[1].value * c[2].value / (q * q * q);
    let scale = (lead * z2.abs().max(z3.abs()) * c[1].scale * c[2].scale / (q * q * q)).abs();
    Ok(Relation { value, scale })
}

/// Gradient of a ring function of `(ζ₂, ζ₃)` contracted with the flow: its `s`-derivative
/// along solutions, together with its value.
fn along_flow(
    z2: f64,
    z3: f64,
    p: &QEParams,
    f: impl Fn(&Jet<f64>, &Jet<f64>, &QEParams) -> Jet<f64>,
) -> Result<(f64, f64)> {
    let (d2, d3) = zeta_rhs(z2, z3, p)?;
    let a = Jet::variable(2, 1, 0, z2);
    let b = Jet::variable(2, 1, 1, z3);
    let v = f(&a, &b, p);
    Ok((v.value(), v.d1(0) * d2 + v.d1(1) * d3))
}

/// `X′ + 2ζ₃X` along the flow, by the chain rule through the formulas. It coincides with
/// [`harmonic_branch_check`] identically.
pub fn compatibility(z2: f64, z3: f64, p: &QEParams) -> Result<f64> {
    let (x, xp) = along_flow(z2, z3, p, x_ring)?;
    Ok(xp + 2.0 * z3 * x)
}

/// Pointwise derived quantities of a state, with derivatives along the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub q: f64,
    pub x: f64,
    pub zeta2_p: f64,
    pub zeta3_p: f64,
    pub zeta2_pp: f64,
    pub zeta3_pp: f64,
    pub r: f64,
    pub r_p: f64,
    pub f_p: f64,
    pub f_pp: f64,
}

pub fn derived(z2: f64, z3: f64, p: &QEParams) -> Result<Derived> {
    let q = check_q(z2, z3, p)?;
    let (d2, d2p) = along_flow(z2, z3, p, |a, b, p| rhs_ring(a, b, p).0)?;
    let (d3, d3p) = along_flow(z2, z3, p, |a, b, p| rhs_ring(a, b, p).1)?;
    let (r, rp) = along_flow(z2, z3, p, scalar_ring)?;
    let f_p = f_prime_of(z2, z3, p)?;
    let (_, fpp) = along_flow(z2, z3, p, f_prime_ring)?;
    Ok(Derived {
        q,
        x: x_ring(&z2, &z3, p),
        zeta2_p: d2,
        zeta3_p: d3,
        zeta2_pp: d2p,
        zeta3_pp: d3p,
        r,
        r_p: rp,
        f_p,
        f_pp: fpp,
    })
}

/// Value and scale of one scalar relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Relation {
    pub value: f64,
    pub scale: f64,
}

impl Relation {
    fn of(terms: &[f64]) -> Self {
        Relation {
            value: terms.iter().sum(),
            scale: terms.iter().fold(0.0f64, |m, t| m.max(t.abs())),
        }
    }

    pub fn passes(&self, tol: &Tolerance) -> bool {
        tol.accepts(self.value, self.scale)
    }
}

/// The three first-order relations the formulas invert, evaluated with primes from
/// [`zeta_rhs`]: `[radial_curvature, lambda_balance, cross_relation]`.
pub fn system_residuals(z2: f64, z3: f64, p: &QEParams) -> Result<[Relation; 3]> {
    let (d2, d3) = zeta_rhs(z2, z3, p)?;
    let x = x_ring(&z2, &z3, p);
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let r1 = Relation::of(&[
        (m + 1.0) * d2,
        (m + 1.0) * z2 * z2,
        -(m + 1.0) * d3,
        -(m + 2.0) * z3 * z3,
        z2 * z3,
        -x,
    ]);
    let dz = z2 - z3;
    let curv = [2.0 * z2 * z2, 4.0 * z2 * z3, 6.0 * z3 * z3, 2.0 * x, 2.0 * d2, 4.0 * d3];
    let mut terms: Vec<f64> = curv.iter().map(|t| dz * r * t).collect();
    terms.extend([-dz * l, -z2 * x, -z2 * d3, d2 * z3]);
    let r2 = Relation::of(&terms);
    let r3 = Relation::of(&[
        (2.0 * m + 1.0) * d2 * z3,
        -(m + 2.0) * z2 * d3,
        -(m - 1.0) * z3 * d3,
        (m - 1.0) * z3 * x,
        3.0 * (m + 1.0) * z2 * z3 * z2,
        -3.0 * (m + 1.0) * z2 * z3 * z3,
    ]);
    Ok([r1, r2, r3])
}

/// Second-order relations for given `ζ₂″, ζ₃″` (e.g. from finite differences):
/// `−ζ₂″ = 2ζ₂′ζ₂ + 2ζ₂′ζ₃ + 2ζ₂²ζ₃ − 2ζ₂ζ₃² + R′/6` and
/// `−ζ₃″ = 3ζ₃′ζ₃ + ζ₂ζ₃′ + ζ₂ζ₃² − ζ₂²ζ₃ − ζ₃X + R′/6`.
pub fn double_prime_residuals(z2: f64, z3: f64, z2pp: f64, z3pp: f64, p: &QEParams) -> Result<[Relation; 2]> {
    let d = derived(z2, z3, p)?;
    let rp6 = d.r_p / 6.0;
    let a = Relation::of(&[
        z2pp,
        2.0 * d.zeta2_p * z2,
        2.0 * d.zeta2_p * z3,
        2.0 * z2 * z2 * z3,
        -2.0 * z2 * z3 * z3,
        rp6,
    ]);
    let b = Relation::of(&[
        z3pp,
        3.0 * d.zeta3_p * z3,
        z2 * d.zeta3_p,
        z2 * z3 * z3,
        -z2 * z2 * z3,
        -z3 * d.x,
        rp6,
    ]);
    Ok([a, b])
}

// --- branches ----------------------------------------------------------------------------

/// Which loci a state lies on; several may hold at once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchTag {
    /// `ζ₃ = 0`.
    pub zeta3_zero: bool,
    /// `3(4ρ−1)ζ₂ζ₃ − λ = 0`.
    pub product: bool,
    /// `λ(m−1)(3ρ−1) + ζ₂ζ₃(m−1)(4ρ−1) + ζ₂²(9ρ−2){4ρ−1+m(2ρ−1)} = 0`.
    pub quadratic: bool,
    /// `Q = 0`.
    pub q_zero: bool,
    pub generic: bool,
    /// The four condition values, in order.
    pub values: [f64; 4],
}

pub fn branch_conditions(z2: f64, z3: f64, p: &QEParams) -> [Relation; 4] {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    [
        Relation { value: z3, scale: z2.abs().max(z3.abs()) },
        Relation::of(&[3.0 * (4.0 * r - 1.0) * z2 * z3, -l]),
        Relation::of(&[
            l * (m - 1.0) * (3.0 * r - 1.0),
            z2 * z3 * (m - 1.0) * (4.0 * r - 1.0),
            z2 * z2 * (9.0 * r - 2.0) * p.denominator(),
        ]),
        Relation::of(&[z3 * (m - 1.0) * (4.0 * r - 1.0), z2 * p.denominator()]),
    ]
}

pub fn branch_classify(z2: f64, z3: f64, p: &QEParams, tol: &Tolerance) -> BranchTag {
    let c = branch_conditions(z2, z3, p);
    let f: Vec<bool> = c.iter().map(|r| r.passes(tol)).collect();
    BranchTag {
        zeta3_zero: f[0],
        product: f[1],
        quadratic: f[2],
        q_zero: f[3],
        generic: !f.iter().any(|&x| x),
        values: [c[0].value, c[1].value, c[2].value, c[3].value],
    }
}

// --- closed forms ------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClosedForm {
    Cot,
    Tanh,
    Coth,
}

impl std::str::FromStr for ClosedForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cot" => Ok(ClosedForm::Cot),
            "tanh" => Ok(ClosedForm::Tanh),
            "coth" => Ok(ClosedForm::Coth),
            _ => Err(Error::InvalidInput(format!("unknown closed form {s}"))),
        }
    }
}

/// `√Λ cot(√Λ s)`, `√−Λ tanh(√−Λ s)` or `√−Λ coth(√−Λ s)`.
pub fn closed_form_zeta2(case: ClosedForm, big_lambda: f64, s: f64) -> Result<f64> {
    let want_positive = case == ClosedForm::Cot;
    if (big_lambda > 0.0) != want_positive || big_lambda == 0.0 {
        return Err(Error::Domain(format!("{case:?} needs Lambda of the other sign, got {big_lambda}")));
    }
    let a = big_lambda.abs().sqrt();
    let u = a * s;
    match case {
        ClosedForm::Cot => {
            let k = (u / std::f64::consts::PI).round();
            if (u - k * std::f64::consts::PI).abs() < POLE_MARGIN {
                return Err(Error::Domain(format!("cot pole near s = {s}")));
            }
            Ok(a / u.tan())
        }
        ClosedForm::Tanh => Ok(a * u.tanh()),
        ClosedForm::Coth => {
            if u.abs() < POLE_MARGIN {
                return Err(Error::Domain(format!("coth pole near s = {s}")));
            }
            Ok(a / u.tanh())
        }
    }
}

/// The closed form through `(s0, zeta2)` on the `ζ₃ = 0` branch: its case and the shift
/// `c` with `ζ₂(s) = closed_form_zeta2(case, Λ, s − s0 + c)`. `None` for the constant
/// solutions `ζ₂ = ±√−Λ` and for `Λ = 0`.
pub fn closed_form_fit(big_lambda: f64, zeta2: f64) -> Option<(ClosedForm, f64)> {
    let a = big_lambda.abs().sqrt();
    if big_lambda > 0.0 {
        // acot into (0, π/a)
        let u = (a / zeta2).atan();
        let u = if u < 0.0 { u + std::f64::consts::PI } else { u };
        Some((ClosedForm::Cot, u / a))
    } else if big_lambda < 0.0 && zeta2.abs() != a {
        if zeta2.abs() < a {
            Some((ClosedForm::Tanh, (zeta2 / a).atanh() / a))
        } else {
            Some((ClosedForm::Coth, (a / zeta2).atanh() / a))
        }
    } else {
        None
    }
}

// --- integration -------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaState {
    pub s: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub log_p: f64,
    pub log_h: f64,
    pub f: f64,
}

impl ZetaState {
    pub fn new(s: f64, zeta2: f64, zeta3: f64) -> Self {
        ZetaState { s, zeta2, zeta3, log_p: 0.0, log_h: 0.0, f: 0.0 }
    }

    fn vec(&self) -> [f64; 5] {
        [self.zeta2, self.zeta3, self.log_p, self.log_h, self.f]
    }

    fn from_vec(s: f64, v: [f64; 5]) -> Self {
        ZetaState { s, zeta2: v[0], zeta3: v[1], log_p: v[2], log_h: v[3], f: v[4] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    #[serde(rename = "Q_singular")]
    QSingular,
    Blowup,
    BranchLocus,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZetaTrajectory {
    pub states: Vec<ZetaState>,
    pub params: QEParams,
    /// Signed step actually used.
    pub step: f64,
    /// Mean of nodewise `k = −X h²`.
    pub k: f64,
    /// `(max k − min k)/(1 + |k|)` over the nodes.
    pub k_spread: f64,
    pub termination: Termination,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrateOptions {
    /// Stop when a generic start crosses one of the branch loci 2 or 3.
    pub stop_on_branch: bool,
}

fn flow(y: &[f64; 5], p: &QEParams) -> Result<[f64; 5]> {
    let (z2, z3) = (y[0], y[1]);
    let (d2, d3) = zeta_rhs(z2, z3, p)?;
    let fp = f_prime_of(z2, z3, p)?;
    Ok([d2, d3, z2, z3, fp])
}

fn rk4(y: &[f64; 5], h: f64, p: &QEParams) -> Result<[f64; 5]> {
    let add = |a: &[f64; 5], b: &[f64; 5], c: f64| {
        let mut r = *a;
        for i in 0..5 {
            r[i] += c * b[i];
        }
        r
    };
    let k1 = flow(y, p)?;
    let k2 = flow(&add(y, &k1, h / 2.0), p)?;
    let k3 = flow(&add(y, &k2, h / 2.0), p)?;
    let k4 = flow(&add(y, &k3, h), p)?;
    let mut r = *y;
    for i in 0..5 {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(r)
}

pub fn integrate(initial: ZetaState, s_end: f64, step: f64, params: &QEParams) -> Result<ZetaTrajectory> {
    integrate_with(initial, s_end, step, params, IntegrateOptions::default())
}

/// Classical fixed-step fourth-order Runge–Kutta from `initial.s` to `s_end`.
///
/// The step is shrunk so that a whole number of steps lands on `s_end`. Singular events
/// end the trajectory early and are recorded as its termination, not as errors.
pub fn integrate_with(
    initial: ZetaState,
    s_end: f64,
    step: f64,
    params: &QEParams,
    opts: IntegrateOptions,
) -> Result<ZetaTrajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let v0 = initial.vec();
    if v0.iter().any(|x| !x.is_finite()) || !initial.s.is_finite() || !s_end.is_finite() {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    check_q(initial.zeta2, initial.zeta3, params)?;
    let span = s_end - initial.s;
    let n = (span.abs() / step).ceil() as usize;
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let mut states = vec![initial];
    let mut termination = Termination::ReachedEnd;
    let tol = Tolerance::DEFAULT;
    let start_tag = branch_classify(initial.zeta2, initial.zeta3, params, &tol);
    let mut y = v0;
    for i in 1..=n {
        let next = match rk4(&y, h, params) {
            Ok(v) => v,
            Err(Error::QSingular(_)) => {
                termination = Termination::QSingular;
                break;
            }
            Err(Error::ZeroDenominator(_)) => {
                termination = Termination::Blowup;
                break;
            }
            Err(e) => return Err(e),
        };
        if next.iter().any(|x| !x.is_finite() || x.abs() > BLOWUP) {
            termination = Termination::Blowup;
            break;
        }
        // Q is a pole of the flow, so a sign change means a step jumped across one
        let q_next = q_of(next[0], next[1], params);
        if q_next.abs() < Q_MIN || q_next.signum() != q_of(y[0], y[1], params).signum() {
            termination = Termination::QSingular;
            break;
        }
        if opts.stop_on_branch && start_tag.generic {
            let a = branch_conditions(y[0], y[1], params);
            let b = branch_conditions(next[0], next[1], params);
            if (1..3).any(|c| a[c].value.signum() != b[c].value.signum()) {
                termination = Termination::BranchLocus;
                break;
            }
        }
        let s = if i == n { s_end } else { initial.s + h * i as f64 };
        states.push(ZetaState::from_vec(s, next));
        y = next;
    }
    let ks: Vec<f64> = states
        .iter()
        .map(|st| -x_ring(&st.zeta2, &st.zeta3, params) * (2.0 * st.log_h).exp())
        .collect();
    let (k, k_spread) = spread(&ks);
    Ok(ZetaTrajectory { states, params: *params, step: h, k, k_spread, termination })
}

fn spread(ks: &[f64]) -> (f64, f64) {
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mean, (hi - lo) / (1.0 + mean.abs()))
}

/// Per-node view of a trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NodeRow {
    pub s: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub p: f64,
    pub h: f64,
    pub f: f64,
    pub k: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub branch_zeta3_zero: bool,
    pub branch_product: bool,
    pub branch_quadratic: bool,
    pub branch_q_zero: bool,
    pub generic: bool,
}

/// Largest relative gap between the five- and three-point derivatives of `ζ′` at which
/// the five-point value is trusted; it bounds the stencil error near `1e-8` relative.
pub const FD_RESOLVED: f64 = 1e-4;

/// Maximum over a trajectory of each along-trajectory relation, as `residual / bound`.
#[derive(Clone, Debug, Serialize)]
pub struct SystemReport {
    /// Worst `(residual, scale)` over nodes for radial_curvature, lambda_balance, cross_relation.
    pub first_order: [Relation; 3],
    /// Worst for the two second-order relations, with finite-difference `ζ″`. These only
    /// vanish where the compatibility obstruction does.
    pub second_order: [Relation; 2],
    /// Worst of `(m+1)(δ₂ − δ₃) − (X′ + 2ζ₃X)`, where `δᵢ` are the second-order defects:
    /// this holds on every trajectory.
    pub defect_identity: Relation,
    /// Worst obstruction value `X′ + 2ζ₃X` over nodes.
    pub compatibility: Relation,
    pub nodes: usize,
    /// Interior nodes left out of the second-order relations because the difference
    /// stencil does not resolve `ζ′` there.
    pub unresolved: usize,
}

fn worst(acc: &mut Relation, r: Relation, tol: &Tolerance) {
    if r.value.abs() / tol.bound(r.scale) > acc.value.abs() / tol.bound(acc.scale) {
        *acc = r;
    }
}

impl ZetaTrajectory {
    pub fn rows(&self) -> Vec<NodeRow> {
        let tol = Tolerance::DEFAULT;
        self.states
            .iter()
            .map(|st| {
                let x = x_ring(&st.zeta2, &st.zeta3, &self.params);
                let tag = branch_classify(st.zeta2, st.zeta3, &self.params, &tol);
                NodeRow {
                    s: st.s,
                    zeta2: st.zeta2,
                    zeta3: st.zeta3,
                    x,
                    p: st.log_p.exp(),
                    h: st.log_h.exp(),
                    f: st.f,
                    k: -x * (2.0 * st.log_h).exp(),
                    q: q_of(st.zeta2, st.zeta3, &self.params),
                    branch_zeta3_zero: tag.zeta3_zero,
                    branch_product: tag.product,
                    branch_quadratic: tag.quadratic,
                    branch_q_zero: tag.q_zero,
                    generic: tag.generic,
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in self.rows() {
            out.serialize(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    /// Largest mismatch against a closed form over nodes at least `margin` from both ends.
    pub fn closed_form_mismatch(&self, case: ClosedForm, margin: f64) -> Result<f64> {
        let lam = self
            .params
            .big_lambda()
            .ok_or_else(|| Error::InvalidInput("Lambda undefined for these parameters".into()))?;
        let (a, b) = self.s_range();
        let mut m = 0.0f64;
        for st in &self.states {
            if st.s < a + margin || st.s > b - margin {
                continue;
            }
            m = m.max((st.zeta2 - closed_form_zeta2(case, lam, st.s)?).abs());
        }
        Ok(m)
    }

    /// Largest mismatch against the closed form fitted through the initial state, for
    /// trajectories on the `ζ₃ = 0` branch.
    pub fn fitted_closed_form_mismatch(&self) -> Result<Option<(ClosedForm, f64)>> {
        let lam = self
            .params
            .big_lambda()
            .ok_or_else(|| Error::InvalidInput("Lambda undefined for these parameters".into()))?;
        let Some(first) = self.states.first() else { return Err(Error::EmptyTrajectory) };
        let Some((case, c)) = closed_form_fit(lam, first.zeta2) else { return Ok(None) };
        let mut m = 0.0f64;
        for st in &self.states {
            m = m.max((st.zeta2 - closed_form_zeta2(case, lam, st.s - first.s + c)?).abs());
        }
        Ok(Some((case, m)))
    }

    pub fn s_range(&self) -> (f64, f64) {
        let a = self.states.first().map_or(0.0, |s| s.s);
        let b = self.states.last().map_or(0.0, |s| s.s);
        (a.min(b), a.max(b))
    }

    /// Evaluates the along-trajectory relations at every node. Second-order relations use a
    /// five-point difference of `ζ′` and are only evaluated at interior nodes where it is
    /// resolved.
    pub fn system_report(&self, tol: &Tolerance) -> Result<SystemReport> {
        let p = &self.params;
        let z = Relation { value: 0.0, scale: 0.0 };
        let mut first = [z; 3];
        let mut second = [z; 2];
        let mut compat = z;
        let mut defect = z;
        let mut unresolved = 0;
        let primes: Vec<(f64, f64)> = self
            .states
            .iter()
            .map(|st| zeta_rhs(st.zeta2, st.zeta3, p))
            .collect::<Result<_>>()?;
        let h = self.step;
        for (i, st) in self.states.iter().enumerate() {
            let rel = system_residuals(st.zeta2, st.zeta3, p)?;
            for (acc, r) in first.iter_mut().zip(rel) {
                worst(acc, r, tol);
            }
            let c = harmonic_branch_check(st.zeta2, st.zeta3, p)?;
            let x = x_ring(&st.zeta2, &st.zeta3, p);
            worst(&mut compat, Relation { value: c, scale: (st.zeta3 * x).abs() }, tol);
            if i >= 2 && i + 2 < self.states.len() {
                let fd = |k: usize| {
                    let f = |j: usize| if k == 0 { primes[j].0 } else { primes[j].1 };
                    let d5 = (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * h);
                    let d3 = (f(i + 1) - f(i - 1)) / (2.0 * h);
                    (d5, (d5 - d3).abs() / (1.0 + d5.abs()))
                };
                let ((z2pp, e2), (z3pp, e3)) = (fd(0), fd(1));
                if e2.max(e3) > FD_RESOLVED {
                    unresolved += 1;
                    continue;
                }
                let rel = double_prime_residuals(st.zeta2, st.zeta3, z2pp, z3pp, p)?;
                let m1 = p.m + 1.0;
                let d = Relation::of(&[m1 * rel[0].value, -m1 * rel[1].value, -c]);
                let scale = m1 * rel[0].scale.max(rel[1].scale);
                worst(&mut defect, Relation { value: d.value, scale: d.scale.max(scale) }, tol);
                for (acc, r) in second.iter_mut().zip(rel) {
                    worst(acc, r, tol);
                }
            }
        }
        Ok(SystemReport {
            first_order: first,
            second_order: second,
            defect_identity: defect,
            compatibility: compat,
            nodes: self.states.len(),
            unresolved,
        })
    }
}

// --- reconstruction ----------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub metric: MetricField,
    pub f: ScalarField,
    pub k: f64,
    pub k_spread: f64,
    /// Node positions, each a valid `s` for the reconstructed fields.
    pub nodes: Vec<f64>,
}

/// Rebuilds `g = ds² + p²dt² + h²g̃_k` and `f` from a trajectory by quintic Hermite
/// interpolation of `log p`, `log h` and `f`, which is exact at nodes up to second
/// derivatives.
pub fn reconstruct_warped(traj: &ZetaTrajectory) -> Result<Reconstruction> {
    if traj.states.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if traj.states.len() < 2 {
        return Err(Error::InvalidInput("reconstruction needs at least two nodes".into()));
    }
    if traj.k_spread > K_SPREAD_MAX {
        return Err(Error::InconsistentK(traj.k_spread));
    }
    let p = &traj.params;
    let mut st = traj.states.clone();
    if st[0].s > st[st.len() - 1].s {
        st.reverse();
    }
    let ds: Vec<Derived> = st.iter().map(|x| derived(x.zeta2, x.zeta3, p)).collect::<Result<_>>()?;
    let knots: Vec<f64> = st.iter().map(|x| x.s).collect();
    let col = |f: &dyn Fn(usize) -> f64| (0..st.len()).map(f).collect::<Vec<f64>>();
    let lp = QuinticSpline::new(
        &knots,
        &col(&|i| st[i].log_p),
        &col(&|i| st[i].zeta2),
        &col(&|i| ds[i].zeta2_p),
    )?;
    let lh = QuinticSpline::new(
        &knots,
        &col(&|i| st[i].log_h),
        &col(&|i| st[i].zeta3),
        &col(&|i| ds[i].zeta3_p),
    )?;
    let fs = QuinticSpline::new(&knots, &col(&|i| st[i].f), &col(&|i| ds[i].f_p), &col(&|i| ds[i].f_pp))?;
    let s = Expr::var(0);
    let gp = (2.0 * Expr::spline(Arc::new(lp), s.clone())).exp();
    let gh = (2.0 * Expr::spline(Arc::new(lh), s.clone())).exp();
    let fiber = ConstCurvChart::new(traj.k, 2);
    let mut diag = vec![Expr::one(), gp];
    diag.extend(fiber.diagonal(2).into_iter().map(|c| gh.clone() * c));
    let (a, b) = (knots[0], knots[knots.len() - 1]);
    let slack = 1e-13 * (1.0 + a.abs().max(b.abs()));
    let mut guard = vec![Interval::new(a - slack, b + slack), Interval::new(-std::f64::consts::PI, std::f64::consts::PI)];
    guard.extend(fiber.guard());
    let chart = Chart::new(["s", "t", "x3", "x4"])?;
    let metric = MetricField::diagonal(chart, diag, Domain::new(guard))?;
    let f = ScalarField::potential(Expr::spline(Arc::new(fs), s));
    Ok(Reconstruction { metric, f, k: traj.k, k_spread: traj.k_spread, nodes: knots })
}

impl Reconstruction {
    /// Quasi-Einstein residual at every `stride`-th node, at the centre of the fiber chart.
    pub fn node_residuals(&self, p: &QEParams, stride: usize) -> Result<Vec<Sample>> {
        let fiber: Vec<f64> = ConstCurvChart::new(self.k, 2).sampling().iter().map(|i| 0.5 * (i.lo + i.hi)).collect();
        self.nodes
            .iter()
            .step_by(stride.max(1))
            .map(|&s| {
                let mut point = vec![s, 0.0];
                point.extend(&fiber);
                Ok(PointData::new(&self.metric, &self.f, &point)?.qe_residual(p).summary())
            })
            .collect()
    }
}

// --- one-curvature (conformally flat) branch ---------------------------------------------

/// Inputs of the single-`ζ` relations for a warped product `ds² + h²ḡ` over a 3-dimensional
/// fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LcfInputs {
    pub zeta: f64,
    pub zeta_p: f64,
    pub zeta_pp: f64,
    pub x: f64,
    pub f_p: f64,
    pub f_pp: f64,
    pub r: f64,
    pub r_p: f64,
}

/// The four relations, left minus right:
/// `(m+1)ζ′ + (m+3)ζ² + 2X + ρR + λ + (mR′/f′)(1/6 − ρ)`,
/// `ζ′ + 3ζ² + 2X + ρR + λ − f′ζ`,
/// `−3ζ′ − 3ζ² + f″ − f′²/m − (ρR + λ)`,
/// `−ζ″ − (4ζζ′ − 2ζX + R′/6)`.
pub fn lcf_residuals(i: &LcfInputs, p: &QEParams) -> Result<[Relation; 4]> {
    let (m, r, l) = (p.m, p.rho, p.lambda);
    let lcf_term = if i.r_p == 0.0 {
        0.0
    } else {
        if i.f_p.abs() <= ZETA2_MIN {
            return Err(Error::ZeroDenominator("f' in the first relation"));
        }
        m * i.r_p / i.f_p * (1.0 / 6.0 - r)
    };
    let rr = r * i.r;
    Ok([
        Relation::of(&[(m + 1.0) * i.zeta_p, (m + 3.0) * i.zeta * i.zeta, 2.0 * i.x, rr, l, lcf_term]),
        Relation::of(&[i.zeta_p, 3.0 * i.zeta * i.zeta, 2.0 * i.x, rr, l, -i.f_p * i.zeta]),
        Relation::of(&[-3.0 * i.zeta_p, -3.0 * i.zeta * i.zeta, i.f_pp, -i.f_p * i.f_p / m, -rr, -l]),
        Relation::of(&[-i.zeta_pp, -4.0 * i.zeta * i.zeta_p, 2.0 * i.zeta * i.x, -i.r_p / 6.0]),
    ])
}

/// Closed-form inputs of the warped space forms of curvature `κ` at `s`: `h = sin(as)`,
/// `cosh(as)` or `sinh(as)` with `a = √|κ|`, and `f` as in the catalog.
pub fn lcf_closed_form(case: ClosedForm, kappa: f64, m: f64, s: f64) -> Result<LcfInputs> {
    let a = kappa.abs().sqrt();
    let u = a * s;
    let a2 = a * a;
    let (zeta, zeta_p, zeta_pp, x, f_p, f_pp) = match case {
        ClosedForm::Cot if kappa > 0.0 => {
            let (sn, cs) = u.sin_cos();
            let csc2 = 1.0 / (sn * sn);
            let cot = cs / sn;
            let sec2 = 1.0 / (cs * cs);
            (a * cot, -a2 * csc2, 2.0 * a2 * a * csc2 * cot, -a2 * csc2, m * a * u.tan(), m * a2 * sec2)
        }
        // cosh warping
        ClosedForm::Tanh if kappa < 0.0 => {
            let th = u.tanh();
            let sech2 = 1.0 / (u.cosh() * u.cosh());
            let csch2 = 1.0 / (u.sinh() * u.sinh());
            (a * th, a2 * sech2, -2.0 * a2 * a * sech2 * th, a2 * sech2, -m * a / th, m * a2 * csch2)
        }
        // sinh warping
        ClosedForm::Coth if kappa < 0.0 => {
            let ct = 1.0 / u.tanh();
            let csch2 = 1.0 / (u.sinh() * u.sinh());
            let sech2 = 1.0 / (u.cosh() * u.cosh());
            (a * ct, -a2 * csch2, 2.0 * a2 * a * csch2 * ct, -a2 * csch2, -m * a * u.tanh(), -m * a2 * sech2)
        }
        _ => return Err(Error::Domain(format!("{case:?} does not match kappa = {kappa}"))),
    };
    Ok(LcfInputs { zeta, zeta_p, zeta_pp, x, f_p, f_pp, r: 12.0 * kappa, r_p: 0.0 })
}
