//! Algebraic identities for three pairwise distinct principal curvatures `a, b, c` of the
//! level sets of `f`, ending in the relation that forces `f′ = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::residual::{Residual, ResidualReport, Sample};
use crate::tol::Tolerance;

/// Minimum pairwise gap, relative to `1 + max |·|`, for the non-degenerate operations.
pub const DISTINCT_TOL: f64 = 1e-8;

/// Sweeps draw entries from `[-3, 3)` and keep triples whose pairwise gaps exceed this.
pub const SWEEP_GAP: f64 = 0.05;

/// Default values of `m` for sweeps.
pub const SWEEP_M: [f64; 5] = [-3.0, -0.5, 2.0, 5.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Triple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pair {
    Ab,
    Ac,
    Bc,
}

impl Triple {
    pub fn new(a: f64, b: f64, c: f64, m: f64) -> Result<Self> {
        if ![a, b, c, m].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("triple must be finite".into()));
        }
        for bad in [0.0, 1.0, -1.0, -2.0] {
            if (m - bad).abs() <= 1e-12 {
                return Err(Error::ExcludedParameter(format!("m = {m}")));
            }
        }
        Ok(Triple { a, b, c, m })
    }

    /// `P = a² + b² + c² − ab − bc − ca`, half the sum of squared gaps.
    pub fn p(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        0.5 * ((a - b).powi(2) + (a - c).powi(2) + (b - c).powi(2))
    }

    /// `a²b + ab² + a²c + ac² + b²c + bc²`.
    pub fn sym_sum(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        a * a * b + a * b * b + a * a * c + a * c * c + b * b * c + b * c * c
    }

    fn size(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    fn check_p(&self) -> Result<f64> {
        let p = self.p();
        if p <= DISTINCT_TOL * (1.0 + self.size()).powi(2) {
            return Err(Error::DegenerateTriple("P vanishes"));
        }
        Ok(p)
    }

    fn check_distinct(&self) -> Result<f64> {
        let eps = DISTINCT_TOL * (1.0 + self.size());
        let (a, b, c) = (self.a, self.b, self.c);
        if (a - b).abs() <= eps || (a - c).abs() <= eps || (b - c).abs() <= eps {
            return Err(Error::DegenerateTriple("entries are not pairwise distinct"));
        }
        self.check_p()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Triple { a: t * self.a, b: t * self.b, c: t * self.c, m: self.m }
    }

    fn ordered(&self, pair: Pair) -> (f64, f64, f64) {
        match pair {
            Pair::Ab => (self.a, self.b, self.c),
            Pair::Ac => (self.a, self.c, self.b),
            Pair::Bc => (self.b, self.c, self.a),
        }
    }
}

/// `Γ₃₄²Γ₄₃² = (a−b)(a−c)(b−c)² / (4P)`.
pub fn gamma_sq(t: &Triple) -> Result<f64> {
    let p = t.check_p()?;
    Ok((t.a - t.b) * (t.a - t.c) * (t.b - t.c).powi(2) / (4.0 * p))
}

/// `f′ = −(sym-sum − 6abc) / (2(m+1)P)`.
pub fn f_prime_distinct(t: &Triple) -> Result<f64> {
    let p = t.check_p()?;
    Ok(-(t.sym_sum() - 6.0 * t.a * t.b * t.c) / (2.0 * (t.m + 1.0) * p))
}

/// `Φᵢⱼ = (ζᵢ′ − ζⱼ′)/(ζᵢ − ζⱼ)` from the pair system.
pub fn pair_prime(t: &Triple, which: Pair) -> Result<f64> {
    let p = t.check_p()?;
    let (i, j, k) = t.ordered(which);
    let m1 = t.m + 1.0;
    Ok(-(i + j) - k / m1 - (i - k) * (j - k) * (i + j - 2.0 * k) / (2.0 * m1 * p))
}

/// `4PΦ_ab − Σ (gap)²Φ` minus its closed form `2P(c−a−b) − ((m+2)/(m+1))(sym-sum − 6abc)`.
pub fn pair_sum_residual(t: &Triple) -> Result<Residual<f64>> {
    let p = t.check_distinct()?;
    let (a, b, c) = (t.a, t.b, t.c);
    let pab = pair_prime(t, Pair::Ab)?;
    let pac = pair_prime(t, Pair::Ac)?;
    let pbc = pair_prime(t, Pair::Bc)?;
    let terms = [
        4.0 * p * pab,
        -(a - b).powi(2) * pab,
        -(a - c).powi(2) * pac,
        -(b - c).powi(2) * pbc,
        -2.0 * p * (c - a - b),
        (t.m + 2.0) / (t.m + 1.0) * t.sym_sum(),
        -(t.m + 2.0) / (t.m + 1.0) * 6.0 * a * b * c,
    ];
    Ok(relation(&terms))
}

/// `(α − γ + β)² − (a−b)²(b−c)²/P` with `α = (a−b)²/(2√P)`, `β = (b−c)²α/(a−b)²` and
/// `γ = (a−c)²α/(a−b)²`.
pub fn alpha_consistency(t: &Triple) -> Result<Residual<f64>> {
    let p = t.check_distinct()?;
    let (a, b, c) = (t.a, t.b, t.c);
    let alpha = (a - b).powi(2) / (2.0 * p.sqrt());
    let beta = (b - c).powi(2) / (a - b).powi(2) * alpha;
    let gamma = (a - c).powi(2) / (a - b).powi(2) * alpha;
    let lhs = (alpha - gamma + beta).powi(2);
    let rhs = (a - b).powi(2) * (b - c).powi(2) / p;
    let scale = (alpha.abs() + beta.abs() + gamma.abs()).powi(2).max(rhs.abs());
    Ok(Residual::new(lhs - rhs, scale))
}

fn relation(terms: &[f64]) -> Residual<f64> {
    let scale = terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Residual::new(terms.iter().sum(), scale)
}

/// Both roots `c` of `(a+b)c² + (a²+b²−6ab)c + ab(a+b) = 0`, which is `sym-sum = 6abc`.
pub fn symmetric_roots(a: f64, b: f64) -> Result<[f64; 2]> {
    let qa = a + b;
    let qb = a * a + b * b - 6.0 * a * b;
    let qc = a * b * (a + b);
    if qa.abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
        return Err(Error::DegenerateTriple("a + b vanishes"));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Err(Error::DegenerateTriple("no real root"));
    }
    // the stable pair of quadratic roots
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    if q == 0.0 {
        return Ok([0.0, 0.0]);
    }
    Ok([q / qa, qc / q])
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepBlock {
    pub m: f64,
    pub triples: usize,
    pub pair_sum: ResidualReport,
    pub alpha: ResidualReport,
    /// `f_prime_distinct` on triples built from [`symmetric_roots`].
    pub constructed_f_prime: ResidualReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub blocks: Vec<SweepBlock>,
    pub pass: bool,
}

fn well_separated(t: &Triple) -> bool {
    let (a, b, c) = (t.a, t.b, t.c);
    (a - b).abs().min((a - c).abs()).min((b - c).abs()) > SWEEP_GAP
}

fn random_triple(rng: &mut ChaCha8Rng, m: f64) -> Triple {
    loop {
        let v: [f64; 3] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let t = Triple { a: v[0], b: v[1], c: v[2], m };
        if well_separated(&t) {
            return t;
        }
    }
}

fn constructed_triple(rng: &mut ChaCha8Rng, m: f64) -> Triple {
    loop {
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let Ok(roots) = symmetric_roots(a, b) else { continue };
        let c = roots[rng.gen_range(0..2)];
        let t = Triple { a, b, c, m };
        if well_separated(&t) {
            return t;
        }
    }
}

/// Seeded sweep of the identities over `count` triples for each `m`.
pub fn sweep(m_values: &[f64], count: usize, seed: u64, tol: &Tolerance) -> Result<SweepReport> {
    let mut blocks = Vec::with_capacity(m_values.len());
    for (k, &m) in m_values.iter().enumerate() {
        Triple::new(0.0, 0.0, 0.0, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut pts = Vec::with_capacity(count);
        let (mut p31, mut al) = (Vec::with_capacity(count), Vec::with_capacity(count));
        for _ in 0..count {
            let t = random_triple(&mut rng, m);
            pts.push(vec![t.a, t.b, t.c]);
            p31.push(pair_sum_residual(&t)?.summary());
            al.push(alpha_consistency(&t)?.summary());
        }
        let mut cpts = Vec::with_capacity(count);
        let mut fp = Vec::with_capacity(count);
        for _ in 0..count {
            let t = constructed_triple(&mut rng, m);
            cpts.push(vec![t.a, t.b, t.c]);
            fp.push(Sample { residual: f_prime_distinct(&t)?.abs(), scale: 0.0 });
        }
        blocks.push(SweepBlock {
            m,
            triples: count,
            pair_sum: ResidualReport::from_samples(pts.clone(), p31, *tol),
            alpha: ResidualReport::from_samples(pts, al, *tol),
            constructed_f_prime: ResidualReport::from_samples(cpts, fp, *tol),
        });
    }
    let pass = !blocks.is_empty()
        && blocks.iter().all(|b| b.pair_sum.pass && b.alpha.pass && b.constructed_f_prime.pass);
    Ok(SweepReport { seed, blocks, pass })
}
