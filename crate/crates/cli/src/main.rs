//! `qem`: run catalog verification, ζ-flow integration and identity sweeps from the shell.
//!
//! Every command writes one JSON report (to `--out` or stdout) and exits with 0 when all
//! checks pass, 1 on a usage error and 2 when a check fails.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qem_core::catalog::{build_entry, sample_domain, EntryId, NumericParams};
use qem_core::identities::{sweep, SWEEP_M};
use qem_core::qe::QEParams;
use qem_core::residual::Sample;
use qem_core::suite::{verify_entry, Check, EntryReport, VerifyConfig};
use qem_core::zeta::{
    branch_classify, integrate_with, q_of, reconstruct_warped, x_of, BranchTag, ClosedForm, IntegrateOptions,
    Relation, SystemReport, Termination, ZetaState, ZetaTrajectory, K_SPREAD_MAX,
};
use qem_core::{Error, Tolerance};

const SCHEMA: u32 = 1;

/// Tolerances of the along-trajectory checks.
const FIRST_ORDER_TOL: Tolerance = Tolerance::relative(1e-7);
const SECOND_ORDER_TOL: Tolerance = Tolerance::relative(1e-5);
const CLOSED_FORM_TOL: Tolerance = Tolerance::new(1e-6, 0.0);
const RECONSTRUCTION_TOL: Tolerance = Tolerance::relative(1e-6);
/// A trajectory counts as exact when its compatibility obstruction vanishes to this level.
const EXACT_TOL: Tolerance = Tolerance::relative(1e-8);
const RECONSTRUCTION_NODES: usize = 10;

#[derive(Parser)]
#[command(name = "qem", version, about = "Numerical certification of quasi-Einstein metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify catalog entries at seeded sample points.
    Verify(VerifyArgs),
    /// Integrate the ζ-system from an initial point.
    Integrate(IntegrateArgs),
    /// Sweep the eigenvalue-triple identities.
    Identities(IdentitiesArgs),
}

#[derive(Args, Clone, Default, Serialize)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    /// Profile constant of the C62 entries.
    #[arg(long = "C", allow_negative_numbers = true)]
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    /// Curvature of the warped space forms.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, base: NumericParams) -> NumericParams {
        NumericParams {
            m: self.m.unwrap_or(base.m),
            rho: self.rho.unwrap_or(base.rho),
            lambda: self.lambda.unwrap_or(base.lambda),
            c: self.c.unwrap_or(base.c),
            kappa: self.kappa.unwrap_or(base.kappa),
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "abs-tol")]
    abs_tol: Option<f64>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<f64>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn tolerance(&self, default: Tolerance) -> Result<Tolerance, CliError> {
        let t = Tolerance::new(self.abs_tol.unwrap_or(default.abs), self.rel_tol.unwrap_or(default.rel));
        if !(t.abs >= 0.0 && t.rel >= 0.0) {
            return Err(CliError::Usage("tolerances must be non-negative".into()));
        }
        Ok(t)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Catalog entry id, or `all`.
    #[arg(long)]
    entry: String,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, allow_negative_numbers = true)]
    zeta2: f64,
    #[arg(long, allow_negative_numbers = true)]
    zeta3: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    s0: f64,
    #[arg(long = "s-end", allow_negative_numbers = true, default_value_t = 1.0)]
    s_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Trajectory CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Stop a generic trajectory when it crosses a branch locus.
    #[arg(long = "stop-on-branch")]
    stop_on_branch: bool,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct IdentitiesArgs {
    /// Single m value; the default sweep covers several.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

/// Parameter and input errors are the caller's; everything else is a failed run.
fn classify(e: Error) -> CliError {
    match e {
        Error::ExcludedParameter(_) | Error::ConstraintViolation(_) | Error::InvalidInput(_) | Error::Domain(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Runtime(other.into()),
    }
}

#[derive(Serialize)]
struct Report<B> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: serde_json::Value,
    #[serde(flatten)]
    body: B,
    pass: bool,
    wall_time_s: f64,
}

fn emit<B: Serialize>(
    command: &'static str,
    config: serde_json::Value,
    body: B,
    pass: bool,
    out: Option<&PathBuf>,
    started: Instant,
) -> Result<(), CliError> {
    let report = Report {
        schema: SCHEMA,
        tool: "qem",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        body,
        pass,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let write = |w: &mut dyn Write| -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    };
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            write(&mut BufWriter::new(f))?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn config_json<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("config is plain data")
}

// --- verify ------------------------------------------------------------------------------

#[derive(Serialize)]
struct ExpectedEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    big_lambda: Option<f64>,
    /// Expected scalar curvature when it is constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    scalar_curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
}

#[derive(Serialize)]
struct EntryBlock {
    #[serde(flatten)]
    report: EntryReport,
    expected: ExpectedEcho,
}

#[derive(Serialize)]
struct VerifyConfigEcho<'a> {
    entry: &'a str,
    params: &'a ParamArgs,
    #[serde(flatten)]
    run: VerifyConfig,
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, CliError> {
    let started = Instant::now();
    let ids: Vec<EntryId> = if a.entry.eq_ignore_ascii_case("all") {
        EntryId::ALL.to_vec()
    } else {
        vec![a.entry.parse().map_err(classify)?]
    };
    let cfg = VerifyConfig {
        samples: a.common.samples.unwrap_or(100),
        seed: a.common.seed,
        tolerance: a.common.tolerance(Tolerance::DEFAULT)?,
    };
    if cfg.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    // build every entry first so parameter errors surface before any work
    let entries = ids
        .iter()
        .map(|&id| build_entry(id, a.params.apply(id.defaults())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(classify)?;
    let mut blocks = Vec::with_capacity(entries.len());
    for e in &entries {
        let report = verify_entry(e, &cfg).map_err(classify)?;
        let scalar_curvature = if e.expected.harmonic_curvature {
            let pt = sample_domain(e, 1, cfg.seed).map_err(classify)?;
            Some(e.expected_scalar(&pt[0]).map_err(classify)?)
        } else {
            None
        };
        eprintln!("{:<14} {}", report.entry.name(), if report.pass { "pass" } else { "FAIL" });
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("  {} failed: value {:e}", c.name, c.value);
        }
        blocks.push(EntryBlock {
            expected: ExpectedEcho { big_lambda: e.expected.big_lambda, scalar_curvature, mu: e.expected.mu },
            report,
        });
    }
    let pass = blocks.iter().all(|b| b.report.pass);
    #[derive(Serialize)]
    struct Body {
        entries: Vec<EntryBlock>,
    }
    let config = config_json(&VerifyConfigEcho { entry: &a.entry, params: &a.params, run: cfg });
    emit("verify", config, Body { entries: blocks }, pass, a.common.out.as_ref(), started)?;
    Ok(pass)
}

// --- integrate ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClosedFormEcho {
    case: ClosedForm,
    mismatch: f64,
}

#[derive(Serialize)]
struct ReconstructionEcho {
    k: f64,
    nodes: usize,
}

#[derive(Serialize)]
struct IntegrateBody {
    params: QEParams,
    initial_q: f64,
    start_branch: BranchTag,
    termination: Termination,
    nodes: usize,
    s_range: (f64, f64),
    step: f64,
    k: f64,
    k_spread: f64,
    k_constant: bool,
    /// Exact trajectories have a vanishing compatibility obstruction and describe metrics.
    exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<ClosedFormEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<SystemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reconstruction: Option<ReconstructionEcho>,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct IntegrateConfigEcho<'a> {
    params: &'a ParamArgs,
    zeta2: f64,
    zeta3: f64,
    s0: f64,
    s_end: f64,
    step: f64,
    stop_on_branch: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<&'a PathBuf>,
}

fn relation_check(name: &str, r: &Relation, nodes: usize, skipped: usize, tol: Tolerance) -> Check {
    let mut c = Check::residual(name, &[Sample { residual: r.value.abs(), scale: r.scale }], skipped, tol);
    c.samples = nodes;
    // unresolved stencils are reported as skipped; the check needs at least one resolved node
    c.pass = nodes > 0 && tol.accepts(r.value, r.scale);
    c
}

/// A start with `Q ≈ 0` is a documented termination, reported as a one-node trajectory.
fn singular_start(initial: ZetaState, p: &QEParams) -> ZetaTrajectory {
    ZetaTrajectory {
        states: vec![initial],
        params: *p,
        step: 0.0,
        k: x_of(initial.zeta2, initial.zeta3, p).map_or(f64::NAN, |x| -x),
        k_spread: 0.0,
        termination: Termination::QSingular,
    }
}

fn cmd_integrate(a: &IntegrateArgs) -> Result<bool, CliError> {
    let started = Instant::now();
    let np = a.params.apply(NumericParams { m: 2.0, rho: 0.0, lambda: 1.0, c: 1.0, kappa: 1.0 });
    let p = QEParams::new(np.m, np.rho, np.lambda).map_err(classify)?;
    let initial = ZetaState::new(a.s0, a.zeta2, a.zeta3);
    let opts = IntegrateOptions { stop_on_branch: a.stop_on_branch };
    let traj = match integrate_with(initial, a.s_end, a.step, &p, opts) {
        Ok(t) => t,
        Err(Error::QSingular(_)) => singular_start(initial, &p),
        Err(e) => return Err(classify(e)),
    };
    if let Some(path) = &a.csv {
        let f = File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        traj.write_csv(BufWriter::new(f)).map_err(classify)?;
    }

    let start_branch = branch_classify(a.zeta2, a.zeta3, &p, &Tolerance::DEFAULT);
    let singular = traj.termination == Termination::QSingular && traj.states.len() == 1;
    let nodes = traj.states.len();
    let mut checks = Vec::new();
    let mut system = None;
    let mut closed_form = None;
    let mut reconstruction = None;
    let mut exact = false;
    if !singular {
        let r = traj.system_report(&FIRST_ORDER_TOL).map_err(|e| CliError::Runtime(e.into()))?;
        exact = r.compatibility.passes(&EXACT_TOL);
        for (name, rel) in ["radial_curvature", "lambda_balance", "cross_relation"].iter().zip(&r.first_order) {
            checks.push(relation_check(name, rel, nodes, 0, FIRST_ORDER_TOL));
        }
        if nodes >= 5 {
            let (used, skipped) = (nodes - 4 - r.unresolved, r.unresolved);
            checks.push(relation_check("defect_identity", &r.defect_identity, used, skipped, SECOND_ORDER_TOL));
            if exact {
                for (name, rel) in ["second_order_zeta2", "second_order_zeta3"].iter().zip(&r.second_order) {
                    checks.push(relation_check(name, rel, used, skipped, SECOND_ORDER_TOL));
                }
            }
        }
        if start_branch.zeta3_zero && p.big_lambda().is_some() {
            if let Some((case, mismatch)) = traj.fitted_closed_form_mismatch().map_err(classify)? {
                let s = Sample { residual: mismatch, scale: 0.0 };
                let mut c = Check::residual("closed_form", &[s], 0, CLOSED_FORM_TOL);
                c.samples = nodes;
                checks.push(c);
                closed_form = Some(ClosedFormEcho { case, mismatch });
            }
        }
        if exact {
            let s = Sample { residual: traj.k_spread, scale: 0.0 };
            let mut c = Check::residual("k_constant", &[s], 0, Tolerance::new(K_SPREAD_MAX, 0.0));
            c.samples = nodes;
            checks.push(c);
            if nodes >= 2 && traj.k_spread <= K_SPREAD_MAX {
                let rec = reconstruct_warped(&traj).map_err(|e| CliError::Runtime(e.into()))?;
                let stride = (nodes / RECONSTRUCTION_NODES).max(1);
                let samples = rec.node_residuals(&p, stride).map_err(|e| CliError::Runtime(e.into()))?;
                checks.push(Check::residual("reconstruction_qe", &samples, 0, RECONSTRUCTION_TOL));
                reconstruction = Some(ReconstructionEcho { k: rec.k, nodes: rec.nodes.len() });
            }
        }
        system = Some(r);
    }
    let pass = checks.iter().all(|c| c.pass);
    eprintln!("termination {:?}, {} nodes, k spread {:.3e}", traj.termination, nodes, traj.k_spread);
    for c in checks.iter().filter(|c| !c.pass) {
        eprintln!("  {} failed: value {:e}", c.name, c.value);
    }
    let body = IntegrateBody {
        params: p,
        initial_q: q_of(a.zeta2, a.zeta3, &p),
        start_branch,
        termination: traj.termination,
        nodes,
        s_range: traj.s_range(),
        step: traj.step,
        k: traj.k,
        k_spread: traj.k_spread,
        k_constant: traj.k_spread <= K_SPREAD_MAX,
        exact,
        closed_form,
        system,
        reconstruction,
        checks,
    };
    let config = config_json(&IntegrateConfigEcho {
        params: &a.params,
        zeta2: a.zeta2,
        zeta3: a.zeta3,
        s0: a.s0,
        s_end: a.s_end,
        step: a.step,
        stop_on_branch: a.stop_on_branch,
        csv: a.csv.as_ref(),
    });
    emit("integrate", config, body, pass, a.common.out.as_ref(), started)?;
    Ok(pass)
}

// --- identities --------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepEcho {
    m: f64,
    triples: usize,
    first_triple: Vec<f64>,
}

#[derive(Serialize)]
struct IdentitiesBody {
    blocks: Vec<SweepEcho>,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct IdentitiesConfigEcho {
    m_values: Vec<f64>,
    samples: usize,
    seed: u64,
    tolerance: Tolerance,
}

fn cmd_identities(a: &IdentitiesArgs) -> Result<bool, CliError> {
    let started = Instant::now();
    let m_values = a.m.map_or_else(|| SWEEP_M.to_vec(), |m| vec![m]);
    let samples = a.common.samples.unwrap_or(1000);
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let tol = a.common.tolerance(Tolerance::relative(1e-10))?;
    let report = sweep(&m_values, samples, a.common.seed, &tol).map_err(classify)?;
    let mut checks = Vec::new();
    let mut blocks = Vec::new();
    for b in &report.blocks {
        for (name, r) in [("pair_sum", &b.pair_sum), ("alpha_consistency", &b.alpha), ("constructed_f_prime", &b.constructed_f_prime)] {
            checks.push(Check::residual(format!("{name} m={}", b.m), &r.samples, 0, r.tolerance));
        }
        blocks.push(SweepEcho { m: b.m, triples: b.triples, first_triple: b.pair_sum.points[0].clone() });
    }
    let pass = report.pass && checks.iter().all(|c| c.pass);
    for c in &checks {
        eprintln!("{:<28} {}  max {:.3e}", c.name, if c.pass { "pass" } else { "FAIL" }, c.value);
    }
    let config = config_json(&IdentitiesConfigEcho { m_values, samples, seed: a.common.seed, tolerance: tol });
    emit("identities", config, IdentitiesBody { blocks, checks }, pass, a.common.out.as_ref(), started)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Identities(a) => cmd_identities(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
