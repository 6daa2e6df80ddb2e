//! Front end for `ddlab-core`: configuration, subcommand dispatch and artifact writers.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 inadmissible,
//! 3 inconclusive, 4 state blow-up, 5 boundary contamination, 6 identity failure.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use ddlab_core::admissibility::{check, Verdict};
use ddlab_core::augmentation::{AugmentationSpec, Variables};
use ddlab_core::diagnostics::{
    classify_shock, flux_gap_decay, identity_residual, measure_estimate, EpsSample, FluxGapDecay, IdentityReport,
    ManufacturedField, MeasureEstimate, ShockOptions, ShockReport, IDENTITY_TOL,
};
use ddlab_core::expr::Expr;
use ddlab_core::solver::{riemann_run, run, Boundary, Grid1D, RunDiagnostics, RunResult, SolverConfig};
use ddlab_core::systems::{EntropyMap, HyperbolicSystem};
use rayon::prelude::*;
use serde::Serialize;

use config::{parse_expr, InitialSection, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INADMISSIBLE: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_BLOWUP: u8 = 4;
pub const EXIT_CONTAMINATION: u8 = 5;
pub const EXIT_IDENTITY: u8 = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ddlab_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ddlab_core::Error::StateBlowup { .. }) => EXIT_BLOWUP,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Run,
    Sweep,
    Identity,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

struct Ctx {
    out: PathBuf,
    quiet: bool,
    seed: Option<u64>,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("warning: {}", msg.as_ref());
        }
    }
}

/// Runs one subcommand and returns its exit code; errors are reported on stderr.
pub fn execute(cmd: Command, opts: &Options) -> u8 {
    match try_execute(cmd, opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn try_execute(cmd: Command, opts: &Options) -> Result<u8, CliError> {
    let cfg = RunConfig::load(&opts.config)?;
    let out = opts.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("ddlab_out"));
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx { out, quiet: opts.quiet, seed: opts.seed };
    match cmd {
        Command::Check => cmd_check(&cfg, &ctx),
        Command::Run => cmd_run(&cfg, &ctx),
        Command::Sweep => cmd_sweep(&cfg, &ctx),
        Command::Identity => cmd_identity(&cfg, &ctx),
    }
}

fn cmd_check(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let system = cfg.system()?;
    let spec = cfg.augmentation(system.dim())?;
    spec.check_system(&system)?;
    let report = check(&spec, &cfg.check_options(&system, ctx.seed)?)?;
    output::write_json(&ctx.out.join("report.json"), &report)?;
    ctx.say(format!("{}: {:?}", spec.name(), report.verdict));
    for c in report.failed() {
        ctx.say(format!("  failed {}: {}", c.name, c.witness.as_ref().map_or(String::new(), |w| format!("{w:?}"))));
    }
    Ok(match report.verdict {
        Verdict::Admissible => EXIT_OK,
        Verdict::Inadmissible => EXIT_INADMISSIBLE,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub model: String,
    pub variant: String,
    pub eps: f64,
    pub xi: Option<f64>,
    pub n_cells: usize,
    pub dx: f64,
    pub resolved: bool,
    pub status: String,
    pub steps: usize,
    pub t_final: f64,
    pub entropy_initial: f64,
    pub entropy_final: f64,
    /// Time integral of the dissipation rate over the recorded history.
    pub dissipation_total: f64,
    pub mass_initial: Vec<f64>,
    pub mass_final: Vec<f64>,
    pub boundary_contamination: bool,
    pub contamination_level: Option<f64>,
    pub shock: Option<ShockReport>,
    pub shock_note: Option<String>,
}

fn summarize(diag: &RunDiagnostics) -> (f64, f64, f64, Vec<f64>, Vec<f64>) {
    let r = &diag.records;
    let total = r.windows(2).map(|w| 0.5 * (w[0].dissipation + w[1].dissipation) * (w[1].t - w[0].t)).sum();
    match (r.first(), r.last()) {
        (Some(a), Some(b)) => (a.entropy, b.entropy, total, a.mass.clone(), b.mass.clone()),
        _ => (f64::NAN, f64::NAN, 0.0, vec![], vec![]),
    }
}

/// Outcome of one solver run, with its artifacts already on disk.
struct RunOutcome {
    code: u8,
    summary: RunSummary,
    result: Option<RunResult>,
}

struct RunSetup<'a> {
    system: &'a HyperbolicSystem,
    spec: &'a AugmentationSpec,
    grid: Grid1D,
    solver: SolverConfig,
    initial: &'a InitialSection,
    xi: Option<f64>,
}

fn initial_fn(initial: &InitialSection, grid: &Grid1D, dim: usize) -> Result<Box<dyn Fn(f64) -> Vec<f64> + Sync>, CliError> {
    match initial {
        InitialSection::Sine { offset, amplitude, wavenumber } => {
            let (lo, len) = (grid.x_lo, grid.length());
            let (o, a, k) = (*offset, *amplitude, *wavenumber as f64);
            Ok(Box::new(move |x| vec![o + a * (2.0 * std::f64::consts::PI * k * (x - lo) / len).sin(); dim]))
        }
        InitialSection::Expression { u } => {
            if u.len() != dim {
                return Err(CliError::Config(format!("initial.u: expected {dim} expressions, got {}", u.len())));
            }
            let exprs = u.iter().enumerate().map(|(i, s)| parse_expr(&format!("initial.u[{i}]"), s)).collect::<Result<Vec<_>, _>>()?;
            Ok(Box::new(move |x| exprs.iter().map(|e| e.eval_x(x)).collect()))
        }
        InitialSection::Riemann { .. } => Err(CliError::Config("initial: Riemann data has no pointwise form".into())),
    }
}

fn execute_run(setup: &RunSetup, dir: &Path, ctx: &Ctx, run_id: &str) -> Result<RunOutcome, CliError> {
    std::fs::create_dir_all(dir)?;
    let map = EntropyMap::new(setup.system.clone());
    let grid = &setup.grid;
    let dim = setup.system.dim();
    if grid.dx() > setup.spec.eps / 8.0 {
        ctx.warn(format!("{run_id}: dx = {:e} exceeds eps/8 = {:e}; the regularization is under-resolved", grid.dx(), setup.spec.eps / 8.0));
    }
    let result = match setup.initial {
        InitialSection::Riemann { left, right } => {
            if left.len() != dim || right.len() != dim {
                return Err(CliError::Config(format!("initial: left and right need {dim} entries")));
            }
            if grid.boundary != Boundary::Outflow {
                return Err(CliError::Config("grid.boundary: Riemann data needs outflow boundaries".into()));
            }
            riemann_run(&map, setup.spec, grid, &setup.solver, left, right)
        }
        other => {
            let f = initial_fn(other, grid, dim)?;
            run(&map, setup.spec, grid, &setup.solver, &f)
        }
    };
    let mut summary = RunSummary {
        run_id: run_id.to_string(),
        model: setup.system.name.clone(),
        variant: setup.spec.name().to_string(),
        eps: setup.spec.eps,
        xi: setup.xi,
        n_cells: grid.n_cells,
        dx: grid.dx(),
        resolved: grid.dx() <= setup.spec.eps / 8.0,
        status: "ok".into(),
        steps: 0,
        t_final: 0.0,
        entropy_initial: f64::NAN,
        entropy_final: f64::NAN,
        dissipation_total: 0.0,
        mass_initial: vec![],
        mass_final: vec![],
        boundary_contamination: false,
        contamination_level: None,
        shock: None,
        shock_note: None,
    };
    let res = match result {
        Ok(r) => r,
        Err(ddlab_core::Error::StateBlowup { t, partial }) | Err(ddlab_core::Error::NonFiniteDiagnostic { t, partial }) => {
            output::write_diagnostics(&dir.join("diagnostics.csv"), &partial, dim)?;
            let (e0, e1, total, m0, m1) = summarize(&partial);
            summary.status = "blowup".into();
            summary.steps = partial.steps;
            summary.t_final = t;
            (summary.entropy_initial, summary.entropy_final, summary.dissipation_total) = (e0, e1, total);
            (summary.mass_initial, summary.mass_final) = (m0, m1);
            output::write_json(&dir.join("summary.json"), &summary)?;
            ctx.warn(format!("{run_id}: state blow-up at t = {t}"));
            return Ok(RunOutcome { code: EXIT_BLOWUP, summary, result: None });
        }
        Err(e) => return Err(e.into()),
    };
    let d = &res.diagnostics;
    for (step, state) in [(0, &res.initial), (d.snapshot_step, &res.snapshot), (d.steps, &res.final_state)] {
        output::write_fields(&dir.join(format!("fields_{step}.csv")), grid, state, &map)?;
    }
    output::write_diagnostics(&dir.join("diagnostics.csv"), &res.diagnostics, dim)?;
    let (e0, e1, total, m0, m1) = summarize(&res.diagnostics);
    summary.steps = res.diagnostics.steps;
    summary.t_final = res.final_state.t;
    (summary.entropy_initial, summary.entropy_final, summary.dissipation_total) = (e0, e1, total);
    (summary.mass_initial, summary.mass_final) = (m0, m1);
    summary.boundary_contamination = res.diagnostics.boundary_contamination;
    summary.contamination_level = res.diagnostics.contamination_level;
    if matches!(setup.initial, InitialSection::Riemann { .. }) {
        match classify_shock(setup.system, grid, &res.snapshot, &res.final_state, &ShockOptions::default()) {
            Ok(r) => summary.shock = Some(r),
            Err(e) => summary.shock_note = Some(e.to_string()),
        }
    }
    let code = if summary.boundary_contamination {
        summary.status = "boundary_contamination".into();
        ctx.warn(format!("{run_id}: boundary contamination {:e}", summary.contamination_level.unwrap_or(f64::NAN)));
        EXIT_CONTAMINATION
    } else {
        EXIT_OK
    };
    output::write_json(&dir.join("summary.json"), &summary)?;
    Ok(RunOutcome { code, summary, result: Some(res) })
}

fn cmd_run(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let eps = cfg.eps.ok_or_else(|| CliError::Config("eps: the run subcommand needs a single eps".into()))?;
    let system = cfg.system()?;
    let spec = cfg.augmentation_with(system.dim(), eps, cfg.xi)?;
    spec.check_system(&system)?;
    let initial = cfg.initial.as_ref().ok_or_else(|| CliError::Config("initial: section is required".into()))?;
    let setup = RunSetup { system: &system, spec: &spec, grid: cfg.grid()?, solver: cfg.solver()?, initial, xi: cfg.xi };
    let outcome = execute_run(&setup, &ctx.out.join("run"), ctx, "run")?;
    // mirror the summary at the top level for convenience
    output::write_json(&ctx.out.join("summary.json"), &outcome.summary)?;
    ctx.say(format!("run: {} after {} steps, entropy {:.6e} -> {:.6e}", outcome.summary.status, outcome.summary.steps, outcome.summary.entropy_initial, outcome.summary.entropy_final));
    Ok(outcome.code)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub model: String,
    pub variant: String,
    pub theta: String,
    pub runs: Vec<RunSummary>,
    pub measure: Option<MeasureEstimate>,
    pub flux_gap: Option<FluxGapDecay>,
    pub note: Option<String>,
}

fn cmd_sweep(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let system = cfg.system()?;
    let initial = cfg.initial.as_ref().ok_or_else(|| CliError::Config("initial: section is required".into()))?;
    let base_grid = cfg.grid()?;
    let solver = cfg.solver()?;
    let theta_src = cfg.sweep.theta.clone().unwrap_or_else(|| "exp(-x^2)".into());
    let theta = parse_expr("sweep.theta", &theta_src)?;
    if theta.variables().iter().any(|v| *v != ddlab_core::expr::Var::X) {
        return Err(CliError::Config("sweep.theta: the test function may only depend on x".into()));
    }
    let cells_per_eps = cfg.sweep.cells_per_eps.unwrap_or(8.0);

    // (run id, eps, xi) per member
    let members: Vec<(String, f64, Option<f64>)> = if let Some(xis) = &cfg.xi_sequence {
        let eps = cfg.eps.ok_or_else(|| CliError::Config("xi_sequence: needs a single eps".into()))?;
        xis.iter().enumerate().map(|(k, &xi)| (format!("xi_{k}"), eps, Some(xi))).collect()
    } else {
        let seq = cfg.eps_sequence.as_ref().ok_or_else(|| CliError::Config("eps_sequence: required by the sweep subcommand".into()))?;
        if seq.len() < 3 {
            return Err(CliError::Config(format!("eps_sequence: needs at least 3 entries, got {}", seq.len())));
        }
        if seq.windows(2).any(|w| w[1] >= w[0]) || seq.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Config("eps_sequence: must be positive and strictly decreasing".into()));
        }
        seq.iter().enumerate().map(|(k, &e)| (format!("eps_{k}"), e, cfg.xi)).collect()
    };
    let specs = members.iter().map(|(_, eps, xi)| cfg.augmentation_with(system.dim(), *eps, *xi)).collect::<Result<Vec<_>, _>>()?;
    for s in &specs {
        s.check_system(&system)?;
    }
    let outcomes: Vec<Result<RunOutcome, CliError>> = members
        .par_iter()
        .zip(&specs)
        .map(|((id, eps, xi), spec)| {
            let needed = (base_grid.length() * cells_per_eps / eps).ceil() as usize;
            let grid = Grid1D::new(base_grid.x_lo, base_grid.x_hi, base_grid.n_cells.max(needed), base_grid.boundary)?;
            let setup = RunSetup { system: &system, spec, grid, solver: solver.clone(), initial, xi: *xi };
            execute_run(&setup, &ctx.out.join(id), ctx, id)
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let code = outcomes.iter().map(|o| o.code).find(|&c| c != EXIT_OK).unwrap_or(EXIT_OK);

    let mut report = SweepReport {
        model: system.name.clone(),
        variant: specs[0].name().to_string(),
        theta: theta_src,
        runs: outcomes.iter().map(|o| o.summary.clone()).collect(),
        measure: None,
        flux_gap: None,
        note: None,
    };
    if cfg.xi_sequence.is_some() {
        report.note = Some("balance-ratio family at fixed eps: shock reports only".into());
    } else if outcomes.iter().any(|o| o.result.is_none()) {
        report.note = Some("measure and flux-gap estimates skipped: a run did not complete".into());
    } else {
        let map = EntropyMap::new(system.clone());
        let samples: Vec<EpsSample> = outcomes
            .iter()
            .zip(&members)
            .map(|(o, (_, eps, _))| {
                let res = o.result.as_ref().expect("completed run");
                let grid = Grid1D::new(base_grid.x_lo, base_grid.x_hi, res.snapshot.n_cells(), base_grid.boundary)?;
                let w = match specs[0].variables() {
                    Variables::Entropy => res.snapshot.entropy_variables(&map),
                    Variables::Conservative => res.snapshot.u.clone(),
                };
                Ok(EpsSample::from_state(*eps, grid, &res.snapshot, w))
            })
            .collect::<Result<_, CliError>>()?;
        report.measure = Some(measure_estimate(&specs[0], &samples, &theta, cfg.sweep.eps_factor.unwrap_or(true))?);
        report.flux_gap = Some(flux_gap_decay(&specs[0], &samples, &theta)?);
    }
    output::write_json(&ctx.out.join("sweep.json"), &report)?;
    if let Some(m) = &report.measure {
        ctx.say(format!("sweep: measure margin {:.6e}, extrapolated {:.6e}", m.margin, m.extrapolated));
    }
    for r in &report.runs {
        if let Some(s) = &r.shock {
            ctx.say(format!("  {}: {:?} shock, speed {:.6} (RH {:.6})", r.run_id, s.classification, s.measured_speed, s.rh_speed));
        }
    }
    Ok(code)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    #[serde(flatten)]
    pub report: IdentityReport,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityOutput {
    pub model: String,
    pub variant: String,
    pub eps: f64,
    pub threshold: f64,
    pub stencil_order: usize,
    pub n: usize,
    pub dispersive_flux_form: ddlab_core::diagnostics::DispersiveFluxForm,
    pub fields: Vec<IdentityRow>,
    pub passed: bool,
}

fn cmd_identity(cfg: &RunConfig, ctx: &Ctx) -> Result<u8, CliError> {
    let system = cfg.system()?;
    let dim = system.dim();
    let spec = cfg.augmentation(dim)?;
    let form = cfg.augmentation.as_ref().map(|a| a.dispersive_flux_form).unwrap_or_default();
    let n = cfg.identity.n.unwrap_or(64);
    let order = cfg.identity.stencil_order.unwrap_or(2);
    let mut fields = ManufacturedField::stock(dim);
    fields.push(ManufacturedField::constant(dim, 0.3));
    if let Some(src) = &cfg.identity.field {
        let exprs = src.iter().enumerate().map(|(i, s)| parse_expr(&format!("identity.field[{i}]"), s)).collect::<Result<Vec<Expr>, _>>()?;
        let [a, b] = cfg.identity.domain.unwrap_or([-1.0, 1.0]);
        fields.push(ManufacturedField::new("user", exprs, (a, b)).map_err(|e| CliError::Config(format!("identity.field: {e}")))?);
    }
    let mut rows = Vec::new();
    for f in &fields {
        let r = identity_residual(&system, &spec, f, n, order, form)?;
        let order_ok = r.order.is_none_or(|o| o >= order as f64 - 0.2);
        let passed = r.analytic_residual < IDENTITY_TOL && order_ok;
        rows.push(IdentityRow { report: r, passed });
    }
    let passed = rows.iter().all(|r| r.passed);
    let out = IdentityOutput {
        model: system.name.clone(),
        variant: spec.name().to_string(),
        eps: spec.eps,
        threshold: IDENTITY_TOL,
        stencil_order: order,
        n,
        dispersive_flux_form: form,
        fields: rows,
        passed,
    };
    output::write_json(&ctx.out.join("identity.json"), &out)?;
    if passed {
        ctx.say(format!("identity: all {} fields pass", out.fields.len()));
        Ok(EXIT_OK)
    } else {
        let worst = out.fields.iter().max_by(|a, b| a.report.analytic_residual.total_cmp(&b.report.analytic_residual)).expect("fields");
        eprintln!(
            "identity failure: worst residual {:.3e} on field '{}' at x = {:.6}",
            worst.report.analytic_residual, worst.report.field, worst.report.worst_x
        );
        Ok(EXIT_IDENTITY)
    }
}
