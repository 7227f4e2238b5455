//! Batch front end: configuration parsing, command dispatch and result files.

pub mod check;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Error;
use crate::functionals::{eval_I, CutoffConfig, ProblemSpec};
use crate::indefinite_space::ErPoint;
use crate::solver::{continuation, estimate_levels, find_branch, newton_solve, seed_schedule, LevelEstimate, NewtonConfig};
use crate::spectral_basis::{Basis, SpectralField};
use crate::theory::{hyperbola_p_at, region_scan, theorem_p_at, RegionStatus};

pub use check::{run_suite, CheckResult};
pub use config::{parse_config, Command, ConfigError, Format, RunConfig};
pub use output::{load_solutions, SolutionRecord, SolutionSet, SCHEMA_VERSION};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io { path: PathBuf, message: String },
    Numeric(Error),
}

impl RunError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Numeric(_) => 1,
            RunError::Io { .. } => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            RunError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numeric(e)
    }
}

/// Summary of one run. Wall time is reported here only, never in files.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Command,
    pub wall_time: Duration,
    pub records: usize,
    pub checks_passed: usize,
    pub checks_failed: usize,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.checks_failed > 0 {
            3
        } else {
            0
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    data: T,
}

#[derive(Serialize)]
struct RegionCsvRow {
    i: usize,
    j: usize,
    #[serde(rename = "N")]
    dim: u32,
    p: f64,
    q: f64,
    hyperbola_gap: f64,
    subcritical: RegionStatus,
    theorem_margin: Option<f64>,
    theorem: Option<RegionStatus>,
    optimal_r: Option<f64>,
    feasible: Option<bool>,
}

#[derive(Serialize)]
struct CurveRow {
    q: f64,
    hyperbola_p: Option<f64>,
    theorem_p: Option<f64>,
}

#[derive(Serialize)]
struct SummaryRow {
    index: usize,
    #[serde(rename = "I")]
    i_value: f64,
    #[serde(rename = "J")]
    j_value: f64,
    residual: f64,
    partner_residual: Option<f64>,
    theta: f64,
    psi: f64,
    potential_bound_holds: bool,
    smallest_a: f64,
    refined_i: Option<f64>,
    refined_rel_change: Option<f64>,
}

impl From<&SolutionRecord> for SummaryRow {
    fn from(r: &SolutionRecord) -> Self {
        Self {
            index: r.index,
            i_value: r.i_value,
            j_value: r.j_value,
            residual: r.residual,
            partner_residual: r.partner_residual,
            theta: r.theta,
            psi: r.psi,
            potential_bound_holds: r.potential_bound_holds,
            smallest_a: r.smallest_a,
            refined_i: r.refined_i,
            refined_rel_change: r.refined_rel_change,
        }
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    files: Vec<PathBuf>,
    notes: Vec<String>,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        output::target(&self.config.output, name)
    }

    fn json<T: Serialize>(&mut self, name: &str, data: T) -> Result<(), RunError> {
        let path = self.path(&format!("{name}.json"));
        output::write_json(
            &path,
            &Envelope {
                schema_version: SCHEMA_VERSION,
                command: self.config.command.as_str(),
                data,
            },
        )?;
        self.files.push(path);
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), RunError> {
        let path = self.path(&format!("{name}.csv"));
        output::write_csv(&path, rows)?;
        self.files.push(path);
        Ok(())
    }

    fn solution_set(&mut self, set: &SolutionSet) -> Result<(), RunError> {
        let path = self.path("solutions.json");
        output::write_json(&path, set)?;
        self.files.push(path);
        if self.config.format == Format::Csv {
            let rows: Vec<SummaryRow> = set.records.iter().map(SummaryRow::from).collect();
            let name = self.config.command.as_str().to_string();
            self.csv(&name, &rows)?;
        }
        Ok(())
    }
}

fn cutoff_for(config: &RunConfig, spec: &ProblemSpec) -> Result<CutoffConfig, RunError> {
    match config.problem.as_ref().and_then(|p| p.cutoff_a) {
        Some(a) => Ok(CutoffConfig::new(a)?),
        None => Ok(CutoffConfig::for_problem(spec)),
    }
}

fn problem(config: &RunConfig) -> &ProblemSpec {
    &config.problem.as_ref().expect("validated config carries a problem").spec
}

fn empty_set(config: &RunConfig, spec: &ProblemSpec, cutoff: &CutoffConfig) -> SolutionSet {
    SolutionSet {
        schema_version: SCHEMA_VERSION,
        command: config.command.as_str().into(),
        basis: output::BasisDescriptor::of(spec),
        h: spec.h().coeffs().to_vec(),
        k: spec.k().coeffs().to_vec(),
        cutoff_a: cutoff.a,
        exhausted: false,
        note: None,
        records: Vec::new(),
    }
}

/// Re-solves on twice as many modes and reports the new `I`.
fn refine(z: &ErPoint, spec: &ProblemSpec, newton: &NewtonConfig) -> crate::Result<Option<f64>> {
    let fine = Basis::new(spec.basis().domain().clone(), 2 * spec.n())?;
    let fine_spec = spec.on_basis(&fine)?;
    let rep = newton_solve(&z.transfer(&fine)?, &fine_spec, newton, None)?;
    rep.converged.then(|| eval_I(&rep.z, &fine_spec)).transpose()
}

fn attach_refinement(rec: &mut SolutionRecord, z: &ErPoint, spec: &ProblemSpec, newton: &NewtonConfig) -> crate::Result<()> {
    if let Some(fine) = refine(z, spec, newton)? {
        rec.refined_i = Some(fine);
        rec.refined_rel_change = Some((fine - rec.i_value).abs() / rec.i_value.abs().max(f64::MIN_POSITIVE));
    }
    Ok(())
}

fn run_region(ctx: &mut Ctx) -> Result<usize, RunError> {
    let reg = ctx.config.region.as_ref().expect("validated region data");
    let rows = region_scan(reg.dim, &reg.p_grid, &reg.q_grid)?;
    let nf = reg.dim as f64;
    let curves: Vec<CurveRow> = std::iter::once(1.0)
        .chain(reg.q_grid.iter().copied())
        .map(|q| CurveRow {
            q,
            hyperbola_p: (reg.dim > 2).then(|| hyperbola_p_at(q, nf)).flatten(),
            theorem_p: (reg.dim > 2).then(|| theorem_p_at(q, nf)).flatten(),
        })
        .collect();
    let table: Vec<RegionCsvRow> = rows
        .iter()
        .map(|r| RegionCsvRow {
            i: r.i,
            j: r.j,
            dim: reg.dim,
            p: r.p,
            q: r.q,
            hyperbola_gap: r.hyperbola_gap,
            subcritical: r.subcritical,
            theorem_margin: r.theorem_margin,
            theorem: r.theorem,
            optimal_r: r.optimal_r,
            feasible: r.feasible,
        })
        .collect();
    match ctx.config.format {
        Format::Csv => {
            ctx.csv("region", &table)?;
            ctx.csv("curves", &curves)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Data<'a> {
                #[serde(rename = "N")]
                dim: u32,
                rows: &'a [RegionCsvRow],
                curves: &'a [CurveRow],
            }
            ctx.json(
                "region",
                Data {
                    dim: reg.dim,
                    rows: &table,
                    curves: &curves,
                },
            )?;
        }
    }
    Ok(table.len())
}

fn run_solve(ctx: &mut Ctx) -> Result<usize, RunError> {
    let cfg = ctx.config;
    let spec = problem(cfg);
    let cutoff = cutoff_for(cfg, spec)?;
    let phi = SpectralField::mode(spec.basis().clone(), cfg.seed_mode)?;
    let seed = ErPoint::new(phi.scale(cfg.seed_scale), phi.scale(cfg.seed_sign * cfg.seed_scale), spec.r())?;
    let symmetric = spec.scaled_forcing(0.0);
    let first = newton_solve(&seed, &symmetric, &cfg.newton, None)?;
    let (z, converged, note) = if !first.converged {
        (first.z, false, Some(format!("Newton stopped ({:?}) at residual {}", first.stop, first.residual)))
    } else if spec.is_unforced() {
        (first.z, true, None)
    } else {
        let c = continuation(&first.z, spec, cfg.continuation_steps, &cfg.newton)?;
        let note = (!c.converged).then(|| format!("continuation reached t = {}", c.reached_t));
        (c.z, c.converged, note)
    };
    let mut set = empty_set(cfg, spec, &cutoff);
    let mut rec = output::describe(0, &z, spec, &cutoff)?;
    if converged && cfg.mesh_check {
        attach_refinement(&mut rec, &z, spec, &cfg.newton)?;
    }
    set.records.push(rec);
    set.exhausted = !converged;
    if let Some(n) = &note {
        ctx.notes.push(n.clone());
    }
    set.note = note;
    ctx.solution_set(&set)?;
    Ok(1)
}

fn run_branch(ctx: &mut Ctx) -> Result<usize, RunError> {
    let cfg = ctx.config;
    let spec = problem(cfg);
    let cutoff = cutoff_for(cfg, spec)?;
    let seeds = seed_schedule(spec, cfg.branch.max_mode)?;
    let branch = find_branch(spec, &seeds, cfg.count, &cfg.branch)?;
    let mut set = empty_set(cfg, spec, &cutoff);
    set.exhausted = branch.exhausted;
    set.note = branch.note.clone();
    if let Some(n) = &branch.note {
        ctx.notes.push(n.clone());
    }
    for (i, r) in branch.records.iter().enumerate() {
        let mut rec = output::describe(i, &r.z, spec, &cutoff)?;
        rec.partner_residual = r.partner.as_ref().map(|p| p.residual);
        if cfg.mesh_check {
            attach_refinement(&mut rec, &r.z, spec, &cfg.newton)?;
        }
        set.records.push(rec);
    }
    ctx.solution_set(&set)?;
    Ok(set.records.len())
}

fn run_levels(ctx: &mut Ctx) -> Result<usize, RunError> {
    let cfg = ctx.config;
    let spec = problem(cfg);
    let cutoff = cutoff_for(cfg, spec)?;
    let est: LevelEstimate = estimate_levels(spec, &cutoff, cfg.k_max, cfg.samples, cfg.seed)?;
    match cfg.format {
        Format::Csv => ctx.csv("levels", &est.brackets)?,
        Format::Json => ctx.json("levels", &est)?,
    }
    Ok(est.brackets.len())
}

fn run_check(ctx: &mut Ctx) -> Result<(usize, usize), RunError> {
    let results = run_suite(ctx.config.seed)?;
    match ctx.config.format {
        Format::Csv => ctx.csv("check", &results)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Data<'a> {
                passed: usize,
                failed: usize,
                checks: &'a [CheckResult],
            }
            let passed = results.iter().filter(|r| r.passed).count();
            ctx.json(
                "check",
                Data {
                    passed,
                    failed: results.len() - passed,
                    checks: &results,
                },
            )?;
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    Ok((passed, results.len() - passed))
}

/// Dispatches one validated configuration and writes its output files.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut ctx = Ctx {
        config,
        files: Vec::new(),
        notes: Vec::new(),
    };
    let (mut passed, mut failed) = (0, 0);
    let records = match config.command {
        Command::Region => run_region(&mut ctx)?,
        Command::Solve => run_solve(&mut ctx)?,
        Command::Branch => run_branch(&mut ctx)?,
        Command::Levels => run_levels(&mut ctx)?,
        Command::Check => {
            (passed, failed) = run_check(&mut ctx)?;
            passed + failed
        }
    };
    Ok(RunReport {
        command: config.command,
        wall_time: start.elapsed(),
        records,
        checks_passed: passed,
        checks_failed: failed,
        files: ctx.files,
        notes: ctx.notes,
    })
}
