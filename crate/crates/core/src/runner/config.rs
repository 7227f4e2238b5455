use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::functionals::ProblemSpec;
use crate::solver::{BranchConfig, NewtonConfig};
use crate::spectral_basis::{Basis, BoxDomain, SpectralField};
use crate::theory::{embedding_r_bounds, PQPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Region,
    Solve,
    Branch,
    Levels,
    Check,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Solve => "solve",
            Command::Branch => "branch",
            Command::Levels => "levels",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A box side: a number or an expression such as `"pi"`, `"2pi"`, `"pi/2"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Number(f64),
    Text(String),
}

impl Length {
    fn value(&self) -> Option<f64> {
        match self {
            Length::Number(x) => Some(*x),
            Length::Text(s) => parse_length(s),
        }
    }
}

fn parse_length(s: &str) -> Option<f64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_lowercase();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim_end_matches('*');
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    Some(coef * PI / den)
}

/// Explicit list or arithmetic range `start, start + step, … ≤ stop`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

const MAX_GRID: usize = 1_000_000;

impl GridSpec {
    fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            GridSpec::List(v) => {
                if v.is_empty() {
                    return Err("grid is empty".into());
                }
                Ok(v.clone())
            }
            GridSpec::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err("range bounds must be finite".into());
                }
                if *step <= 0.0 {
                    return Err(format!("step must be positive, got {step}"));
                }
                if stop < start {
                    return Err(format!("stop {stop} is below start {start}"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > MAX_GRID {
                    return Err(format!("range has {count} points, limit is {MAX_GRID}"));
                }
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// Optional overrides of the solver defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub min_step: Option<f64>,
    pub separation: Option<f64>,
    pub max_mode: Option<usize>,
    pub attempts_per_seed: Option<usize>,
}

/// The configuration document as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub dim: Option<u32>,
    pub p_grid: Option<GridSpec>,
    pub q_grid: Option<GridSpec>,
    pub domain: Option<Vec<Length>>,
    pub n: Option<usize>,
    pub oversample: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub h: Option<Vec<f64>>,
    pub k: Option<Vec<f64>>,
    pub cutoff_a: Option<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    pub count: Option<usize>,
    pub seed_mode: Option<usize>,
    pub seed_scale: Option<f64>,
    pub seed_sign: Option<i8>,
    pub continuation_steps: Option<usize>,
    pub mesh_check: Option<bool>,
    pub k_max: Option<usize>,
    pub samples: Option<usize>,
    pub output: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

/// Problem data after validation.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub spec: ProblemSpec,
    pub cutoff_a: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RegionData {
    pub dim: u32,
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: Option<ProblemData>,
    pub region: Option<RegionData>,
    pub newton: NewtonConfig,
    pub branch: BranchConfig,
    pub count: usize,
    pub seed_mode: usize,
    pub seed_scale: f64,
    pub seed_sign: f64,
    pub continuation_steps: usize,
    pub mesh_check: bool,
    pub k_max: usize,
    pub samples: usize,
    pub output: String,
    pub format: Format,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every problem found while parsing one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.errors.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", lines.join("; "))
    }
}

impl std::error::Error for ConfigError {}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }
}

pub const DEFAULT_N: usize = 32;

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError {
            errors: vec![FieldError {
                field: if path == "." { "(document)".into() } else { path },
                message: e.into_inner().to_string(),
            }],
        }
    })?;
    validate(raw)
}

fn exponent_ok(errs: &mut Errors, name: &str, v: Option<f64>) -> Option<f64> {
    match v {
        None => {
            errs.push(name, "required for this command");
            None
        }
        Some(x) if !(x.is_finite() && x > 1.0) => {
            errs.push(name, format!("must satisfy {name} > 1, got {x}"));
            None
        }
        Some(x) => Some(x),
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mut errs = Errors(Vec::new());
    let cmd = raw.command;

    let region = if cmd == Command::Region {
        let dim = raw.dim.unwrap_or_else(|| {
            errs.push("N", "required for the region command");
            0
        });
        if raw.dim == Some(0) {
            errs.push("N", "must be at least 1");
        }
        let mut grid = |name: &str, g: &Option<GridSpec>| -> Vec<f64> {
            match g {
                None => {
                    errs.push(name, "required for the region command");
                    Vec::new()
                }
                Some(g) => match g.values() {
                    Err(m) => {
                        errs.push(name, m);
                        Vec::new()
                    }
                    Ok(v) => {
                        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 1.0)) {
                            errs.push(name, format!("every value must be > 1, found {bad}"));
                        }
                        v
                    }
                },
            }
        };
        let p_grid = grid("p_grid", &raw.p_grid);
        let q_grid = grid("q_grid", &raw.q_grid);
        Some(RegionData { dim, p_grid, q_grid })
    } else {
        None
    };

    let needs_problem = matches!(cmd, Command::Solve | Command::Branch | Command::Levels);
    let problem = if needs_problem {
        problem_data(&raw, &mut errs)
    } else {
        None
    };

    let defaults = NewtonConfig::default();
    let s = &raw.solver;
    let newton = NewtonConfig {
        tol: s.tol.unwrap_or(defaults.tol),
        max_iter: s.max_iter.unwrap_or(defaults.max_iter),
        damping: s.damping.unwrap_or(defaults.damping),
        min_step: s.min_step.unwrap_or(defaults.min_step),
    };
    if let Err(e) = newton.validate() {
        let field = if !(newton.tol > 0.0 && newton.tol.is_finite()) {
            "solver.tol"
        } else if !(newton.damping > 0.0 && newton.damping < 1.0) {
            "solver.damping"
        } else {
            "solver.min_step"
        };
        errs.push(field, e.to_string());
    }
    let bd = BranchConfig::default();
    let branch = BranchConfig {
        newton,
        separation: s.separation.unwrap_or(bd.separation),
        max_mode: s.max_mode.unwrap_or(bd.max_mode),
        attempts_per_seed: s.attempts_per_seed.unwrap_or(bd.attempts_per_seed),
    };
    if !(branch.separation > 0.0 && branch.separation.is_finite()) {
        errs.push("solver.separation", "must be positive");
    }
    if branch.max_mode == 0 {
        errs.push("solver.max_mode", "must be at least 1");
    }
    if branch.attempts_per_seed == 0 {
        errs.push("solver.attempts_per_seed", "must be at least 1");
    }

    let n = problem.as_ref().map_or(usize::MAX, |p| p.spec.n());
    let count = raw.count.unwrap_or(3);
    if count == 0 {
        errs.push("count", "must be at least 1");
    }
    let seed_mode = raw.seed_mode.unwrap_or(1);
    if seed_mode == 0 || seed_mode > n {
        errs.push("seed_mode", format!("must lie in 1..={n}"));
    }
    let seed_scale = raw.seed_scale.unwrap_or(2.0);
    if !seed_scale.is_finite() {
        errs.push("seed_scale", "must be finite");
    }
    let seed_sign = match raw.seed_sign.unwrap_or(1) {
        1 => 1.0,
        -1 => -1.0,
        other => {
            errs.push("seed_sign", format!("must be 1 or -1, got {other}"));
            1.0
        }
    };
    let continuation_steps = raw.continuation_steps.unwrap_or(5);
    if continuation_steps == 0 {
        errs.push("continuation_steps", "must be at least 1");
    }
    let k_max = raw.k_max.unwrap_or(5);
    if k_max == 0 || k_max > n {
        errs.push("k_max", format!("must lie in 1..={n}"));
    }
    let samples = raw.samples.unwrap_or(2000);
    if samples == 0 {
        errs.push("samples", "must be at least 1");
    }

    if !errs.0.is_empty() {
        return Err(ConfigError { errors: errs.0 });
    }
    Ok(RunConfig {
        command: cmd,
        problem,
        region,
        newton,
        branch,
        count,
        seed_mode,
        seed_scale,
        seed_sign,
        continuation_steps,
        mesh_check: raw.mesh_check.unwrap_or(true),
        k_max,
        samples,
        output: raw.output.unwrap_or_default(),
        format: raw.format.unwrap_or_default(),
        seed: raw.seed.unwrap_or(0),
    })
}

fn problem_data(raw: &RawConfig, errs: &mut Errors) -> Option<ProblemData> {
    let p = exponent_ok(errs, "p", raw.p);
    let q = exponent_ok(errs, "q", raw.q);
    let r = match raw.r {
        None => {
            errs.push("r", "required for this command");
            None
        }
        Some(r) if !(r > 0.0 && r < 2.0) => {
            errs.push("r", format!("must satisfy 0 < r < 2, got {r}"));
            None
        }
        Some(r) => Some(r),
    };
    let lengths: Vec<f64> = match &raw.domain {
        None => vec![PI],
        Some(ls) => {
            let mut out = Vec::new();
            for (i, l) in ls.iter().enumerate() {
                match l.value() {
                    Some(x) if x.is_finite() && x > 0.0 => out.push(x),
                    _ => errs.push(&format!("domain[{i}]"), format!("not a positive length: {l:?}")),
                }
            }
            if ls.is_empty() {
                errs.push("domain", "needs at least one side length");
            }
            out
        }
    };
    let n = raw.n.unwrap_or(DEFAULT_N);
    if n < 4 {
        errs.push("n", format!("must be at least 4, got {n}"));
    }
    let oversample = raw.oversample.unwrap_or(crate::spectral_basis::DEFAULT_OVERSAMPLE);
    if oversample == 0 {
        errs.push("oversample", "must be at least 1");
    }
    if let Some(a) = raw.cutoff_a {
        if !(a.is_finite() && a > 0.0) {
            errs.push("cutoff_a", format!("must be positive, got {a}"));
        }
    }
    let dim = lengths.len();
    if let (Some(p), Some(q), Some(r)) = (p, q, r) {
        if dim >= 3 {
            let pt = PQPoint::new(p, q, dim as u32).expect("exponents checked");
            let iv = embedding_r_bounds(&pt);
            if !iv.contains(r) {
                errs.push(
                    "r",
                    format!(
                        "r = {r} lies outside the admissible interval ({}, {}) for p = {p}, q = {q}, N = {dim}",
                        iv.lo, iv.hi
                    ),
                );
            }
        }
    }
    for (name, f) in [("h", &raw.h), ("k", &raw.k)] {
        if let Some(c) = f {
            if c.len() > n {
                errs.push(name, format!("has {} coefficients, basis has {n}", c.len()));
            }
            if let Some(i) = c.iter().position(|x| !x.is_finite()) {
                errs.push(&format!("{name}[{i}]"), "must be finite");
            }
        }
    }
    if !errs.0.is_empty() {
        return None;
    }
    let (p, q, r) = (p?, q?, r?);
    let build = || -> crate::Result<ProblemSpec> {
        let basis = Basis::new(BoxDomain::new(lengths.clone())?, n)?;
        let field = |c: &Option<Vec<f64>>| -> crate::Result<SpectralField> {
            let mut v = c.clone().unwrap_or_default();
            v.resize(n, 0.0);
            SpectralField::new(basis.clone(), v)
        };
        ProblemSpec::new(basis.clone(), p, q, r, field(&raw.h)?, field(&raw.k)?)?.with_oversample(oversample)
    };
    match build() {
        Ok(spec) => Some(ProblemData {
            spec,
            cutoff_a: raw.cutoff_a,
        }),
        Err(e) => {
            errs.push("problem", e.to_string());
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_region_config() {
        let c = parse_config(
            r#"{"command": "region", "N": 6,
                "p_grid": {"start": 1.05, "stop": 6.0, "step": 0.05},
                "q_grid": [1.05, 1.5, 2.0]}"#,
        )
        .unwrap();
        let reg = c.region.unwrap();
        assert_eq!(reg.dim, 6);
        assert_eq!(reg.p_grid.len(), 100);
        assert!((reg.p_grid[99] - 6.0).abs() < 1e-12);
        assert_eq!(c.format, Format::Csv);
    }

    #[test]
    fn rejects_small_exponent() {
        let e = parse_config(r#"{"command": "solve", "p": 0.5, "q": 3, "r": 1}"#).unwrap_err();
        assert_eq!(e.errors[0].field, "p");
        assert!(e.errors[0].message.contains("p > 1"));
    }

    #[test]
    fn r_error_quotes_interval() {
        let e = parse_config(
            r#"{"command": "solve", "domain": ["pi", "pi", "pi"], "n": 8, "p": 3, "q": 3, "r": 0.7}"#,
        )
        .unwrap_err();
        let m = &e.errors[0].message;
        assert_eq!(e.errors[0].field, "r");
        assert!(m.contains("(0.75, 1.25)"), "{m}");
    }

    #[test]
    fn unknown_and_mistyped_fields_are_named() {
        let e = parse_config(r#"{"command": "check", "bogus": 1}"#).unwrap_err();
        assert!(e.errors[0].message.contains("bogus"));
        let e = parse_config(r#"{"command": "check", "solver": {"tol": "small"}}"#).unwrap_err();
        assert_eq!(e.errors[0].field, "solver.tol");
        let e = parse_config(r#"{"command": "fly"}"#).unwrap_err();
        assert_eq!(e.errors[0].field, "command");
    }

    #[test]
    fn small_basis_and_lengths() {
        let e = parse_config(r#"{"command": "solve", "n": 3, "p": 3, "q": 3, "r": 1}"#).unwrap_err();
        assert_eq!(e.errors[0].field, "n");
        let c = parse_config(
            r#"{"command": "solve", "domain": ["2pi", "pi/2", 1.5], "n": 6, "p": 3, "q": 3, "r": 1}"#,
        )
        .unwrap();
        let l = c.problem.unwrap().spec.basis().domain().lengths().to_vec();
        assert!((l[0] - 2.0 * PI).abs() < 1e-15 && (l[1] - PI / 2.0).abs() < 1e-15 && l[2] == 1.5);
    }

    #[test]
    fn length_parser() {
        assert_eq!(parse_length("pi"), Some(PI));
        assert_eq!(parse_length("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_length("2.5"), Some(2.5));
        assert_eq!(parse_length("tau"), None);
    }
}
