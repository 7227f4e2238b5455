use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::error::Result;
use crate::functionals::{eval_I, eval_J, CutoffConfig, ProblemSpec};
use crate::indefinite_space::ErPoint;
use crate::solver::residual;
use crate::spectral_basis::{Basis, BoxDomain, SpectralField};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub lengths: Vec<f64>,
    pub n: usize,
    pub oversample: usize,
}

/// Re-loadable description of one computed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub index: usize,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "I")]
    pub i_value: f64,
    #[serde(rename = "J")]
    pub j_value: f64,
    pub residual: f64,
    pub theta: f64,
    pub psi: f64,
    pub potential_bound_holds: bool,
    pub smallest_a: f64,
    /// Residual of `−z`, present for symmetric pairs.
    pub partner_residual: Option<f64>,
    /// `I` after re-solving with twice the modes.
    pub refined_i: Option<f64>,
    pub refined_rel_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub schema_version: u32,
    pub command: String,
    pub basis: BasisDescriptor,
    pub h: Vec<f64>,
    pub k: Vec<f64>,
    pub cutoff_a: f64,
    pub exhausted: bool,
    pub note: Option<String>,
    pub records: Vec<SolutionRecord>,
}

impl BasisDescriptor {
    pub fn of(spec: &ProblemSpec) -> Self {
        Self {
            lengths: spec.basis().domain().lengths().to_vec(),
            n: spec.n(),
            oversample: spec.oversample(),
        }
    }
}

/// Rebuilds each stored point with its problem and the recorded residual.
pub fn load_solutions(set: &SolutionSet) -> Result<Vec<(ProblemSpec, ErPoint, CutoffConfig, f64)>> {
    let basis = Basis::new(BoxDomain::new(set.basis.lengths.clone())?, set.basis.n)?;
    let h = SpectralField::new(basis.clone(), set.h.clone())?;
    let k = SpectralField::new(basis.clone(), set.k.clone())?;
    let cutoff = CutoffConfig::new(set.cutoff_a)?;
    set.records
        .iter()
        .map(|rec| {
            let spec = ProblemSpec::new(basis.clone(), rec.p, rec.q, rec.r, h.clone(), k.clone())?
                .with_oversample(set.basis.oversample)?;
            let z = ErPoint::new(
                SpectralField::new(basis.clone(), rec.xi.clone())?,
                SpectralField::new(basis.clone(), rec.eta.clone())?,
                rec.r,
            )?;
            Ok((spec, z, cutoff, rec.residual))
        })
        .collect()
}

/// Values recorded for a point, recomputed from scratch.
pub fn describe(index: usize, z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<SolutionRecord> {
    let rep = crate::solver::verify_critical(z, spec, cutoff)?;
    Ok(SolutionRecord {
        index,
        xi: z.u().coeffs().to_vec(),
        eta: z.v().coeffs().to_vec(),
        r: spec.r(),
        p: spec.p(),
        q: spec.q(),
        i_value: eval_I(z, spec)?,
        j_value: eval_J(z, spec, cutoff)?,
        residual: residual(z, spec)?.norm(),
        theta: rep.theta,
        psi: rep.psi,
        potential_bound_holds: rep.potential_bound.holds,
        smallest_a: rep.potential_bound.smallest_a,
        partner_residual: None,
        refined_i: None,
        refined_rel_change: None,
    })
}

pub fn target(prefix: &str, name: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{name}"))
}

fn ensure_parent(path: &Path) -> std::result::Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::result::Result<(), RunError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::result::Result<(), RunError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::io(path, e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| RunError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}
