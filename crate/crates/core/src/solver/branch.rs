use std::sync::Arc;

use serde::Serialize;

use super::newton::{newton_solve, residual, Deflation, NewtonConfig, NewtonReport};
use crate::error::{Error, Result};
use crate::functionals::{eval_I, ProblemSpec};
use crate::indefinite_space::{er_norm, ErPoint};
use crate::spectral_basis::SpectralField;

/// Deflated search controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchConfig {
    pub newton: NewtonConfig,
    /// Minimum `E^r` distance between distinct solutions.
    pub separation: f64,
    /// Seeds use modes `1..=max_mode`.
    pub max_mode: usize,
    /// Consecutive deflated solves attempted from one seed.
    pub attempts_per_seed: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            separation: 1e-6,
            max_mode: 4,
            attempts_per_seed: 4,
        }
    }
}

/// `t·(φ_j, ±φ_j)` for `j = 1..=max_mode`, sign `+` then `−`, `t ∈ {1, 2, 4}`.
pub fn seed_schedule(spec: &ProblemSpec, max_mode: usize) -> Result<Vec<ErPoint>> {
    let basis = spec.basis();
    let mut seeds = Vec::new();
    for j in 1..=max_mode.min(basis.len()) {
        let phi = SpectralField::mode(Arc::clone(basis), j)?;
        for sign in [1.0, -1.0] {
            for t in [1.0, 2.0, 4.0] {
                seeds.push(ErPoint::new(phi.scale(t), phi.scale(sign * t), spec.r())?);
            }
        }
    }
    Ok(seeds)
}

/// A converged point found away from every deflated one.
#[derive(Debug, Clone)]
pub struct DeflatedSolution {
    pub report: NewtonReport,
    pub seed_index: usize,
    pub distance: f64,
}

/// Runs deflated Newton from each seed in turn and returns the first converged
/// point farther than `separation` from all of `known`. `Ok(None)` means the
/// schedule is exhausted.
pub fn deflated_solve(
    spec: &ProblemSpec,
    config: &BranchConfig,
    known: &[ErPoint],
    seeds: &[ErPoint],
) -> Result<Option<DeflatedSolution>> {
    for k in known {
        spec.check_point(k)?;
    }
    let deflation = Deflation::new(known.to_vec());
    for (i, seed) in seeds.iter().enumerate() {
        if let Some(sol) = try_seed(spec, config, &deflation, seed)? {
            return Ok(Some(DeflatedSolution { seed_index: i, ..sol }));
        }
    }
    Ok(None)
}

fn try_seed(
    spec: &ProblemSpec,
    config: &BranchConfig,
    deflation: &Deflation,
    seed: &ErPoint,
) -> Result<Option<DeflatedSolution>> {
    let rep = newton_solve(seed, spec, &config.newton, Some(deflation))?;
    if !rep.converged {
        return Ok(None);
    }
    let distance = deflation.min_distance(&rep.z);
    Ok((distance > config.separation).then_some(DeflatedSolution {
        report: rep,
        seed_index: 0,
        distance,
    }))
}

/// The negated member of a symmetric pair.
#[derive(Debug, Clone)]
pub struct Partner {
    pub z: ErPoint,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub z: ErPoint,
    pub i_value: f64,
    pub residual: f64,
    /// `−z` with its directly evaluated residual, for unforced problems.
    pub partner: Option<Partner>,
}

/// Solutions sorted by `I`. For unforced problems each record stands for the
/// pair `±z`; `z` is the member whose largest `u`-coefficient is positive.
#[derive(Debug, Clone)]
pub struct Branch {
    pub records: Vec<BranchRecord>,
    pub exhausted: bool,
    pub note: Option<String>,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn i_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.i_value).collect()
    }

    /// Every stored point, partners included.
    pub fn points(&self) -> Vec<&ErPoint> {
        self.records
            .iter()
            .flat_map(|r| std::iter::once(&r.z).chain(r.partner.as_ref().map(|p| &p.z)))
            .collect()
    }

    /// Smallest pairwise `E^r` distance among [`Branch::points`].
    pub fn min_separation(&self) -> f64 {
        let pts = self.points();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(er_norm(&pts[i].sub(pts[j]).expect("same basis")));
            }
        }
        best
    }
}

fn canonical_sign(z: ErPoint) -> ErPoint {
    let c = z.u().coeffs();
    let lead = c
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        z.neg()
    } else {
        z
    }
}

/// Deflated multi-seed search for up to `count` solutions (pairs, when the
/// problem is unforced). The trivial solution of an unforced problem is
/// deflated from the start and never reported.
pub fn find_branch(
    spec: &ProblemSpec,
    seeds: &[ErPoint],
    count: usize,
    config: &BranchConfig,
) -> Result<Branch> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    config.newton.validate()?;
    let symmetric = spec.is_unforced();
    let mut deflation = Deflation::default();
    if symmetric {
        deflation.push(spec.zero());
    }
    let mut records = Vec::new();
    'seeds: for seed in seeds {
        for _ in 0..config.attempts_per_seed {
            let Some(sol) = try_seed(spec, config, &deflation, seed)? else {
                break;
            };
            let z = if symmetric {
                canonical_sign(sol.report.z)
            } else {
                sol.report.z
            };
            let residual_z = residual(&z, spec)?.norm();
            let partner = if symmetric {
                let m = z.neg();
                let res = residual(&m, spec)?.norm();
                deflation.push(m.clone());
                Some(Partner { z: m, residual: res })
            } else {
                None
            };
            deflation.push(z.clone());
            records.push(BranchRecord {
                i_value: eval_I(&z, spec)?,
                residual: residual_z,
                z,
                partner,
            });
            if records.len() >= count {
                break 'seeds;
            }
        }
    }
    records.sort_by(|a, b| a.i_value.total_cmp(&b.i_value));
    let exhausted = records.len() < count;
    let note = exhausted.then(|| {
        format!(
            "seed schedule exhausted after {} of {} requested solutions",
            records.len(),
            count
        )
    });
    Ok(Branch {
        records,
        exhausted,
        note,
    })
}
