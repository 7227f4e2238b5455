use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::newton::residual;
use crate::error::Result;
use crate::functionals::{
    eval_I, eval_J, eval_cutoff, grad_I, grad_J, potential_bound, CutoffConfig, PotentialBound,
    ProblemSpec,
};
use crate::indefinite_space::ErPoint;

/// Diagnostics at a candidate critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalReport {
    pub residual: f64,
    pub i_value: f64,
    pub j_value: f64,
    pub theta: f64,
    pub psi: f64,
    pub j_minus_i: f64,
    pub grad_j_norm: f64,
    pub potential_bound: PotentialBound,
    /// Largest `|fd − ⟨I′, w⟩| / (1 + |⟨I′, w⟩|)` over the probe directions.
    pub fd_error: f64,
}

impl CriticalReport {
    pub fn is_critical(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

const FD_EPS: f64 = 1e-5;
const FD_PROBES: usize = 3;

pub fn verify_critical(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<CriticalReport> {
    let res = residual(z, spec)?.norm();
    let i_value = eval_I(z, spec)?;
    let j_value = eval_J(z, spec, cutoff)?;
    let st = eval_cutoff(z, spec, cutoff)?;
    let gj = grad_J(z, spec, cutoff)?;
    let gi = grad_I(z, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut fd_error: f64 = 0.0;
    for _ in 0..FD_PROBES {
        let w: Vec<f64> = (0..2 * spec.n())
            .map(|i| rng.random_range(-1.0..1.0) / (1 + i % spec.n()) as f64)
            .collect();
        let w = ErPoint::from_stacked(spec.basis().clone(), &w, spec.r())?;
        let fp = eval_I(&z.combine(1.0, &w, FD_EPS)?, spec)?;
        let fm = eval_I(&z.combine(1.0, &w, -FD_EPS)?, spec)?;
        let an = gi.pairing(&w);
        fd_error = fd_error.max(((fp - fm) / (2.0 * FD_EPS) - an).abs() / (1.0 + an.abs()));
    }
    Ok(CriticalReport {
        residual: res,
        i_value,
        j_value,
        theta: st.theta,
        psi: st.psi,
        j_minus_i: j_value - i_value,
        grad_j_norm: gj.grad.norm(),
        potential_bound: potential_bound(z, spec, cutoff)?,
        fd_error,
    })
}
