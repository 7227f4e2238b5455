use super::newton::{newton_solve, residual, NewtonConfig};
use crate::error::{Error, Result};
use crate::functionals::ProblemSpec;
use crate::indefinite_space::ErPoint;

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub z: ErPoint,
    /// Largest homotopy parameter at which Newton converged.
    pub reached_t: f64,
    pub converged: bool,
    pub residual: f64,
    pub newton_iterations: usize,
}

/// Follows a solution of the unforced problem to `target` through the
/// forcings `t·(h, k)`, `t = 1/steps, …, 1`.
pub fn continuation(
    sym_solution: &ErPoint,
    target: &ProblemSpec,
    steps: usize,
    config: &NewtonConfig,
) -> Result<ContinuationReport> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    target.check_point(sym_solution)?;
    if target.is_unforced() {
        return Ok(ContinuationReport {
            z: sym_solution.clone(),
            reached_t: 1.0,
            converged: true,
            residual: residual(sym_solution, target)?.norm(),
            newton_iterations: 0,
        });
    }
    let mut z = sym_solution.clone();
    let mut reached_t = 0.0;
    let mut total = 0;
    let mut last_res = residual(&z, &target.scaled_forcing(0.0))?.norm();
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        let spec_t = target.scaled_forcing(t);
        let rep = newton_solve(&z, &spec_t, config, None)?;
        total += rep.iterations;
        if !rep.converged {
            return Ok(ContinuationReport {
                z,
                reached_t,
                converged: false,
                residual: last_res,
                newton_iterations: total,
            });
        }
        z = rep.z;
        reached_t = t;
        last_res = rep.residual;
    }
    Ok(ContinuationReport {
        z,
        reached_t,
        converged: true,
        residual: last_res,
        newton_iterations: total,
    })
}
