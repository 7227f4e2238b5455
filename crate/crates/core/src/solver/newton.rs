use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{DualGradient, ProblemSpec};
use crate::indefinite_space::{er_norm, ErPoint};

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking contraction factor.
    pub damping: f64,
    /// Smallest step length tried before giving up.
    pub min_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
            min_step: 1e-12,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.min_step > 0.0 && self.min_step < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "min_step must lie in (0, 1), got {}",
                self.min_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    MinStep,
    Singular,
}

/// Outcome of a Newton run. When `converged` is false, `z` is the iterate
/// with the smallest residual seen.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub z: ErPoint,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
}

/// Residual and, on request, its Jacobian at one point.
struct Linearization {
    f: DVector<f64>,
    jac: Option<DMatrix<f64>>,
}

/// Residual of the Galerkin system, built with dense matrix products:
/// `du = Λη − S(w·|u|^{q−1}u) − k`, `dv = Λξ − S(w·|v|^{p−1}v) − h`.
fn linearize(z: &ErPoint, spec: &ProblemSpec, with_jacobian: bool) -> Result<Linearization> {
    spec.check_point(z)?;
    let n = spec.n();
    let grid = spec.basis().grid(spec.oversample())?;
    let s = grid.synthesis();
    let w = grid.weight();
    let xi = DVector::from_column_slice(z.u().coeffs());
    let eta = DVector::from_column_slice(z.v().coeffs());
    let uvals = s.tr_mul(&xi);
    let vvals = s.tr_mul(&eta);
    let (p, q) = (spec.p(), spec.q());
    let nu = uvals.map(|x| x.abs().powf(q - 1.0) * x);
    let nv = vvals.map(|x| x.abs().powf(p - 1.0) * x);
    let proj_u = s * nu * w;
    let proj_v = s * nv * w;
    let lam = DVector::from_column_slice(spec.basis().lambdas());
    let du = lam.component_mul(&eta) - proj_u - DVector::from_column_slice(spec.k().coeffs());
    let dv = lam.component_mul(&xi) - proj_v - DVector::from_column_slice(spec.h().coeffs());
    let mut f = DVector::zeros(2 * n);
    f.rows_mut(0, n).copy_from(&du);
    f.rows_mut(n, n).copy_from(&dv);
    let jac = with_jacobian.then(|| {
        let du_dxi: Vec<f64> = uvals.iter().map(|x| q * x.abs().powf(q - 1.0)).collect();
        let dv_deta: Vec<f64> = vvals.iter().map(|x| p * x.abs().powf(p - 1.0)).collect();
        let gu = grid.weighted_gram(&du_dxi);
        let gv = grid.weighted_gram(&dv_deta);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&(-gu));
        j.view_mut((n, n), (n, n)).copy_from(&(-gv));
        for i in 0..n {
            j[(i, n + i)] = lam[i];
            j[(n + i, i)] = lam[i];
        }
        j
    });
    Ok(Linearization { f, jac })
}

/// Residual of the truncated system; the same quantity as
/// [`crate::functionals::grad_I`], assembled independently.
pub fn residual(z: &ErPoint, spec: &ProblemSpec) -> Result<DualGradient> {
    Ok(DualGradient::from_stacked(linearize(z, spec, false)?.f.as_slice()))
}

/// Jacobian of [`residual`] in stacked `(ξ, η)` coordinates.
pub fn jacobian(z: &ErPoint, spec: &ProblemSpec) -> Result<DMatrix<f64>> {
    Ok(linearize(z, spec, true)?.jac.expect("requested"))
}

/// Deflation operator `M(z) = Π (‖z − z_i‖_E^{−2} + 1)`.
#[derive(Debug, Clone, Default)]
pub struct Deflation {
    known: Vec<ErPoint>,
}

impl Deflation {
    pub fn new(known: Vec<ErPoint>) -> Self {
        Self { known }
    }

    pub fn known(&self) -> &[ErPoint] {
        &self.known
    }

    pub fn push(&mut self, z: ErPoint) {
        self.known.push(z);
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    /// Smallest `E^r` distance to a known point.
    pub fn min_distance(&self, z: &ErPoint) -> f64 {
        self.known
            .iter()
            .map(|k| er_norm(&z.sub(k).expect("compatible")))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn factor(&self, z: &ErPoint) -> f64 {
        self.known
            .iter()
            .map(|k| {
                let d2 = er_norm(&z.sub(k).expect("compatible")).powi(2);
                1.0 / d2 + 1.0
            })
            .product()
    }

    /// `∇ ln M` in stacked coordinates.
    fn log_gradient(&self, z: &ErPoint) -> DVector<f64> {
        let n = z.n();
        let lam = z.basis().lambdas();
        let r = z.r();
        let mut g = DVector::zeros(2 * n);
        for k in &self.known {
            let diff = z.sub(k).expect("compatible");
            let d2 = er_norm(&diff).powi(2);
            let c = -2.0 / (d2 * d2) / (1.0 / d2 + 1.0);
            for i in 0..n {
                g[i] += c * lam[i].powf(r) * diff.u().coeffs()[i];
                g[n + i] += c * lam[i].powf(2.0 - r) * diff.v().coeffs()[i];
            }
        }
        g
    }
}

/// Damped Newton on the residual, optionally deflated.
pub fn newton_solve(
    z0: &ErPoint,
    spec: &ProblemSpec,
    config: &NewtonConfig,
    deflation: Option<&Deflation>,
) -> Result<NewtonReport> {
    config.validate()?;
    spec.check_point(z0)?;
    let basis = Arc::clone(spec.basis());
    let r = spec.r();
    let defl = deflation.filter(|d| !d.is_empty());
    let merit = |z: &ErPoint, fnorm: f64| match defl {
        Some(d) => d.factor(z) * fnorm,
        None => fnorm,
    };

    let mut z = z0.clone();
    let mut lin = linearize(&z, spec, true)?;
    let mut fnorm = lin.f.norm();
    let mut best = (z.clone(), fnorm);
    let report = |z: ErPoint, residual: f64, iterations: usize, stop: StopReason| NewtonReport {
        z,
        residual,
        iterations,
        converged: stop == StopReason::Converged,
        stop,
    };

    for it in 0..config.max_iter {
        if fnorm <= config.tol {
            return Ok(report(z, fnorm, it, StopReason::Converged));
        }
        let jac = lin.jac.take().expect("requested");
        let Some(mut delta) = jac.lu().solve(&(-&lin.f)) else {
            return Ok(report(best.0, best.1, it, StopReason::Singular));
        };
        if let Some(d) = defl {
            let denom = 1.0 - d.log_gradient(&z).dot(&delta);
            if denom == 0.0 || !denom.is_finite() {
                return Ok(report(best.0, best.1, it, StopReason::Singular));
            }
            delta /= denom;
        }
        if !delta.iter().all(|x| x.is_finite()) {
            return Ok(report(best.0, best.1, it, StopReason::Singular));
        }
        let m0 = merit(&z, fnorm);
        let x = DVector::from_vec(z.stacked());
        let mut alpha = 1.0;
        loop {
            let trial = ErPoint::from_stacked(Arc::clone(&basis), (&x + alpha * &delta).as_slice(), r)?;
            let tl = linearize(&trial, spec, true)?;
            let tn = tl.f.norm();
            if tn.is_finite() && merit(&trial, tn) < (1.0 - 1e-4 * alpha) * m0 {
                z = trial;
                lin = tl;
                fnorm = tn;
                break;
            }
            alpha *= config.damping;
            if alpha < config.min_step {
                return Ok(report(best.0, best.1, it + 1, StopReason::MinStep));
            }
        }
        if fnorm < best.1 {
            best = (z.clone(), fnorm);
        }
    }
    if fnorm <= config.tol {
        return Ok(report(z, fnorm, config.max_iter, StopReason::Converged));
    }
    Ok(report(best.0, best.1, config.max_iter, StopReason::MaxIter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::grad_I;
    use crate::spectral_basis::{Basis, BoxDomain, SpectralField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line(n: usize) -> Arc<Basis> {
        Basis::new(BoxDomain::new(vec![PI]).unwrap(), n).unwrap()
    }

    fn random_point(b: &Arc<Basis>, rng: &mut ChaCha8Rng, r: f64) -> ErPoint {
        let c: Vec<f64> = (0..2 * b.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ErPoint::from_stacked(b.clone(), &c, r).unwrap()
    }

    #[test]
    fn residual_examples() {
        let b = line(8);
        let spec = ProblemSpec::unforced(b.clone(), 3.0, 3.0, 1.0).unwrap();
        assert_eq!(residual(&spec.zero(), &spec).unwrap().norm(), 0.0);
        let phi = SpectralField::mode(b.clone(), 1).unwrap();
        let fs = spec.with_forcing(phi, SpectralField::zeros(b)).unwrap();
        assert!((residual(&fs.zero(), &fs).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residual_agrees_with_gradient() {
        let b = line(16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let h: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = ProblemSpec::new(
                b.clone(),
                2.5,
                3.0,
                1.0,
                SpectralField::new(b.clone(), h).unwrap(),
                SpectralField::new(b.clone(), k).unwrap(),
            )
            .unwrap();
            let z = random_point(&b, &mut rng, 1.0);
            let a = residual(&z, &spec).unwrap();
            let g = grad_I(&z, &spec).unwrap();
            let scale = g.norm().max(1.0);
            assert!(a.max_abs_diff(&g) < 1e-14 * scale, "{}", a.max_abs_diff(&g));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let b = line(6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = ProblemSpec::unforced(b.clone(), 2.5, 3.0, 0.8).unwrap();
        let z = random_point(&b, &mut rng, 0.8);
        let jac = jacobian(&z, &spec).unwrap();
        let x = z.stacked();
        let eps = 1e-6;
        for col in 0..12 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += eps;
            xm[col] -= eps;
            let fp = residual(&ErPoint::from_stacked(b.clone(), &xp, 0.8).unwrap(), &spec).unwrap();
            let fm = residual(&ErPoint::from_stacked(b.clone(), &xm, 0.8).unwrap(), &spec).unwrap();
            for (row, (a, c)) in fp.stacked().iter().zip(fm.stacked()).enumerate() {
                let fd = (a - c) / (2.0 * eps);
                assert!((fd - jac[(row, col)]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
        assert!((&jac - jac.transpose()).amax() < 1e-12);
    }

    #[test]
    fn zero_seed_converges_immediately() {
        let spec = ProblemSpec::unforced(line(8), 3.0, 3.0, 1.0).unwrap();
        let rep = newton_solve(&spec.zero(), &spec, &NewtonConfig::default(), None).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn divergence_is_reported_not_raised() {
        let b = line(8);
        let spec = ProblemSpec::unforced(b.clone(), 3.0, 3.0, 1.0).unwrap();
        let cfg = NewtonConfig {
            max_iter: 1,
            ..Default::default()
        };
        let phi = SpectralField::mode(b, 1).unwrap().scale(2.0);
        let z0 = ErPoint::new(phi.clone(), phi, 1.0).unwrap();
        let rep = newton_solve(&z0, &spec, &cfg, None).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.stop, StopReason::MaxIter);
        assert!(rep.residual.is_finite());
        let bad = NewtonConfig {
            damping: 1.0,
            ..Default::default()
        };
        assert!(newton_solve(&z0, &spec, &bad, None).is_err());
    }

    #[test]
    fn deflation_gradient_matches_finite_differences() {
        let b = line(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Deflation::new(vec![random_point(&b, &mut rng, 1.2), random_point(&b, &mut rng, 1.2)]);
        let z = random_point(&b, &mut rng, 1.2);
        let g = d.log_gradient(&z);
        let x = z.stacked();
        let eps = 1e-6;
        for i in 0..10 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += eps;
            xm[i] -= eps;
            let fp = d.factor(&ErPoint::from_stacked(b.clone(), &xp, 1.2).unwrap()).ln();
            let fm = d.factor(&ErPoint::from_stacked(b.clone(), &xm, 1.2).unwrap()).ln();
            assert!(((fp - fm) / (2.0 * eps) - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
        }
    }
}
