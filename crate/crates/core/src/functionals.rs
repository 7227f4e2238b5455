//! The Lagrangian `I`, the cutoff `ψ = χ(θ)` and the modified functional `J`.
//!
//! ```text
//! I(z) = A(z) − P(z) − F(z)
//! A(z) = Σ λ_k ξ_k η_k
//! P(z) = ∫|u|^{q+1}/(q+1) + ∫|v|^{p+1}/(p+1)
//! F(z) = ∫k u + ∫h v
//! Q(z) = 2 A_c √(I(z)² + 1),  θ(z) = P(z)/Q(z),  ψ(z) = χ(θ(z))
//! J(z) = A(z) − P(z) − ψ(z) F(z)
//! ```
//!
//! Gradients are returned as dual-pairing coefficients: the partial
//! derivatives with respect to `ξ_k` and `η_k`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indefinite_space::{check_r, er_norm, from_eigen_coordinates, quad_form, ErPoint};
use crate::spectral_basis::{Basis, SpectralField, DEFAULT_OVERSAMPLE};
use crate::theory::{embedding_r_bounds, PQPoint};

/// Exponents, forcings and discretisation of one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    basis: Arc<Basis>,
    p: f64,
    q: f64,
    r: f64,
    h: SpectralField,
    k: SpectralField,
    oversample: usize,
}

impl ProblemSpec {
    /// `h` forces the u-equation and pairs with `v` in `I`; `k` the reverse.
    pub fn new(
        basis: Arc<Basis>,
        p: f64,
        q: f64,
        r: f64,
        h: SpectralField,
        k: SpectralField,
    ) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::BadExponent { name: "p", value: p });
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::BadExponent { name: "q", value: q });
        }
        check_r(r)?;
        let dim = basis.domain().dim();
        if dim >= 3 {
            let iv = embedding_r_bounds(&PQPoint::new(p, q, dim as u32)?);
            if !iv.contains(r) {
                return Err(Error::ROutOfRange { r, lo: iv.lo, hi: iv.hi });
            }
        }
        for f in [&h, &k] {
            if !f.basis().same_as(&basis) {
                return Err(Error::BasisMismatch);
            }
        }
        Ok(Self {
            basis,
            p,
            q,
            r,
            h,
            k,
            oversample: DEFAULT_OVERSAMPLE,
        })
    }

    /// `h = k = 0`.
    pub fn unforced(basis: Arc<Basis>, p: f64, q: f64, r: f64) -> Result<Self> {
        let zero = SpectralField::zeros(Arc::clone(&basis));
        Self::new(basis, p, q, r, zero.clone(), zero)
    }

    pub fn with_oversample(mut self, oversample: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::BadOversample);
        }
        self.oversample = oversample;
        Ok(self)
    }

    pub fn with_forcing(&self, h: SpectralField, k: SpectralField) -> Result<Self> {
        Self::new(Arc::clone(&self.basis), self.p, self.q, self.r, h, k)?
            .with_oversample(self.oversample)
    }

    /// Same problem with forcings multiplied by `t`.
    pub fn scaled_forcing(&self, t: f64) -> Self {
        Self {
            h: self.h.scale(t),
            k: self.k.scale(t),
            ..self.clone()
        }
    }

    /// Same problem on another basis; forcings are padded or truncated.
    pub fn on_basis(&self, basis: &Arc<Basis>) -> Result<Self> {
        Self::new(
            Arc::clone(basis),
            self.p,
            self.q,
            self.r,
            self.h.transfer(basis)?,
            self.k.transfer(basis)?,
        )?
        .with_oversample(self.oversample)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn h(&self) -> &SpectralField {
        &self.h
    }

    pub fn k(&self) -> &SpectralField {
        &self.k
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn is_unforced(&self) -> bool {
        self.h.coeffs().iter().chain(self.k.coeffs()).all(|c| *c == 0.0)
    }

    pub fn check_point(&self, z: &ErPoint) -> Result<()> {
        if !z.basis().same_as(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        if z.r() != self.r {
            return Err(Error::MixedR(z.r(), self.r));
        }
        Ok(())
    }

    pub fn zero(&self) -> ErPoint {
        ErPoint::zeros(Arc::clone(&self.basis), self.r).expect("r validated on construction")
    }
}

/// Cutoff constant and profile. The profile is `χ(t) = 1 − s(t − 1)` on
/// `[1, 2]` with `s(x) = 6x⁵ − 15x⁴ + 10x³`, which is C² and has
/// `χ′ ∈ [−15/8, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffConfig {
    pub a: f64,
}

impl CutoffConfig {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff constant A must be positive, got {a}"
            )));
        }
        Ok(Self { a })
    }

    /// `max(1, 4(‖h‖ + ‖k‖))`.
    pub fn for_problem(spec: &ProblemSpec) -> Self {
        Self {
            a: (4.0 * (spec.h.l2_norm() + spec.k.l2_norm())).max(1.0),
        }
    }

    pub fn chi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            let x = t - 1.0;
            1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
        }
    }

    pub fn chi_prime(&self, t: f64) -> f64 {
        if t <= 1.0 || t >= 2.0 {
            0.0
        } else {
            let x = t - 1.0;
            -30.0 * x * x * (1.0 - x) * (1.0 - x)
        }
    }
}

/// Partial derivatives with respect to `ξ_k` (`du`) and `η_k` (`dv`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualGradient {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

impl DualGradient {
    pub fn zeros(n: usize) -> Self {
        Self {
            du: vec![0.0; n],
            dv: vec![0.0; n],
        }
    }

    pub fn from_stacked(stacked: &[f64]) -> Self {
        let n = stacked.len() / 2;
        Self {
            du: stacked[..n].to_vec(),
            dv: stacked[n..].to_vec(),
        }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.du.iter().chain(&self.dv).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.du.iter().chain(&self.dv).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DualGradient) -> f64 {
        self.stacked()
            .iter()
            .zip(other.stacked())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Action on a direction `w`.
    pub fn pairing(&self, w: &ErPoint) -> f64 {
        let a: f64 = self.du.iter().zip(w.u().coeffs()).map(|(g, x)| g * x).sum();
        let b: f64 = self.dv.iter().zip(w.v().coeffs()).map(|(g, x)| g * x).sum();
        a + b
    }

    /// `E^r` Riesz representative: `du_k λ_k^{−r}`, `dv_k λ_k^{−(2−r)}`.
    pub fn riesz(&self, basis: &Arc<Basis>, r: f64) -> Result<ErPoint> {
        let l = basis.lambdas();
        let u = self.du.iter().zip(l).map(|(g, lk)| g * lk.powf(-r)).collect();
        let v = self
            .dv
            .iter()
            .zip(l)
            .map(|(g, lk)| g * lk.powf(r - 2.0))
            .collect();
        ErPoint::new(
            SpectralField::new(Arc::clone(basis), u)?,
            SpectralField::new(Arc::clone(basis), v)?,
            r,
        )
    }
}

/// `|x|^e`, using integer powers where exact.
fn abs_pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 16.0 {
        x.abs().powi(e as i32)
    } else {
        x.abs().powf(e)
    }
}

/// Oversampled quadrature of `∫|f|^{s+1}`.
pub fn nonlinear_integral(f: &SpectralField, s: f64, oversample: usize) -> Result<f64> {
    let grid = f.basis().grid(oversample)?;
    let vals = grid.synthesize(f.coeffs());
    Ok(grid.integrate(&vals.iter().map(|x| abs_pow(*x, s + 1.0)).collect::<Vec<_>>()))
}

/// Scalar pieces and, optionally, nonlinear projections at one point.
struct Pieces {
    quad: f64,
    potential: f64,
    forcing: f64,
    proj_u: Vec<f64>,
    proj_v: Vec<f64>,
}

impl Pieces {
    fn compute(z: &ErPoint, spec: &ProblemSpec, with_grad: bool) -> Result<Self> {
        spec.check_point(z)?;
        let grid = spec.basis.grid(spec.oversample)?;
        let uvals = grid.synthesize(z.u().coeffs());
        let vvals = grid.synthesize(z.v().coeffs());
        let (p, q) = (spec.p, spec.q);
        let pot_u: Vec<f64> = uvals.iter().map(|x| abs_pow(*x, q + 1.0)).collect();
        let pot_v: Vec<f64> = vvals.iter().map(|x| abs_pow(*x, p + 1.0)).collect();
        let potential =
            grid.integrate(&pot_u) / (q + 1.0) + grid.integrate(&pot_v) / (p + 1.0);
        let forcing = spec.k.dot(z.u())? + spec.h.dot(z.v())?;
        let (proj_u, proj_v) = if with_grad {
            let nu: Vec<f64> = uvals.iter().map(|x| abs_pow(*x, q - 1.0) * x).collect();
            let nv: Vec<f64> = vvals.iter().map(|x| abs_pow(*x, p - 1.0) * x).collect();
            (grid.project(&nu), grid.project(&nv))
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            quad: quad_form(z),
            potential,
            forcing,
            proj_u,
            proj_v,
        })
    }

    fn i_value(&self) -> f64 {
        self.quad - self.potential - self.forcing
    }
}

/// `P(z) = ∫|u|^{q+1}/(q+1) + ∫|v|^{p+1}/(p+1)`.
pub fn potential(z: &ErPoint, spec: &ProblemSpec) -> Result<f64> {
    Ok(Pieces::compute(z, spec, false)?.potential)
}

/// `F(z) = ∫k u + ∫h v`.
pub fn forcing_pairing(z: &ErPoint, spec: &ProblemSpec) -> Result<f64> {
    spec.check_point(z)?;
    Ok(spec.k.dot(z.u())? + spec.h.dot(z.v())?)
}

#[allow(non_snake_case)]
pub fn eval_I(z: &ErPoint, spec: &ProblemSpec) -> Result<f64> {
    Ok(Pieces::compute(z, spec, false)?.i_value())
}

/// `du_k = λ_k η_k − ⟨|u|^{q−1}u + k, φ_k⟩`, `dv_k = λ_k ξ_k − ⟨|v|^{p−1}v + h, φ_k⟩`.
#[allow(non_snake_case)]
pub fn grad_I(z: &ErPoint, spec: &ProblemSpec) -> Result<DualGradient> {
    let pc = Pieces::compute(z, spec, true)?;
    Ok(assemble(z, spec, &pc, 1.0, 1.0, 1.0))
}

/// `a λη − b N_u − c k` and the mirrored v-row.
fn assemble(z: &ErPoint, spec: &ProblemSpec, pc: &Pieces, a: f64, b: f64, c: f64) -> DualGradient {
    let l = spec.basis.lambdas();
    let (xi, eta) = (z.u().coeffs(), z.v().coeffs());
    let (kc, hc) = (spec.k.coeffs(), spec.h.coeffs());
    let du = (0..l.len())
        .map(|i| a * l[i] * eta[i] - b * pc.proj_u[i] - c * kc[i])
        .collect();
    let dv = (0..l.len())
        .map(|i| a * l[i] * xi[i] - b * pc.proj_v[i] - c * hc[i])
        .collect();
    DualGradient { du, dv }
}

/// Cutoff quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffState {
    pub i_value: f64,
    pub q_value: f64,
    pub theta: f64,
    pub psi: f64,
    pub potential: f64,
    pub forcing: f64,
}

fn cutoff_state(pc: &Pieces, cutoff: &CutoffConfig) -> CutoffState {
    let i_value = pc.i_value();
    let q_value = 2.0 * cutoff.a * (i_value * i_value + 1.0).sqrt();
    let theta = pc.potential / q_value;
    CutoffState {
        i_value,
        q_value,
        theta,
        psi: cutoff.chi(theta),
        potential: pc.potential,
        forcing: pc.forcing,
    }
}

pub fn eval_cutoff(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<CutoffState> {
    Ok(cutoff_state(&Pieces::compute(z, spec, false)?, cutoff))
}

#[allow(non_snake_case)]
pub fn eval_Q(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    Ok(eval_cutoff(z, spec, cutoff)?.q_value)
}

pub fn eval_theta(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    Ok(eval_cutoff(z, spec, cutoff)?.theta)
}

pub fn eval_psi(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    Ok(eval_cutoff(z, spec, cutoff)?.psi)
}

#[allow(non_snake_case)]
pub fn eval_J(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    let pc = Pieces::compute(z, spec, false)?;
    let st = cutoff_state(&pc, cutoff);
    Ok(pc.quad - pc.potential - st.psi * pc.forcing)
}

/// Gradient of `J` with the correction scalars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JGradient {
    pub grad: DualGradient,
    pub t1: f64,
    pub t2: f64,
    pub state: CutoffState,
}

/// `J′ = (1+T₁)A′ − (1+T₂)P′ − (ψ+T₁)F′` with
/// `T₁ = χ′(θ)(2A_c)²θQ⁻²I·F` and `T₂ = T₁ + χ′(θ)Q⁻¹F`.
#[allow(non_snake_case)]
pub fn grad_J(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<JGradient> {
    let pc = Pieces::compute(z, spec, true)?;
    let st = cutoff_state(&pc, cutoff);
    let dchi = cutoff.chi_prime(st.theta);
    let two_a = 2.0 * cutoff.a;
    let t1 = dchi * two_a * two_a * st.theta / (st.q_value * st.q_value) * st.i_value * st.forcing;
    let t2 = t1 + dchi / st.q_value * st.forcing;
    let grad = assemble(z, spec, &pc, 1.0 + t1, 1.0 + t2, st.psi + t1);
    Ok(JGradient {
        grad,
        t1,
        t2,
        state: st,
    })
}

/// Both sides of `|J(z) − J(−z)| ≤ β(|J|^{1/(q+1)} + |J|^{1/(p+1)} + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn deviation_sides(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<(f64, f64)> {
    let j = eval_J(z, spec, cutoff)?;
    let jm = eval_J(&z.neg(), spec, cutoff)?;
    let ja = j.abs();
    let scale = ja.powf(1.0 / (spec.q + 1.0)) + ja.powf(1.0 / (spec.p + 1.0)) + 1.0;
    Ok(((j - jm).abs(), scale))
}

pub fn deviation_check(
    z: &ErPoint,
    spec: &ProblemSpec,
    cutoff: &CutoffConfig,
    beta: f64,
) -> Result<DeviationReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let (lhs, scale) = deviation_sides(z, spec, cutoff)?;
    let rhs = beta * scale;
    Ok(DeviationReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// Random point with coefficients decaying like `1/k` in the `L`-eigenbasis,
/// normalised in `E^r` and scaled by `10^s` with `s ~ U(lo, hi)`.
pub fn sample_point(
    spec: &ProblemSpec,
    rng: &mut ChaCha8Rng,
    log10_scale: (f64, f64),
) -> ErPoint {
    let n = spec.n();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let g: f64 = StandardNormal.sample(rng);
                g / (i + 1) as f64
            })
            .collect()
    };
    let plus = draw(rng);
    let minus = draw(rng);
    let norm = plus.iter().chain(&minus).map(|x| x * x).sum::<f64>().sqrt();
    let s = Uniform::new_inclusive(log10_scale.0, log10_scale.1)
        .expect("ordered scale range")
        .sample(rng);
    let t = 10f64.powf(s) / norm.max(f64::MIN_POSITIVE);
    let plus: Vec<f64> = plus.iter().map(|x| x * t).collect();
    let minus: Vec<f64> = minus.iter().map(|x| x * t).collect();
    from_eigen_coordinates(&plus, &minus, spec.r, &spec.basis).expect("finite sample")
}

/// Log-scale range used by [`calibrate_beta`].
pub const CALIBRATION_LOG10_SCALE: (f64, f64) = (-1.0, 1.5);

const ASCENT_STARTS: usize = 12;
const ASCENT_STEPS: usize = 150;
const RAY_POINTS: usize = 40;

fn deviation_ratio(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    deviation_sides(z, spec, cutoff).map(|(lhs, scale)| lhs / scale)
}

/// Largest ratio along the ray `t d`, `t` on a log grid over the calibration
/// range, plus the roots of `J` between grid points where the ratio peaks.
fn ray_max(d: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<f64> {
    let (lo, hi) = CALIBRATION_LOG10_SCALE;
    let at = |t: f64| -> Result<(f64, f64)> {
        let z = d.scale(t);
        Ok((eval_J(&z, spec, cutoff)?, deviation_ratio(&z, spec, cutoff)?))
    };
    let ts: Vec<f64> = (0..RAY_POINTS)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (RAY_POINTS - 1) as f64))
        .collect();
    let vals = ts.iter().map(|&t| at(t)).collect::<Result<Vec<_>>>()?;
    let mut best = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    for w in 0..RAY_POINTS - 1 {
        if vals[w].0.signum() == vals[w + 1].0.signum() {
            continue;
        }
        let (mut a, mut b, ja) = (ts[w], ts[w + 1], vals[w].0);
        for _ in 0..40 {
            let m = 0.5 * (a + b);
            if at(m)?.0.signum() == ja.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        best = best.max(at(a)?.1).max(at(b)?.1);
    }
    Ok(best)
}

/// Random-search ascent of [`ray_max`] over unit directions.
fn ascend(
    d: &ErPoint,
    spec: &ProblemSpec,
    cutoff: &CutoffConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut best = d.scale(1.0 / er_norm(d));
    let mut value = ray_max(&best, spec, cutoff)?;
    let mut step = 0.1;
    for _ in 0..ASCENT_STEPS {
        let dir = sample_point(spec, rng, (0.0, 0.0));
        let trial = best.combine(1.0, &dir, step)?;
        let trial = trial.scale(1.0 / er_norm(&trial));
        let v = ray_max(&trial, spec, cutoff)?;
        if v > value {
            best = trial;
            value = v;
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.8;
        }
        if step < 1e-6 {
            break;
        }
    }
    Ok(value)
}

/// Empirical supremum of `|J(z) − J(−z)| / (|J|^{1/(q+1)} + |J|^{1/(p+1)} + 1)`:
/// the best of `samples` random points, then improved by ascent over ray
/// directions from the top few. Sample `i` uses stream `i` of a ChaCha8 generator seeded with
/// `seed`, so the result does not depend on threading.
pub fn calibrate_beta(
    spec: &ProblemSpec,
    cutoff: &CutoffConfig,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let point = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        sample_point(spec, &mut rng, CALIBRATION_LOG10_SCALE)
    };
    let mut ratios = (0..samples)
        .into_par_iter()
        .map(|i| deviation_ratio(&point(i), spec, cutoff).map(|v| (v, i)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    ratios.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let refined = ratios
        .par_iter()
        .take(ASCENT_STARTS)
        .map(|&(v, i)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((samples + i) as u64);
            ascend(&point(i), spec, cutoff, &mut rng).map(|a| a.max(v))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(refined.into_iter().fold(0.0, f64::max))
}

/// Both sides of `P(z) ≤ A_c √(I(z)² + 1)` and the smallest `A_c` for which it
/// holds at `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialBound {
    pub potential: f64,
    pub bound: f64,
    pub holds: bool,
    pub smallest_a: f64,
}

pub fn potential_bound(z: &ErPoint, spec: &ProblemSpec, cutoff: &CutoffConfig) -> Result<PotentialBound> {
    let pc = Pieces::compute(z, spec, false)?;
    let root = (pc.i_value().powi(2) + 1.0).sqrt();
    let bound = cutoff.a * root;
    Ok(PotentialBound {
        potential: pc.potential,
        bound,
        holds: pc.potential <= bound,
        smallest_a: pc.potential / root,
    })
}
