use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval_J, CutoffConfig, ProblemSpec};
use crate::indefinite_space::{er_norm, from_eigen_coordinates};
use crate::spectral_basis::Basis;
use crate::theory::{gn_exponents, growth_exponents, PQPoint};

/// Sampled upper and theoretical lower estimate of the `k`-th minimax level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelBracket {
    pub k: usize,
    /// `γ k^{2α_r}`.
    pub lower: f64,
    /// Largest sampled value of `J` over `B_k`, cumulative in `k`.
    pub upper: f64,
    pub radius: f64,
    /// `C R_k²` with `C = 1/2 + C_F/R_k`.
    pub quadratic_bound: f64,
    /// Samples breaking `J ≤ ½‖z⁺‖² − ½‖z⁻‖² + C_F‖z‖` or `J ≤ C R_k²`.
    pub violations: usize,
}

/// Level brackets plus the constants used to build them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelEstimate {
    pub brackets: Vec<LevelBracket>,
    pub gamma: f64,
    pub lower_exponent: f64,
    /// Empirical interpolation constants for the `u` and `v` components.
    pub gn_constants: (f64, f64),
    /// `min_k λ_k / k^{2/N}`.
    pub eigen_constant: f64,
    /// `‖k‖λ₁^{−r/2} + ‖h‖λ₁^{r/2−1}`, a bound for `|F(z)|/‖z‖`.
    pub forcing_constant: f64,
    pub samples: usize,
}

const RESTARTS: usize = 10;
const MAX_ITERS: usize = 400;

/// Values of `Σ c_j φ_j` on the quadrature grid, `c` zero-padded.
fn synth(basis: &Arc<Basis>, os: usize, c: &[f64]) -> Result<Vec<f64>> {
    let mut full = vec![0.0; basis.len()];
    full[..c.len()].copy_from_slice(c);
    Ok(basis.grid(os)?.synthesize(&full))
}

/// `min (1/(e+1))∫|w|^{e+1}` over `w = Σ_{j≤k} λ_j^{−s/2} y_j φ_j`, `|y| = 1`,
/// by projected gradient descent with random restarts.
fn sphere_min(basis: &Arc<Basis>, os: usize, k: usize, s: f64, e: f64, seed: u64) -> Result<f64> {
    let grid = basis.grid(os)?;
    let scale: Vec<f64> = basis.lambdas()[..k].iter().map(|l| l.powf(-s / 2.0)).collect();
    let value_grad = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
        let c: Vec<f64> = y.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let w = synth(basis, os, &c)?;
        let val = grid.integrate(&w.iter().map(|x| x.abs().powf(e + 1.0)).collect::<Vec<_>>())
            / (e + 1.0);
        let nl: Vec<f64> = w.iter().map(|x| x.abs().powf(e - 1.0) * x).collect();
        let g = grid.project(&nl)[..k]
            .iter()
            .zip(&scale)
            .map(|(a, b)| a * b)
            .collect();
        Ok((val, g))
    };
    let normalize = |y: &mut Vec<f64>| {
        let n = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        y.iter_mut().for_each(|x| *x /= n);
    };
    let mut best = f64::INFINITY;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let mut y: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        if restart == 0 {
            y = vec![1.0; k];
        }
        normalize(&mut y);
        let (mut val, mut g) = value_grad(&y)?;
        let mut step = 1.0;
        for _ in 0..MAX_ITERS {
            let radial: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
            let tang: Vec<f64> = g.iter().zip(&y).map(|(a, b)| a - radial * b).collect();
            let tn2: f64 = tang.iter().map(|x| x * x).sum();
            if tn2.sqrt() < 1e-12 * (1.0 + val) {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let mut trial: Vec<f64> = y.iter().zip(&tang).map(|(a, b)| a - step * b).collect();
                normalize(&mut trial);
                let (tv, tg) = value_grad(&trial)?;
                if tv <= val - 1e-4 * step * tn2 {
                    y = trial;
                    val = tv;
                    g = tg;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.min(val);
    }
    Ok(best)
}

/// `sup ‖w‖_{L^{e+1}} / (‖w‖_{Θ^s}^θ ‖w‖_{L²}^{1−θ})` over the full span,
/// by projected gradient ascent of the log-ratio with random restarts.
fn gn_constant(basis: &Arc<Basis>, os: usize, s: f64, e: f64, theta: f64, seed: u64) -> Result<f64> {
    let grid = basis.grid(os)?;
    let lam = basis.lambdas();
    let n = basis.len();
    let eval = |c: &[f64]| -> Result<(f64, Vec<f64>)> {
        let w = synth(basis, os, c)?;
        let integral = grid.integrate(&w.iter().map(|x| x.abs().powf(e + 1.0)).collect::<Vec<_>>());
        let hs: f64 = c.iter().zip(lam).map(|(x, l)| l.powf(s) * x * x).sum();
        let l2: f64 = c.iter().map(|x| x * x).sum();
        let val = integral.ln() / (e + 1.0) - 0.5 * theta * hs.ln() - 0.5 * (1.0 - theta) * l2.ln();
        let nl: Vec<f64> = w.iter().map(|x| x.abs().powf(e - 1.0) * x).collect();
        let proj = grid.project(&nl);
        let g = (0..n)
            .map(|i| {
                proj[i] / integral - theta * lam[i].powf(s) * c[i] / hs - (1.0 - theta) * c[i] / l2
            })
            .collect();
        Ok((val, g))
    };
    let normalize = |c: &mut Vec<f64>| {
        let m = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= m);
    };
    let mut best = f64::NEG_INFINITY;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let mut c: Vec<f64> = (0..n)
            .map(|i| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g / (1 + i) as f64
            })
            .collect();
        if restart == 0 {
            c = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        }
        normalize(&mut c);
        let (mut val, mut g) = eval(&c)?;
        let mut step = 1.0;
        for _ in 0..MAX_ITERS {
            let radial: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
            let tang: Vec<f64> = g.iter().zip(&c).map(|(a, b)| a - radial * b).collect();
            let tn2: f64 = tang.iter().map(|x| x * x).sum();
            if tn2.sqrt() < 1e-12 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let mut trial: Vec<f64> = c.iter().zip(&tang).map(|(a, b)| a + step * b).collect();
                normalize(&mut trial);
                let (tv, tg) = eval(&trial)?;
                if tv >= val + 1e-4 * step * tn2 {
                    c = trial;
                    val = tv;
                    g = tg;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.max(val);
    }
    Ok(best.exp())
}

/// Largest `γ` with `a_q(2√γ)^{q+1} + a_p(2√γ)^{p+1} ≤ 2γ`.
fn gamma_root(a_q: f64, a_p: f64, q: f64, p: f64) -> f64 {
    let excess = |g: f64| {
        let s = 2.0 * g.sqrt();
        a_q * s.powf(q + 1.0) + a_p * s.powf(p + 1.0) - 2.0 * g
    };
    let mut hi = 1.0;
    while excess(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while excess(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Brackets for levels `1..=k_max`. The radius `R_k` is twice the positive
/// root of `R²/2 = c R^m`, where `m = min(p, q) + 1` and `c` is the smaller of
/// the two minima of `∫|w|^{e+1}/(e+1)` over the unit spheres of
/// `span(φ₁..φ_k)` in `Θ^r` (for `e = q`) and `Θ^{2−r}` (for `e = p`).
/// Upper values are maxima of `J` over `samples` random points of
/// `B_k = {z ∈ E⁻ ⊕ span(e₁⁺..e_k⁺) : ‖z‖ ≤ R_k}`.
pub fn estimate_levels(
    spec: &ProblemSpec,
    cutoff: &CutoffConfig,
    k_max: usize,
    samples: usize,
    seed: u64,
) -> Result<LevelEstimate> {
    let basis = spec.basis();
    let n = basis.len();
    if k_max == 0 || k_max > n {
        return Err(Error::RankOutOfRange { k: k_max, n });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let (p, q, r, os) = (spec.p(), spec.q(), spec.r(), spec.oversample());
    let dim = basis.domain().dim();
    let pt = PQPoint::new(p, q, dim as u32)?;
    let growth = growth_exponents(&pt, r)?;
    let (theta, zeta) = gn_exponents(&pt, r)?;
    let lower_exponent = 2.0 * growth.alpha_r;

    let gq = gn_constant(basis, os, r, q, theta, seed)?;
    let gp = gn_constant(basis, os, 2.0 - r, p, zeta, seed ^ 0x9e37_79b9)?;
    let eigen_constant = basis
        .lambdas()
        .iter()
        .enumerate()
        .map(|(i, l)| l / ((i + 1) as f64).powf(2.0 / dim as f64))
        .fold(f64::INFINITY, f64::min);
    let a_q = gq.powf(q + 1.0) * eigen_constant.powf(-r * theta * (q + 1.0) / 2.0) / (q + 1.0);
    let a_p = gp.powf(p + 1.0) * eigen_constant.powf(-(2.0 - r) * zeta * (p + 1.0) / 2.0) / (p + 1.0);
    let gamma = gamma_root(a_q, a_p, q, p);

    let l1 = basis.lambdas()[0];
    let forcing_constant =
        spec.k().l2_norm() * l1.powf(-r / 2.0) + spec.h().l2_norm() * l1.powf(r / 2.0 - 1.0);
    let m = p.min(q) + 1.0;

    let mut brackets = Vec::with_capacity(k_max);
    let mut c_running = f64::INFINITY;
    let mut upper_running = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let cq = sphere_min(basis, os, k, r, q, seed.wrapping_add(k as u64))?;
        let cp = sphere_min(basis, os, k, 2.0 - r, p, seed.wrapping_add(1000 + k as u64))?;
        c_running = c_running.min(cq.min(cp));
        let radius = 2.0 * (1.0 / (2.0 * c_running)).powf(1.0 / (m - 2.0));
        let c_const = 0.5 + forcing_constant / radius;
        let quadratic_bound = c_const * radius * radius;

        let results = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<(f64, bool)> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((k * samples + i) as u64);
                let mut plus = vec![0.0; n];
                for c in plus.iter_mut().take(k) {
                    *c = StandardNormal.sample(&mut rng);
                }
                let damp = 10f64.powf(rng.random_range(-3.0..0.0));
                let mut minus: Vec<f64> = (0..n)
                    .map(|j| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        damp * g / (1 + j) as f64
                    })
                    .collect();
                let norm = plus.iter().chain(&minus).map(|x| x * x).sum::<f64>().sqrt();
                let rho = radius * rng.random_range(0.0..1.0) / norm;
                plus.iter_mut().for_each(|x| *x *= rho);
                minus.iter_mut().for_each(|x| *x *= rho);
                let z = from_eigen_coordinates(&plus, &minus, r, basis)?;
                let j = eval_J(&z, spec, cutoff)?;
                let pp: f64 = plus.iter().map(|x| x * x).sum();
                let mm: f64 = minus.iter().map(|x| x * x).sum();
                let slack = 1e-12 * (1.0 + j.abs());
                let ok = j <= 0.5 * pp - 0.5 * mm + forcing_constant * er_norm(&z) + slack
                    && j <= quadratic_bound + slack;
                Ok((j, ok))
            })
            .collect::<Result<Vec<_>>>()?;
        let violations = results.iter().filter(|(_, ok)| !ok).count();
        let sampled = results.iter().map(|(j, _)| *j).fold(f64::NEG_INFINITY, f64::max);
        upper_running = upper_running.max(sampled);
        brackets.push(LevelBracket {
            k,
            lower: gamma * (k as f64).powf(lower_exponent),
            upper: upper_running,
            radius,
            quadratic_bound,
            violations,
        });
    }
    Ok(LevelEstimate {
        brackets,
        gamma,
        lower_exponent,
        gn_constants: (gq, gp),
        eigen_constant,
        forcing_constant,
        samples,
    })
}
