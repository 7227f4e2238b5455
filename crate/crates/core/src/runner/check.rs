//! Self-check suite exposed through the `check` command.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::functionals::{
    eval_I, eval_J, eval_cutoff, grad_I, grad_J, CutoffConfig, DualGradient, ProblemSpec,
};
use crate::indefinite_space::{
    apply_L, basis_vector, er_inner, er_norm, quad_form, split, ErPoint, Sign,
};
use crate::solver::{
    continuation, estimate_levels, find_branch, newton_solve, seed_schedule, verify_critical,
    BranchConfig, NewtonConfig,
};
use crate::spectral_basis::{Basis, BoxDomain, SpectralField};
use crate::theory::{
    admissible_r_interval, growth_exponents, hyperbola_gap, hyperbola_p_at, optimal_r,
    r_thresholds, theorem_margin, theorem_p_at, PQPoint,
};

/// One line of the suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error or count.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn result(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value <= threshold,
        value,
        threshold,
        detail: detail.into(),
    }
}

fn random_point(b: &Arc<Basis>, rng: &mut ChaCha8Rng, r: f64, scale: f64) -> Result<ErPoint> {
    let n = b.len();
    let c: Vec<f64> = (0..2 * n)
        .map(|i| scale * rng.random_range(-1.0..1.0) / (1 + i % n) as f64)
        .collect();
    ErPoint::from_stacked(b.clone(), &c, r)
}

fn random_field(b: &Arc<Basis>, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
    let c = (0..b.len())
        .map(|i| rng.random_range(-1.0..1.0) / (1 + i) as f64)
        .collect();
    SpectralField::new(b.clone(), c)
}

fn line(n: usize) -> Result<Arc<Basis>> {
    Basis::new(BoxDomain::new(vec![std::f64::consts::PI])?, n)
}

fn operator_algebra(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let square = Basis::new(BoxDomain::pi_cube(2)?, 24)?;
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let r = [0.5, 1.0, 1.5][draw % 3];
        let z = random_point(&square, &mut rng, r, 1.0)?;
        let w = random_point(&square, &mut rng, r, 1.0)?;
        let scale = er_norm(&z) * er_norm(&w);
        worst = worst.max((er_inner(&apply_L(&z), &w)? - er_inner(&z, &apply_L(&w))?).abs() / scale);
        worst = worst.max(er_norm(&apply_L(&apply_L(&z)).sub(&z)?) / er_norm(&z));
        let sp = split(&z);
        let a = quad_form(&sp.plus) - quad_form(&sp.minus) - 0.5 * er_norm(&z).powi(2);
        worst = worst.max(a.abs() / er_norm(&z).powi(2));
        worst = worst.max(er_norm(&split(&sp.plus).plus.sub(&sp.plus)?) / er_norm(&z));
    }
    for r in [0.5, 1.0, 1.5] {
        let vecs: Vec<ErPoint> = (1..=square.len())
            .flat_map(|k| [Sign::Plus, Sign::Minus].map(|s| basis_vector(k, s, r, &square)))
            .collect::<Result<_>>()?;
        for (i, a) in vecs.iter().enumerate() {
            for (j, b) in vecs.iter().enumerate().skip(i) {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((er_inner(a, b)? - expect).abs());
            }
        }
    }
    Ok(result("operator_algebra", worst, 1e-12, "L symmetric, L∘L = id, e_k^± orthonormal, A(z⁺) − A(z⁻) = ½‖z‖², idempotent split"))
}

fn fd_error(
    f: &dyn Fn(&ErPoint) -> Result<f64>,
    g: &DualGradient,
    z: &ErPoint,
    w: &ErPoint,
) -> Result<f64> {
    let eps = 1e-5;
    let fd = (f(&z.combine(1.0, w, eps)?)? - f(&z.combine(1.0, w, -eps)?)?) / (2.0 * eps);
    let an = g.pairing(w);
    Ok((fd - an).abs() / (1.0 + an.abs()))
}

fn gradient_fidelity(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = line(10)?;
    let mut worst: f64 = 0.0;
    let (mut plain, mut ramp, mut tries) = (0, 0, 0);
    while (plain < 50 || ramp < 50) && tries < 50_000 {
        tries += 1;
        let spec = ProblemSpec::new(b.clone(), 3.0, 2.5, 1.0, random_field(&b, &mut rng)?, random_field(&b, &mut rng)?)?;
        let cut = CutoffConfig::new(rng.random_range(0.2..2.0))?;
        let scale = rng.random_range(0.5..6.0);
        let z = random_point(&b, &mut rng, 1.0, scale)?;
        let w = random_point(&b, &mut rng, 1.0, 1.0)?;
        let theta = eval_cutoff(&z, &spec, &cut)?.theta;
        let on_ramp = theta > 1.0 && theta < 2.0;
        if (on_ramp && ramp >= 50) || (!on_ramp && plain >= 50) {
            continue;
        }
        if on_ramp {
            ramp += 1;
        } else {
            plain += 1;
        }
        let gi = grad_I(&z, &spec)?;
        worst = worst.max(fd_error(&|x| eval_I(x, &spec), &gi, &z, &w)?);
        let gj = grad_J(&z, &spec, &cut)?;
        worst = worst.max(fd_error(&|x| eval_J(x, &spec, &cut), &gj.grad, &z, &w)?);
    }
    let value = if ramp < 50 { f64::INFINITY } else { worst };
    Ok(result("gradient_fidelity", value, 1e-6, format!("{plain} plateau and {ramp} ramp points, eps = 1e-5")))
}

fn evenness(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = line(12)?;
    let spec = ProblemSpec::unforced(b.clone(), 2.3, 3.7, 0.8)?;
    let mut mismatches = 0;
    for _ in 0..50 {
        let z = random_point(&b, &mut rng, 0.8, 2.0)?;
        if eval_I(&z, &spec)? != eval_I(&z.neg(), &spec)? {
            mismatches += 1;
        }
    }
    Ok(result("unforced_evenness", mismatches as f64, 0.0, "I(z) = I(−z) bit for bit on 50 draws"))
}

fn intercepts() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for n in 5..=12 {
        let nf = n as f64;
        let hyp = hyperbola_p_at(1.0, nf).unwrap_or(f64::INFINITY);
        let thm = theorem_p_at(1.0, nf).unwrap_or(f64::INFINITY);
        worst = worst.max((hyp - (nf + 4.0) / (nf - 4.0)).abs());
        worst = worst.max((thm - (3.0 * nf + 4.0) / (3.0 * nf - 4.0)).abs());
        let pt = PQPoint::new(2.0 + nf / 10.0, 2.0 + nf / 10.0, n)?;
        worst = worst.max((r_thresholds(&pt).r_pq - 1.0).abs());
    }
    Ok(result("region_intercepts", worst, 1e-12, "q = 1 intercepts for N = 5..12 and r_pq = 1 on the diagonal"))
}

fn fuzz_points(seed: u64, count: usize) -> Vec<PQPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let n = rng.random_range(3..=10u32);
        let p = 1.0 + rng.random_range(0.001f64..8.0);
        let q = 1.0 + rng.random_range(0.001f64..8.0);
        let pt = PQPoint::new(p, q, n).expect("exponents above 1");
        if hyperbola_gap(&pt) > 0.0 {
            pts.push(pt);
        }
    }
    pts
}

fn region_identities(seed: u64) -> Result<Vec<CheckResult>> {
    let pts = fuzz_points(seed, 10_000);
    let (mut order_fail, mut balance, mut disagree, mut excluded) = (0usize, 0f64, 0usize, 0usize);
    for pt in &pts {
        let iv = admissible_r_interval(pt).interval.expect("subcritical");
        let t = r_thresholds(pt);
        if !iv.contains(t.r_pq) {
            order_fail += 1;
        } else {
            let g = growth_exponents(pt, t.r_pq)?;
            balance = balance.max((g.q1 - g.p1).abs());
        }
        let margin = theorem_margin(pt)?;
        if margin.abs() < 1e-9 {
            excluded += 1;
            continue;
        }
        let feasible = optimal_r(pt).is_some_and(|o| o.feasible);
        if feasible != (margin > 0.0) {
            disagree += 1;
        }
    }
    Ok(vec![
        result("threshold_ordering", order_fail as f64, 0.0, "r_pq inside the admissible interval on 10^4 subcritical points"),
        result("balance_identity", balance, 1e-12, "q1(r_pq) = p1(r_pq)"),
        result("optimal_r_equivalence", disagree as f64, 0.0, format!("theorem condition vs feasibility at optimal r, {excluded} boundary points excluded")),
    ])
}

fn solver_suite() -> Result<Vec<CheckResult>> {
    let b = line(32)?;
    let spec = ProblemSpec::unforced(b.clone(), 3.0, 3.0, 1.0)?;
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, cfg.max_mode)?;
    let branch = find_branch(&spec, &seeds, 3, &cfg)?;
    let mut out = Vec::new();
    let worst_res = branch
        .records
        .iter()
        .flat_map(|r| [r.residual, r.partner.as_ref().map_or(0.0, |p| p.residual)])
        .fold(0.0, f64::max);
    let found = branch.len();
    out.push(result(
        "branch_residuals",
        if found >= 3 { worst_res } else { f64::INFINITY },
        1e-10,
        format!("{found} pairs found for the 1-D cubic problem with n = 32"),
    ));
    let iv = branch.i_values();
    let increasing = iv.windows(2).all(|w| w[1] > w[0]);
    out.push(result("branch_ordering", if increasing { 0.0 } else { 1.0 }, 0.0, format!("I values {iv:?}")));

    let b2 = line(64)?;
    let spec2 = spec.on_basis(&b2)?;
    let mut mesh: f64 = 0.0;
    for rec in &branch.records {
        let rep = newton_solve(&rec.z.transfer(&b2)?, &spec2, &NewtonConfig::default(), None)?;
        let rel = if rep.converged {
            (eval_I(&rep.z, &spec2)? - rec.i_value).abs() / rec.i_value.abs()
        } else {
            f64::INFINITY
        };
        mesh = mesh.max(rel);
    }
    out.push(result("mesh_robustness", mesh, 1e-6, "relative change of I when n doubles"));

    let phi = SpectralField::mode(b.clone(), 1)?.scale(0.05);
    let forced = spec.with_forcing(phi.clone(), phi)?;
    let cut = CutoffConfig::for_problem(&forced);
    let mut worst: f64 = 0.0;
    let mut bound_fail = 0usize;
    for rec in &branch.records {
        let c = continuation(&rec.z, &forced, 5, &NewtonConfig::default())?;
        let v = verify_critical(&c.z, &forced, &cut)?;
        let bad = !c.converged || v.psi != 1.0 || v.j_minus_i.abs() > 1e-12;
        worst = worst.max(if bad { f64::INFINITY } else { v.residual });
        if !v.potential_bound.holds {
            bound_fail += 1;
        }
    }
    out.push(result("perturbation_persistence", worst, 1e-10, "continuation to h = k = 0.05 φ₁ in 5 steps, ψ = 1 and J = I"));
    out.push(result("potential_bound", bound_fail as f64, 0.0, format!("P ≤ A √(I² + 1) with A = {}", cut.a)));

    let lv = estimate_levels(&spec, &CutoffConfig::for_problem(&spec), 5, 1000, 1)?;
    let violations: usize = lv.brackets.iter().map(|b| b.violations).sum();
    out.push(result("level_upper_bound", violations as f64, 0.0, "sampled J ≤ C R_k² on every draw"));
    let top = lv.brackets.last().map_or(f64::NEG_INFINITY, |b| b.upper);
    let below = iv.iter().filter(|i| **i >= top).count();
    out.push(result("levels_bracket_solutions", below as f64, 0.0, format!("computed I values against the k = 5 upper bound {top}")));
    Ok(out)
}

/// Runs every check. The outcome depends only on `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        operator_algebra(seed)?,
        gradient_fidelity(seed.wrapping_add(1))?,
        evenness(seed.wrapping_add(2))?,
        intercepts()?,
    ];
    out.extend(region_identities(seed.wrapping_add(3))?);
    out.extend(solver_suite()?);
    Ok(out)
}
