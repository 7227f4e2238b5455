mod support;

use indefsaddle::functionals::{eval_I, CutoffConfig, ProblemSpec};
use indefsaddle::indefinite_space::er_norm;
use indefsaddle::solver::{
    continuation, deflated_solve, estimate_levels, find_branch, newton_solve, seed_schedule,
    verify_critical, BranchConfig, NewtonConfig,
};
use indefsaddle::spectral_basis::SpectralField;
use support::{line, shooting_profile, sup_distance_up_to_sign};

fn cubic(n: usize) -> ProblemSpec {
    ProblemSpec::unforced(line(n), 3.0, 3.0, 1.0).unwrap()
}

#[test]
fn oracle_integrator_is_exact_on_linear_problem() {
    // e = 1 gives −u'' = u, solved by s·sin(x)
    let path = support::integrate(0.7, 1.0, 2000);
    let worst = path
        .iter()
        .enumerate()
        .map(|(i, v)| (v - 0.7 * (std::f64::consts::PI * i as f64 / 2000.0).sin()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn branch_matches_shooting_profiles() {
    let spec = cubic(32);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, cfg.max_mode).unwrap();
    let branch = find_branch(&spec, &seeds, 3, &cfg).unwrap();
    assert_eq!(branch.len(), 3);
    for (j, rec) in branch.records.iter().enumerate() {
        assert!(rec.residual < 1e-10);
        let uv = rec.z.u().sub(rec.z.v()).unwrap().l2_norm();
        assert!(uv < 1e-10, "u ≠ v on record {j}");
        let profile = shooting_profile(j + 1, 3.0, 4000);
        let d = sup_distance_up_to_sign(rec.z.u(), &profile);
        assert!(d < 1e-6, "hump count {}: {d}", j + 1);
    }
}

#[test]
fn ground_state_energy_scales_with_hump_count() {
    // u_j(x) = j u_1(jx) gives I_j = j⁴ I_1
    let spec = cubic(32);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, cfg.max_mode).unwrap();
    let iv = find_branch(&spec, &seeds, 3, &cfg).unwrap().i_values();
    for (j, v) in iv.iter().enumerate() {
        let expect = ((j + 1) as f64).powi(4) * iv[0];
        assert!((v - expect).abs() < 1e-8 * expect, "{v} vs {expect}");
    }
}

#[test]
fn deflation_avoids_known_roots() {
    let spec = cubic(16);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, 1).unwrap();
    let first = deflated_solve(&spec, &cfg, &[spec.zero()], &seeds)
        .unwrap()
        .expect("first root");
    let known = [spec.zero(), first.report.z.clone(), first.report.z.neg()];
    if let Some(next) = deflated_solve(&spec, &cfg, &known, &seeds).unwrap() {
        assert!(next.distance > cfg.separation);
    }
}

#[test]
fn newton_keeps_exact_root() {
    let spec = cubic(16);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, 2).unwrap();
    let b = find_branch(&spec, &seeds, 1, &cfg).unwrap();
    let rep = newton_solve(&b.records[0].z, &spec, &NewtonConfig::default(), None).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 1);
    assert!(er_norm(&rep.z.sub(&b.records[0].z).unwrap()) < 1e-12);
}

#[test]
fn continuation_without_forcing_is_identity() {
    let spec = cubic(16);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, 1).unwrap();
    let z = find_branch(&spec, &seeds, 1, &cfg).unwrap().records[0].z.clone();
    let rep = continuation(&z, &spec, 5, &NewtonConfig::default()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.reached_t, 1.0);
    assert_eq!(rep.z.stacked(), z.stacked());
}

#[test]
fn forced_solution_is_critical_for_both_functionals() {
    let spec = cubic(24);
    let cfg = BranchConfig::default();
    let seeds = seed_schedule(&spec, 2).unwrap();
    let z = find_branch(&spec, &seeds, 1, &cfg).unwrap().records[0].z.clone();
    let b = spec.basis().clone();
    let phi = SpectralField::mode(b, 1).unwrap().scale(0.05);
    let forced = spec.with_forcing(phi.clone(), phi).unwrap();
    let rep = continuation(&z, &forced, 5, &NewtonConfig::default()).unwrap();
    assert!(rep.converged);
    let cut = CutoffConfig::for_problem(&forced);
    let v = verify_critical(&rep.z, &forced, &cut).unwrap();
    assert!(v.is_critical(1e-10));
    assert_eq!(v.psi, 1.0);
    assert!(v.j_minus_i.abs() <= 1e-12);
    assert!(v.potential_bound.holds);
    assert!(v.fd_error < 1e-6, "{}", v.fd_error);
    assert!((v.i_value - eval_I(&rep.z, &forced).unwrap()).abs() < 1e-14 * v.i_value.abs().max(1.0));
}

#[test]
fn level_estimates_are_reproducible_and_monotone() {
    let spec = cubic(16);
    let cut = CutoffConfig::for_problem(&spec);
    let a = estimate_levels(&spec, &cut, 3, 300, 5).unwrap();
    let b = estimate_levels(&spec, &cut, 3, 300, 5).unwrap();
    assert_eq!(a, b);
    for w in a.brackets.windows(2) {
        assert!(w[1].upper >= w[0].upper);
        assert!(w[1].lower > w[0].lower);
        assert!(w[1].radius >= w[0].radius);
    }
    assert!(a.brackets.iter().all(|br| br.violations == 0));
    assert!(estimate_levels(&spec, &cut, 17, 10, 0).is_err());
    assert!(estimate_levels(&spec, &cut, 2, 0, 0).is_err());
}
