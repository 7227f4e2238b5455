//! Helpers shared by the integration and acceptance targets.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use indefsaddle::spectral_basis::{Basis, BoxDomain, SpectralField};

pub fn line(n: usize) -> Arc<Basis> {
    Basis::new(BoxDomain::new(vec![PI]).unwrap(), n).unwrap()
}

/// RK4 solution of `−u'' = |u|^{e−1}u`, `u(0) = 0`, `u'(0) = s` on `[0, π]`,
/// sampled at `steps + 1` equally spaced points.
pub fn integrate(s: f64, e: f64, steps: usize) -> Vec<f64> {
    let h = PI / steps as f64;
    let f = |u: f64, w: f64| (w, -u.abs().powf(e - 1.0) * u);
    let (mut u, mut w) = (0.0, s);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u);
    for _ in 0..steps {
        let (a1, b1) = f(u, w);
        let (a2, b2) = f(u + 0.5 * h * a1, w + 0.5 * h * b1);
        let (a3, b3) = f(u + 0.5 * h * a2, w + 0.5 * h * b2);
        let (a4, b4) = f(u + h * a3, w + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        w += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push(u);
    }
    out
}

fn crossings(path: &[f64]) -> usize {
    // the endpoint counts once it reaches or passes zero
    let mut n = 0;
    for w in path[1..].windows(2) {
        if w[0] > 0.0 && w[1] <= 0.0 || w[0] < 0.0 && w[1] >= 0.0 {
            n += 1;
        }
    }
    n
}

/// Shooting solution with `j − 1` interior zeros, found by bisection on `u'(0)`.
pub fn shooting_profile(j: usize, e: f64, steps: usize) -> Vec<f64> {
    let (mut lo, mut hi) = (1e-3, 1.0);
    while crossings(&integrate(hi, e, steps)) < j {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if crossings(&integrate(mid, e, steps)) >= j {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    integrate(0.5 * (lo + hi), e, steps)
}

/// Sup-norm distance between a spectral field and a profile on `[0, π]`.
pub fn sup_distance(f: &SpectralField, profile: &[f64]) -> f64 {
    let steps = profile.len() - 1;
    profile
        .iter()
        .enumerate()
        .map(|(i, v)| (f.eval_at(&[PI * i as f64 / steps as f64]) - v).abs())
        .fold(0.0, f64::max)
}

/// Distance to the profile or its negative, whichever is closer.
pub fn sup_distance_up_to_sign(f: &SpectralField, profile: &[f64]) -> f64 {
    let neg: Vec<f64> = profile.iter().map(|v| -v).collect();
    sup_distance(f, profile).min(sup_distance(f, &neg))
}
