//! Dirichlet eigenpairs of `-Δ` on boxes and the coefficient-space machinery
//! built on them.
//!
//! A box `[0, L_1] × ... × [0, L_d]` has the eigenfunctions
//! `φ_m(x) = Π_i sqrt(2/L_i) sin(m_i π x_i / L_i)` with eigenvalue
//! `λ_m = Σ_i (m_i π / L_i)²`. The basis keeps the `n` smallest of these,
//! sorted by eigenvalue with ties broken lexicographically on the multi-index.
//!
//! Functions are represented by their coefficient vectors in that basis
//! ([`SpectralField`]). Nonlinear terms are evaluated on a tensor sine grid
//! (interior points of a uniform mesh) on which the discrete sine transform is
//! exact for every resolved mode.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default grid refinement for nonlinear quadrature.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Relative tolerance under which two eigenvalues are treated as equal.
const TIE_RTOL: f64 = 1e-12;

/// An axis-aligned box `[0, L_1] × ... × [0, L_dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 3 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1, 2 or 3, got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidDomain(format!(
                "side lengths must be positive and finite, got {l}"
            )));
        }
        Ok(Self { lengths })
    }

    /// The cube `[0, π]^dim`.
    pub fn pi_cube(dim: usize) -> Result<Self> {
        Self::new(vec![PI; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// One Dirichlet eigenpair of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub multi_index: Vec<usize>,
    pub lambda: f64,
    /// 1-based position in the sorted spectrum.
    pub rank: usize,
}

/// Returns the `n` smallest Dirichlet eigenpairs of the box.
pub fn enumerate_basis(domain: &BoxDomain, n: usize) -> Result<Vec<EigenPair>> {
    if n == 0 {
        return Err(Error::EmptyBasis);
    }
    let dim = domain.dim();
    let freq: Vec<f64> = domain.lengths().iter().map(|l| (PI / l).powi(2)).collect();
    let lambda_of = |m: &[usize]| -> f64 {
        m.iter()
            .zip(&freq)
            .map(|(&mi, f)| (mi * mi) as f64 * f)
            .sum()
    };

    // Per-axis cutoffs grow until no mode beyond them can undercut the n-th
    // eigenvalue of the candidate set.
    let mut bounds = vec![n.min(4).max(1); dim];
    loop {
        let mut cands: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut idx = vec![1usize; dim];
        'outer: loop {
            cands.push((lambda_of(&idx), idx.clone()));
            for ax in (0..dim).rev() {
                if idx[ax] < bounds[ax] {
                    idx[ax] += 1;
                    continue 'outer;
                }
                idx[ax] = 1;
            }
            break;
        }
        if cands.len() < n {
            bounds.iter_mut().for_each(|b| *b *= 2);
            continue;
        }
        sort_spectrum(&mut cands);
        let lambda_n = cands[n - 1].0;
        let base: f64 = freq.iter().sum();
        let mut complete = true;
        for ax in 0..dim {
            let b = bounds[ax] as f64 + 1.0;
            let excluded_min = base + (b * b - 1.0) * freq[ax];
            if excluded_min <= lambda_n * (1.0 + TIE_RTOL) {
                bounds[ax] *= 2;
                complete = false;
            }
        }
        if complete {
            return Ok(cands
                .into_iter()
                .take(n)
                .enumerate()
                .map(|(i, (lambda, multi_index))| EigenPair {
                    multi_index,
                    lambda,
                    rank: i + 1,
                })
                .collect());
        }
    }
}

fn sort_spectrum(cands: &mut [(f64, Vec<usize>)]) {
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Eigenvalues equal up to rounding form one cluster, ordered by multi-index.
    let mut start = 0;
    while start < cands.len() {
        let mut end = start + 1;
        while end < cands.len() && cands[end].0 - cands[start].0 <= TIE_RTOL * cands[start].0 {
            end += 1;
        }
        cands[start..end].sort_by(|a, b| a.1.cmp(&b.1));
        start = end;
    }
}

/// Largest `C` with `λ_k ≥ C k^{2/dim}` over the enumerated ranks.
pub fn eigenvalue_growth_constant(pairs: &[EigenPair], dim: usize) -> f64 {
    pairs
        .iter()
        .map(|e| e.lambda / (e.rank as f64).powf(2.0 / dim as f64))
        .fold(f64::INFINITY, f64::min)
}

/// A truncated eigenbasis together with cached quadrature grids.
pub struct Basis {
    domain: BoxDomain,
    pairs: Vec<EigenPair>,
    lambdas: Vec<f64>,
    grids: Mutex<HashMap<usize, Arc<Grid>>>,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("domain", &self.domain)
            .field("n", &self.pairs.len())
            .finish()
    }
}

impl Basis {
    pub fn new(domain: BoxDomain, n: usize) -> Result<Arc<Self>> {
        let pairs = enumerate_basis(&domain, n)?;
        let lambdas = pairs.iter().map(|e| e.lambda).collect();
        Ok(Arc::new(Self {
            domain,
            pairs,
            lambdas,
            grids: Mutex::new(HashMap::new()),
        }))
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ_k` for a 1-based rank.
    pub fn lambda(&self, rank: usize) -> Result<f64> {
        self.check_rank(rank)?;
        Ok(self.lambdas[rank - 1])
    }

    pub fn check_rank(&self, rank: usize) -> Result<()> {
        if rank == 0 || rank > self.len() {
            return Err(Error::RankOutOfRange {
                k: rank,
                n: self.len(),
            });
        }
        Ok(())
    }

    /// Two bases are interchangeable when they were enumerated from the same
    /// domain with the same size.
    pub fn same_as(&self, other: &Basis) -> bool {
        std::ptr::eq(self, other) || (self.domain == other.domain && self.len() == other.len())
    }

    pub fn growth_constant(&self) -> f64 {
        eigenvalue_growth_constant(&self.pairs, self.domain.dim())
    }

    /// Value of `φ_rank` at `x`.
    pub fn eval_mode(&self, rank: usize, x: &[f64]) -> f64 {
        let m = &self.pairs[rank - 1].multi_index;
        self.domain
            .lengths()
            .iter()
            .zip(m)
            .zip(x)
            .map(|((l, &mi), xi)| (2.0 / l).sqrt() * (mi as f64 * PI * xi / l).sin())
            .product()
    }

    /// Quadrature grid for the given oversampling factor, built once and cached.
    pub fn grid(&self, oversample: usize) -> Result<Arc<Grid>> {
        if oversample == 0 {
            return Err(Error::BadOversample);
        }
        let mut cache = self.grids.lock().expect("grid cache poisoned");
        if let Some(g) = cache.get(&oversample) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(Grid::build(self, oversample));
        cache.insert(oversample, Arc::clone(&g));
        Ok(g)
    }
}

/// Tensor sine grid: `P_i = oversample · max_m_i` interior points per axis at
/// `x_j = j L_i / (P_i + 1)`.
#[derive(Debug)]
pub struct Grid {
    oversample: usize,
    points_per_axis: Vec<usize>,
    lengths: Vec<f64>,
    weight: f64,
    /// `synth[(k, g)] = φ_k(x_g)`.
    synth: DMatrix<f64>,
}

impl Grid {
    fn build(basis: &Basis, oversample: usize) -> Self {
        let dim = basis.domain.dim();
        let lengths = basis.domain.lengths().to_vec();
        let points_per_axis: Vec<usize> = (0..dim)
            .map(|ax| {
                let max_m = basis
                    .pairs
                    .iter()
                    .map(|e| e.multi_index[ax])
                    .max()
                    .unwrap_or(1);
                oversample * max_m
            })
            .collect();
        let weight: f64 = lengths
            .iter()
            .zip(&points_per_axis)
            .map(|(l, &p)| l / (p + 1) as f64)
            .product();

        // Per-axis sine tables, tab[ax][m-1][j] = sqrt(2/L) sin(m π x_j / L).
        let tables: Vec<Vec<Vec<f64>>> = (0..dim)
            .map(|ax| {
                let p = points_per_axis[ax];
                let max_m = p / oversample;
                let l = lengths[ax];
                (1..=max_m)
                    .map(|m| {
                        (1..=p)
                            .map(|j| {
                                (2.0 / l).sqrt()
                                    * (m as f64 * PI * j as f64 / (p + 1) as f64).sin()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let total: usize = points_per_axis.iter().product();
        let n = basis.len();
        let mut synth = DMatrix::<f64>::zeros(n, total);
        let mut idx = vec![0usize; dim];
        for g in 0..total {
            // Last axis varies fastest.
            let mut rem = g;
            for ax in (0..dim).rev() {
                idx[ax] = rem % points_per_axis[ax];
                rem /= points_per_axis[ax];
            }
            for (k, e) in basis.pairs.iter().enumerate() {
                let mut val = 1.0;
                for ax in 0..dim {
                    val *= tables[ax][e.multi_index[ax] - 1][idx[ax]];
                }
                synth[(k, g)] = val;
            }
        }
        Self {
            oversample,
            points_per_axis,
            lengths,
            weight,
            synth,
        }
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn len(&self) -> usize {
        self.synth.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.synth.ncols() == 0
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    /// Quadrature weight shared by every grid point.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Coordinates of grid point `g`.
    pub fn point(&self, g: usize) -> Vec<f64> {
        let dim = self.points_per_axis.len();
        let mut x = vec![0.0; dim];
        let mut rem = g;
        for ax in (0..dim).rev() {
            let p = self.points_per_axis[ax];
            let j = rem % p + 1;
            rem /= p;
            x[ax] = j as f64 * self.lengths[ax] / (p + 1) as f64;
        }
        x
    }

    pub fn synthesis(&self) -> &DMatrix<f64> {
        &self.synth
    }

    /// Grid values of `Σ_k c_k φ_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.synth.nrows();
        let mut out = vec![0.0; self.len()];
        for (g, o) in out.iter_mut().enumerate() {
            let col = self.synth.column(g);
            let mut acc = 0.0;
            for k in 0..n {
                acc += coeffs[k] * col[k];
            }
            *o = acc;
        }
        out
    }

    /// Discrete projections `w Σ_g f(x_g) φ_k(x_g)`.
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        let n = self.synth.nrows();
        let mut out = vec![0.0; n];
        for (g, &val) in values.iter().enumerate() {
            let col = self.synth.column(g);
            for k in 0..n {
                out[k] += val * col[k];
            }
        }
        out.iter_mut().for_each(|c| *c *= self.weight);
        out
    }

    /// `w Σ_g f(x_g)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weight * values.iter().sum::<f64>()
    }

    /// Galerkin matrix `M_kl = w Σ_g c(x_g) φ_k(x_g) φ_l(x_g)`.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.synth.clone();
        for (g, mut col) in scaled.column_iter_mut().enumerate() {
            col *= weights[g] * self.weight;
        }
        &scaled * self.synth.transpose()
    }
}

/// Finite eigenfunction expansion `Σ ξ_k φ_k`.
#[derive(Clone)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("n", &self.coeffs.len())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl SpectralField {
    pub fn new(basis: Arc<Basis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<Basis>) -> Self {
        let n = basis.len();
        Self {
            basis,
            coeffs: vec![0.0; n],
        }
    }

    /// The eigenfunction `φ_rank` (1-based).
    pub fn mode(basis: Arc<Basis>, rank: usize) -> Result<Self> {
        basis.check_rank(rank)?;
        let mut f = Self::zeros(basis);
        f.coeffs[rank - 1] = 1.0;
        Ok(f)
    }

    pub(crate) fn from_raw(basis: Arc<Basis>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(basis.len(), coeffs.len());
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn check_same_basis(&self, other: &SpectralField) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// L² inner product (Parseval).
    pub fn dot(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_basis(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SpectralField, b: f64) -> Result<Self> {
        self.check_same_basis(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_raw(Arc::clone(&self.basis), coeffs))
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::from_raw(
            Arc::clone(&self.basis),
            self.coeffs.iter().map(|c| t * c).collect(),
        )
    }

    /// Point evaluation of the expansion.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.basis.eval_mode(i + 1, x))
            .sum()
    }

    /// Same coefficients, zero-padded or truncated into another basis on the
    /// same domain. Used to seed refined solves from coarse solutions.
    pub fn transfer(&self, target: &Arc<Basis>) -> Result<Self> {
        if self.basis.domain() != target.domain() {
            return Err(Error::BasisMismatch);
        }
        let mut coeffs = vec![0.0; target.len()];
        for (src, e) in self.basis.pairs().iter().enumerate() {
            if let Some(dst) = target
                .pairs()
                .iter()
                .position(|t| t.multi_index == e.multi_index)
            {
                coeffs[dst] = self.coeffs[src];
            }
        }
        Ok(Self::from_raw(Arc::clone(target), coeffs))
    }
}

/// `A^r f = (-Δ)^{r/2} f`, i.e. `ξ_k ↦ λ_k^{r/2} ξ_k`.
pub fn apply_frac_laplacian(f: &SpectralField, r: f64) -> SpectralField {
    let coeffs = f
        .coeffs
        .iter()
        .zip(f.basis.lambdas())
        .map(|(c, l)| l.powf(r / 2.0) * c)
        .collect();
    SpectralField::from_raw(Arc::clone(&f.basis), coeffs)
}

/// `‖f‖_{Θ^r} = sqrt(Σ λ_k^r ξ_k²)`.
pub fn theta_norm(f: &SpectralField, r: f64) -> f64 {
    theta_inner_raw(f.basis.lambdas(), &f.coeffs, &f.coeffs, r).sqrt()
}

/// `(f, g)_{Θ^r} = Σ λ_k^r ξ_k η_k`.
pub fn theta_inner(f: &SpectralField, g: &SpectralField, r: f64) -> Result<f64> {
    f.check_same_basis(g)?;
    Ok(theta_inner_raw(f.basis.lambdas(), &f.coeffs, &g.coeffs, r))
}

pub(crate) fn theta_inner_raw(lambdas: &[f64], a: &[f64], b: &[f64], r: f64) -> f64 {
    lambdas
        .iter()
        .zip(a.iter().zip(b))
        .map(|(l, (x, y))| l.powf(r) * x * y)
        .sum()
}

/// Values of `f` on the sine grid with the given oversampling.
pub fn to_grid(f: &SpectralField, oversample: usize) -> Result<Vec<f64>> {
    let grid = f.basis.grid(oversample)?;
    Ok(grid.synthesize(&f.coeffs))
}

/// Inverse of [`to_grid`] on resolved modes.
pub fn from_grid(values: &[f64], basis: &Arc<Basis>, oversample: usize) -> Result<SpectralField> {
    let grid = basis.grid(oversample)?;
    if values.len() != grid.len() {
        return Err(Error::GridSize {
            expected: grid.len(),
            got: values.len(),
        });
    }
    SpectralField::new(Arc::clone(basis), grid.project(values))
}
