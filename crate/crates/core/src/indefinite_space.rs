//! The product space `E^r = Θ^r × Θ^{2-r}`, the coupling involution `L` and its
//! `±1` eigenspaces.
//!
//! In coefficients, with `u = Σ ξ_k φ_k` and `v = Σ η_k φ_k`:
//!
//! ```text
//! (z, w)_{E^r} = Σ λ_k^r ξ_k ξ'_k + Σ λ_k^{2-r} η_k η'_k
//! L(ξ, η)      = (λ_k^{1-r} η_k, λ_k^{r-1} ξ_k)
//! A(z)         = Σ λ_k ξ_k η_k = ½ (Lz, z)_{E^r}
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral_basis::{theta_inner_raw, Basis, SpectralField};

/// A point `(u, v)` of `E^r`.
#[derive(Debug, Clone)]
pub struct ErPoint {
    u: SpectralField,
    v: SpectralField,
    r: f64,
}

/// Eigenvalue of `L` selected by [`basis_vector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

pub(crate) fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r < 2.0 {
        Ok(())
    } else {
        Err(Error::ROutOfRange { r, lo: 0.0, hi: 2.0 })
    }
}

impl ErPoint {
    pub fn new(u: SpectralField, v: SpectralField, r: f64) -> Result<Self> {
        u.check_same_basis(&v)?;
        check_r(r)?;
        Ok(Self { u, v, r })
    }

    pub fn zeros(basis: Arc<Basis>, r: f64) -> Result<Self> {
        check_r(r)?;
        Ok(Self {
            u: SpectralField::zeros(Arc::clone(&basis)),
            v: SpectralField::zeros(basis),
            r,
        })
    }

    /// Builds a point from the stacked vector `[ξ_1..ξ_n, η_1..η_n]`.
    pub fn from_stacked(basis: Arc<Basis>, stacked: &[f64], r: f64) -> Result<Self> {
        let n = basis.len();
        if stacked.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n,
                got: stacked.len(),
            });
        }
        let u = SpectralField::new(Arc::clone(&basis), stacked[..n].to_vec())?;
        let v = SpectralField::new(basis, stacked[n..].to_vec())?;
        Self::new(u, v, r)
    }

    pub fn u(&self) -> &SpectralField {
        &self.u
    }

    pub fn v(&self) -> &SpectralField {
        &self.v
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.u.basis()
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// `[ξ_1..ξ_n, η_1..η_n]`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n());
        out.extend_from_slice(self.u.coeffs());
        out.extend_from_slice(self.v.coeffs());
        out
    }

    pub fn check_compatible(&self, other: &ErPoint) -> Result<()> {
        self.u.check_same_basis(&other.u)?;
        if self.r != other.r {
            return Err(Error::MixedR(self.r, other.r));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ErPoint, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            u: self.u.combine(a, &other.u, b)?,
            v: self.v.combine(a, &other.v, b)?,
            r: self.r,
        })
    }

    pub fn add(&self, other: &ErPoint) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &ErPoint) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            u: self.u.scale(t),
            v: self.v.scale(t),
            r: self.r,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Re-expresses the point in a larger or smaller basis on the same domain.
    pub fn transfer(&self, target: &Arc<Basis>) -> Result<Self> {
        Ok(Self {
            u: self.u.transfer(target)?,
            v: self.v.transfer(target)?,
            r: self.r,
        })
    }
}

/// Pair `(z⁺, z⁻)` with `z = z⁺ + z⁻`, `L z^± = ±z^±`.
#[derive(Debug, Clone)]
pub struct SplitPoint {
    pub plus: ErPoint,
    pub minus: ErPoint,
}

/// `(z, w)_{E^r}`.
pub fn er_inner(z: &ErPoint, w: &ErPoint) -> Result<f64> {
    z.check_compatible(w)?;
    let l = z.basis().lambdas();
    Ok(theta_inner_raw(l, z.u.coeffs(), w.u.coeffs(), z.r)
        + theta_inner_raw(l, z.v.coeffs(), w.v.coeffs(), 2.0 - z.r))
}

pub fn er_norm(z: &ErPoint) -> f64 {
    let l = z.basis().lambdas();
    (theta_inner_raw(l, z.u.coeffs(), z.u.coeffs(), z.r)
        + theta_inner_raw(l, z.v.coeffs(), z.v.coeffs(), 2.0 - z.r))
    .sqrt()
}

/// `Lz = ((-Δ)^{1-r} v, (-Δ)^{r-1} u)`.
#[allow(non_snake_case)]
pub fn apply_L(z: &ErPoint) -> ErPoint {
    let basis = z.basis();
    let l = basis.lambdas();
    let r = z.r;
    let u = l
        .iter()
        .zip(z.v.coeffs())
        .map(|(lk, eta)| lk.powf(1.0 - r) * eta)
        .collect();
    let v = l
        .iter()
        .zip(z.u.coeffs())
        .map(|(lk, xi)| lk.powf(r - 1.0) * xi)
        .collect();
    ErPoint {
        u: SpectralField::from_raw(Arc::clone(basis), u),
        v: SpectralField::from_raw(Arc::clone(basis), v),
        r,
    }
}

/// `A(z) = ∫∇u·∇v = Σ λ_k ξ_k η_k`.
pub fn quad_form(z: &ErPoint) -> f64 {
    z.basis()
        .lambdas()
        .iter()
        .zip(z.u.coeffs().iter().zip(z.v.coeffs()))
        .map(|(l, (x, y))| l * x * y)
        .sum()
}

/// `e_k^± = (λ_k^{-r/2} φ_k, ±λ_k^{r/2-1} φ_k) / √2`.
pub fn basis_vector(k: usize, sign: Sign, r: f64, basis: &Arc<Basis>) -> Result<ErPoint> {
    let lk = basis.lambda(k)?;
    let mut z = ErPoint::zeros(Arc::clone(basis), r)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = vec![0.0; basis.len()];
    let mut v = vec![0.0; basis.len()];
    u[k - 1] = s * lk.powf(-r / 2.0);
    v[k - 1] = sign.value() * s * lk.powf(r / 2.0 - 1.0);
    z.u = SpectralField::from_raw(Arc::clone(basis), u);
    z.v = SpectralField::from_raw(Arc::clone(basis), v);
    Ok(z)
}

/// `z⁺ = ½(z + Lz)`, `z⁻ = ½(z − Lz)`.
pub fn split(z: &ErPoint) -> SplitPoint {
    let lz = apply_L(z);
    let plus = z.combine(0.5, &lz, 0.5).expect("Lz shares the basis of z");
    let minus = z.combine(0.5, &lz, -0.5).expect("Lz shares the basis of z");
    SplitPoint { plus, minus }
}

/// Coordinates `((z, e_k^+), (z, e_k^-))` for `k = 1..n`.
pub fn eigen_coordinates(z: &ErPoint) -> (Vec<f64>, Vec<f64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = z.r;
    let mut plus = Vec::with_capacity(z.n());
    let mut minus = Vec::with_capacity(z.n());
    for ((l, x), y) in z
        .basis()
        .lambdas()
        .iter()
        .zip(z.u.coeffs())
        .zip(z.v.coeffs())
    {
        let a = l.powf(r / 2.0) * x;
        let b = l.powf(1.0 - r / 2.0) * y;
        plus.push(s * (a + b));
        minus.push(s * (a - b));
    }
    (plus, minus)
}

/// Inverse of [`eigen_coordinates`]: `Σ c_k^+ e_k^+ + Σ c_k^- e_k^-`.
pub fn from_eigen_coordinates(
    plus: &[f64],
    minus: &[f64],
    r: f64,
    basis: &Arc<Basis>,
) -> Result<ErPoint> {
    let n = basis.len();
    for len in [plus.len(), minus.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    check_r(r)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for ((l, cp), cm) in basis.lambdas().iter().zip(plus).zip(minus) {
        u.push(s * l.powf(-r / 2.0) * (cp + cm));
        v.push(s * l.powf(r / 2.0 - 1.0) * (cp - cm));
    }
    ErPoint::new(
        SpectralField::new(Arc::clone(basis), u)?,
        SpectralField::new(Arc::clone(basis), v)?,
        r,
    )
}
