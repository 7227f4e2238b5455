//! Closed-form exponent and region arithmetic in the `(p, q)` plane.
//!
//! Everything here is plain arithmetic on `(p, q, N, r)`. The quantities are:
//!
//! * the critical hyperbola `1/(p+1) + 1/(q+1) = 1 − 2/N`,
//! * the window of `r` for which `E^r ↪ L^{q+1} × L^{p+1}`,
//! * the interpolation exponents `θ, ζ` and growth exponents `q₁, p₁, α_r`,
//! * the thresholds `r_{p,q}`, `r^L`, `r^U` and the multiplicity region
//!   (the open set where the lower growth rate `2α_r` beats the upper rate
//!   `max((q+1)/q, (p+1)/p)` for some admissible `r`).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute margin below which a region predicate reports [`RegionStatus::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Exponent pair with the space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PQPoint {
    pub p: f64,
    pub q: f64,
    pub n: u32,
}

impl PQPoint {
    pub fn new(p: f64, q: f64, n: u32) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::BadExponent { name: "p", value: p });
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::BadExponent { name: "q", value: q });
        }
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        Ok(Self { p, q, n })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// The same point with `p` and `q` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
            n: self.n,
        }
    }
}

/// Three-valued region membership. The boundary curves are excluded from
/// every region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionStatus {
    Inside,
    Boundary,
    Outside,
}

impl RegionStatus {
    fn from_margin(m: f64) -> Self {
        if m > BOUNDARY_TOL {
            RegionStatus::Inside
        } else if m < -BOUNDARY_TOL {
            RegionStatus::Outside
        } else {
            RegionStatus::Boundary
        }
    }

    pub fn is_inside(self) -> bool {
        self == RegionStatus::Inside
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionStatus::Inside => "inside",
            RegionStatus::Boundary => "boundary",
            RegionStatus::Outside => "outside",
        }
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

/// `1/(p+1) + 1/(q+1) − (1 − 2/N)`; positive below the hyperbola. For
/// `N ≤ 2` there is no hyperbola and `+∞` is returned.
pub fn hyperbola_gap(pt: &PQPoint) -> f64 {
    if pt.n <= 2 {
        return f64::INFINITY;
    }
    1.0 / (pt.p + 1.0) + 1.0 / (pt.q + 1.0) - (1.0 - 2.0 / pt.nf())
}

pub fn hyperbola_status(pt: &PQPoint) -> RegionStatus {
    RegionStatus::from_margin(hyperbola_gap(pt))
}

/// `(N[1/2 − 1/(q+1)], 2 − N[1/2 − 1/(p+1)]) ∩ (0, 2)`, for any `N`. This is
/// the window in which the interpolation exponents stay positive.
pub fn embedding_r_bounds(pt: &PQPoint) -> OpenInterval {
    let lo = pt.nf() * (0.5 - 1.0 / (pt.q + 1.0));
    let hi = 2.0 - pt.nf() * (0.5 - 1.0 / (pt.p + 1.0));
    OpenInterval {
        lo: lo.max(0.0),
        hi: hi.min(2.0),
    }
}

/// Admissible `r` window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleR {
    /// `None` when the window is empty (on or above the hyperbola).
    pub interval: Option<OpenInterval>,
    /// Set for `N ≤ 2`, where the full `(0, 2)` is returned.
    pub unconstrained: bool,
}

pub fn admissible_r_interval(pt: &PQPoint) -> AdmissibleR {
    if pt.n <= 2 {
        return AdmissibleR {
            interval: Some(OpenInterval { lo: 0.0, hi: 2.0 }),
            unconstrained: true,
        };
    }
    let iv = embedding_r_bounds(pt);
    AdmissibleR {
        interval: (!iv.is_empty()).then_some(iv),
        unconstrained: false,
    }
}

fn check_in_window(pt: &PQPoint, r: f64) -> Result<()> {
    let iv = embedding_r_bounds(pt);
    if iv.contains(r) {
        Ok(())
    } else {
        Err(Error::ROutOfRange { r, lo: iv.lo, hi: iv.hi })
    }
}

/// Interpolation exponents `θ = 1 − (N/r)(1/2 − 1/(q+1))` and
/// `ζ = 1 − (N/(2−r))(1/2 − 1/(p+1))`.
pub fn gn_exponents(pt: &PQPoint, r: f64) -> Result<(f64, f64)> {
    check_in_window(pt, r)?;
    Ok(gn_exponents_unchecked(pt, r))
}

fn gn_exponents_unchecked(pt: &PQPoint, r: f64) -> (f64, f64) {
    let n = pt.nf();
    let theta = 1.0 - (n / r) * (0.5 - 1.0 / (pt.q + 1.0));
    let zeta = 1.0 - (n / (2.0 - r)) * (0.5 - 1.0 / (pt.p + 1.0));
    (theta, zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthExponents {
    pub q1: f64,
    pub p1: f64,
    pub alpha_r: f64,
}

fn growth_unchecked(pt: &PQPoint, r: f64) -> GrowthExponents {
    let n = pt.nf();
    let q1 = (pt.q + 1.0) / (pt.q - 1.0) * r / n - 0.5;
    let p1 = (pt.p + 1.0) / (pt.p - 1.0) * (2.0 - r) / n - 0.5;
    GrowthExponents {
        q1,
        p1,
        alpha_r: q1.min(p1),
    }
}

/// `q₁ = (q+1)/(q−1)·r/N − 1/2`, `p₁ = (p+1)/(p−1)·(2−r)/N − 1/2`,
/// `α_r = min(q₁, p₁)`.
pub fn growth_exponents(pt: &PQPoint, r: f64) -> Result<GrowthExponents> {
    check_in_window(pt, r)?;
    Ok(growth_unchecked(pt, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `(p+1)(q−1)/(pq−1)`: the `r` at which `q₁ = p₁`.
    pub r_pq: f64,
    /// `(N/2)((q−1)/(q+1))((2p+1)/p)`.
    pub r_lower: f64,
    /// `2 − (N/2)((p−1)/(p+1))((2p+1)/p)`.
    pub r_upper: f64,
}

pub fn r_thresholds(pt: &PQPoint) -> Thresholds {
    let (p, q, n) = (pt.p, pt.q, pt.nf());
    Thresholds {
        r_pq: (p + 1.0) * (q - 1.0) / (p * q - 1.0),
        r_lower: 0.5 * n * (q - 1.0) / (q + 1.0) * (2.0 * p + 1.0) / p,
        r_upper: 2.0 - 0.5 * n * (p - 1.0) / (p + 1.0) * (2.0 * p + 1.0) / p,
    }
}

/// Upper growth exponent `max((q+1)/q, (p+1)/p)`.
pub fn upper_exponent(pt: &PQPoint) -> f64 {
    ((pt.q + 1.0) / pt.q).max((pt.p + 1.0) / pt.p)
}

/// Left minus right side of the multiplicity condition, on the branch
/// selected by `max(p, q)`. Both branches agree when `p = q`.
pub fn theorem_margin(pt: &PQPoint) -> Result<f64> {
    if pt.n < 3 {
        return Err(Error::DimensionTooSmall(pt.n));
    }
    let (p, q, n) = (pt.p, pt.q, pt.nf());
    let base = 1.0 / (p + 1.0) + 1.0 / (q + 1.0);
    let extra = if q >= p {
        (p + 1.0) / (p * (q + 1.0))
    } else {
        (q + 1.0) / (q * (p + 1.0))
    };
    Ok(base + extra - (2.0 * n - 2.0) / n)
}

pub fn theorem_check(pt: &PQPoint) -> Result<RegionStatus> {
    theorem_margin(pt).map(RegionStatus::from_margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalR {
    pub r: f64,
    /// `min(2q₁, 2p₁) − max((q+1)/q, (p+1)/p)` at `r`.
    pub margin: f64,
    pub feasible: bool,
}

/// Maximiser of `min(2q₁, 2p₁)` over the admissible window: `r_{p,q}`
/// clipped into it. `None` when the window is empty.
pub fn optimal_r(pt: &PQPoint) -> Option<OptimalR> {
    let iv = match admissible_r_interval(pt) {
        AdmissibleR {
            unconstrained: true,
            ..
        } => embedding_r_bounds(pt),
        AdmissibleR {
            interval: Some(iv), ..
        } => iv,
        _ => return None,
    };
    if iv.is_empty() {
        return None;
    }
    let r = r_thresholds(pt).r_pq.clamp(iv.lo, iv.hi);
    let g = growth_unchecked(pt, r);
    let margin = 2.0 * g.alpha_r - upper_exponent(pt);
    let feasible = margin > 0.0 && iv.contains(r);
    Some(OptimalR {
        r,
        margin,
        feasible,
    })
}

/// `p` on the critical hyperbola for a given `q`. Accepts real `N > 2` for
/// plotting smooth curves.
pub fn hyperbola_p_at(q: f64, n: f64) -> Option<f64> {
    let s = 1.0 - 2.0 / n - 1.0 / (q + 1.0);
    (s > 0.0).then(|| 1.0 / s - 1.0)
}

/// `p` on the boundary of the multiplicity region for a given `q ≥ 1`.
/// Accepts real `N > 2`.
pub fn theorem_p_at(q: f64, n: f64) -> Option<f64> {
    let c = (2.0 * n - 2.0) / n;
    let s = c - 1.0 / (q + 1.0);
    if s <= 0.0 {
        return None;
    }
    // Branch q ≤ p: (1 + (q+1)/q) / (p+1) = s.
    let p_low = (2.0 * q + 1.0) / (q * s) - 1.0;
    if p_low >= q {
        return Some(p_low);
    }
    // Branch q ≥ p: 1/(p+1) + (p+1)/(p(q+1)) = s, a quadratic in p.
    let a = 1.0 - s * (q + 1.0);
    let b = q + 3.0 - s * (q + 1.0);
    let roots: Vec<f64> = if a.abs() < 1e-15 {
        vec![-1.0 / b]
    } else {
        let disc = b * b - 4.0 * a;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        vec![(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
    };
    roots
        .into_iter()
        .filter(|p| *p > 1.0 && *p <= q * (1.0 + 1e-12))
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
}

/// Growth-constant overrides for [`bound_curves`]; all default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub gamma: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
    pub lower_exponent: f64,
    pub upper_exponents: (f64, f64),
    /// Lower growth rate strictly beats the upper one.
    pub contradiction: bool,
    /// First tabulated `k` with `lower > upper`.
    pub crossover: Option<usize>,
}

/// Tabulates `γ k^{2α_r}` against `α₁ k^{(q+1)/q} + α₂ k^{(p+1)/p}`.
pub fn bound_curves(
    pt: &PQPoint,
    r: f64,
    ks: impl IntoIterator<Item = usize>,
    consts: BoundConstants,
) -> Result<BoundTable> {
    let g = growth_exponents(pt, r)?;
    let lower_exponent = 2.0 * g.alpha_r;
    let eq = (pt.q + 1.0) / pt.q;
    let ep = (pt.p + 1.0) / pt.p;
    let rows: Vec<BoundRow> = ks
        .into_iter()
        .map(|k| {
            let kf = k as f64;
            BoundRow {
                k,
                lower: consts.gamma * kf.powf(lower_exponent),
                upper: consts.alpha1 * kf.powf(eq) + consts.alpha2 * kf.powf(ep),
            }
        })
        .collect();
    let crossover = rows.iter().find(|row| row.lower > row.upper).map(|row| row.k);
    Ok(BoundTable {
        rows,
        lower_exponent,
        upper_exponents: (eq, ep),
        contradiction: lower_exponent > eq.max(ep),
        crossover,
    })
}

/// All scalars for one `(p, q, N)` at a chosen `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub point: PQPoint,
    pub hyperbola_gap: f64,
    pub admissible_r: AdmissibleR,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub zeta: Option<f64>,
    pub growth: Option<GrowthExponents>,
    pub thresholds: Thresholds,
    pub theorem: Option<RegionStatus>,
    pub optimal_r: Option<OptimalR>,
    pub lower_exponent: Option<f64>,
    pub upper_exponents: (f64, f64),
}

/// Collects every region quantity; `r` defaults to the optimal choice.
pub fn region_report(pt: &PQPoint, r: Option<f64>) -> RegionReport {
    let opt = optimal_r(pt);
    let r = r.or(opt.map(|o| o.r));
    let window = embedding_r_bounds(pt);
    let r_ok = r.filter(|r| window.contains(*r));
    let exps = r_ok.map(|r| gn_exponents_unchecked(pt, r));
    let growth = r_ok.map(|r| growth_unchecked(pt, r));
    RegionReport {
        point: *pt,
        hyperbola_gap: hyperbola_gap(pt),
        admissible_r: admissible_r_interval(pt),
        r,
        theta: exps.map(|e| e.0),
        zeta: exps.map(|e| e.1),
        growth,
        thresholds: r_thresholds(pt),
        theorem: theorem_check(pt).ok(),
        optimal_r: opt,
        lower_exponent: growth.map(|g| 2.0 * g.alpha_r),
        upper_exponents: ((pt.q + 1.0) / pt.q, (pt.p + 1.0) / pt.p),
    }
}

/// One cell of a `(p, q)` scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub q: f64,
    pub hyperbola_gap: f64,
    pub subcritical: RegionStatus,
    pub theorem_margin: Option<f64>,
    pub theorem: Option<RegionStatus>,
    pub optimal_r: Option<f64>,
    pub feasible: Option<bool>,
}

/// Evaluates the region predicates on the tensor grid `p_grid × q_grid`.
/// Rows come back ordered by `(i, j)` regardless of thread scheduling.
pub fn region_scan(n: u32, p_grid: &[f64], q_grid: &[f64]) -> Result<Vec<RegionRow>> {
    let points: Vec<(usize, usize, PQPoint)> = p_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| q_grid.iter().enumerate().map(move |(j, &q)| (i, j, p, q)))
        .map(|(i, j, p, q)| PQPoint::new(p, q, n).map(|pt| (i, j, pt)))
        .collect::<Result<_>>()?;
    Ok(points
        .par_iter()
        .map(|&(i, j, pt)| {
            let opt = optimal_r(&pt);
            let margin = theorem_margin(&pt).ok();
            RegionRow {
                i,
                j,
                p: pt.p,
                q: pt.q,
                hyperbola_gap: hyperbola_gap(&pt),
                subcritical: hyperbola_status(&pt),
                theorem_margin: margin,
                theorem: margin.map(RegionStatus::from_margin),
                optimal_r: opt.map(|o| o.r),
                feasible: opt.map(|o| o.feasible),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(p: f64, q: f64, n: u32) -> PQPoint {
        PQPoint::new(p, q, n).unwrap()
    }

    #[test]
    fn hyperbola_examples() {
        assert_abs_diff_eq!(hyperbola_gap(&pt(2.0, 2.0, 6)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hyperbola_gap(&pt(3.0, 3.0, 3)), 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(hyperbola_gap(&pt(3.0, 3.0, 2)), f64::INFINITY);
        // q → 1 intercept at N = 6 is p = 5.
        assert_abs_diff_eq!(hyperbola_p_at(1.0, 6.0).unwrap(), 5.0, epsilon = 1e-13);
        assert_eq!(hyperbola_status(&pt(2.0, 2.0, 6)), RegionStatus::Boundary);
    }

    #[test]
    fn admissible_examples() {
        let a = admissible_r_interval(&pt(3.0, 3.0, 3)).interval.unwrap();
        assert_abs_diff_eq!(a.lo, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(a.hi, 1.25, epsilon = 1e-15);
        assert!(admissible_r_interval(&pt(3.0, 3.0, 4)).interval.is_none());
        let a = admissible_r_interval(&pt(2.0, 2.0, 3)).interval.unwrap();
        assert_abs_diff_eq!(a.lo, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.hi, 1.5, epsilon = 1e-15);
        let low = admissible_r_interval(&pt(3.0, 3.0, 2));
        assert!(low.unconstrained);
        assert_eq!(low.interval, Some(OpenInterval { lo: 0.0, hi: 2.0 }));
    }

    #[test]
    fn interpolation_exponents() {
        let (theta, zeta) = gn_exponents(&pt(3.0, 3.0, 3), 1.0).unwrap();
        assert_abs_diff_eq!(theta, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(zeta, 0.25, epsilon = 1e-15);
        let (theta, _) = gn_exponents(&pt(3.0, 3.0, 3), 0.75 + 1e-6).unwrap();
        assert!(theta > 0.0 && theta < 1e-5);
        assert!(gn_exponents(&pt(3.0, 3.0, 3), 0.7).is_err());
    }

    #[test]
    fn growth_examples() {
        let g = growth_exponents(&pt(3.0, 3.0, 3), 1.0).unwrap();
        assert_abs_diff_eq!(g.q1, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.p1, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.alpha_r, 1.0 / 6.0, epsilon = 1e-15);
        let g = growth_exponents(&pt(2.0, 2.0, 3), 1.0).unwrap();
        assert_abs_diff_eq!(g.alpha_r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn threshold_examples() {
        assert_abs_diff_eq!(r_thresholds(&pt(2.7, 2.7, 5)).r_pq, 1.0, epsilon = 1e-15);
        let t = r_thresholds(&pt(2.0, 2.0, 3));
        assert_abs_diff_eq!(t.r_lower, 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t.r_upper, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn theorem_examples() {
        assert_eq!(theorem_check(&pt(2.0, 2.0, 3)).unwrap(), RegionStatus::Outside);
        assert_abs_diff_eq!(
            theorem_margin(&pt(2.0, 2.0, 3)).unwrap(),
            7.0 / 6.0 - 4.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(theorem_check(&pt(1.2, 1.2, 3)).unwrap(), RegionStatus::Inside);
        assert_abs_diff_eq!(
            theorem_margin(&pt(1.2, 1.2, 3)).unwrap() + 4.0 / 3.0,
            1.742424242424,
            epsilon = 1e-11
        );
        assert!(matches!(
            theorem_check(&pt(1.2, 1.2, 2)),
            Err(Error::DimensionTooSmall(2))
        ));
        // Near q = 1 at N = 6 the boundary sits at p = 11/7.
        let eps = 1e-9;
        let m = theorem_margin(&pt(11.0 / 7.0, 1.0 + eps, 6)).unwrap();
        assert!(m.abs() < 1e-8);
        assert_abs_diff_eq!(theorem_p_at(1.0, 6.0).unwrap(), 11.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn optimal_r_examples() {
        let o = optimal_r(&pt(2.5, 2.5, 3)).unwrap();
        assert_abs_diff_eq!(o.r, 1.0, epsilon = 1e-15);
        let o = optimal_r(&pt(1.2, 1.2, 3)).unwrap();
        assert_abs_diff_eq!(o.r, 1.0, epsilon = 1e-15);
        let g = growth_exponents(&pt(1.2, 1.2, 3), 1.0).unwrap();
        assert_abs_diff_eq!(2.0 * g.q1, 19.0 / 3.0, epsilon = 1e-13);
        assert!(o.feasible);
        assert!(optimal_r(&pt(3.0, 3.0, 4)).is_none());
    }

    #[test]
    fn bound_curve_flags() {
        let inside = pt(1.2, 1.2, 3);
        let t = bound_curves(&inside, 1.0, 1..=50, BoundConstants::default()).unwrap();
        assert!(t.contradiction);
        assert!(t.crossover.is_some());
        let outside = pt(2.0, 2.0, 3);
        let r = optimal_r(&outside).unwrap().r;
        let t = bound_curves(&outside, r, 1..=50, BoundConstants::default()).unwrap();
        assert!(!t.contradiction);
        // p = q: one upper exponent, compared against 2α_r.
        assert_eq!(t.upper_exponents.0, t.upper_exponents.1);
    }

    #[test]
    fn scan_is_ordered_and_symmetric() {
        let grid: Vec<f64> = (0..20).map(|i| 1.05 + 0.25 * i as f64).collect();
        let rows = region_scan(6, &grid, &grid).unwrap();
        assert_eq!(rows.len(), 400);
        for row in &rows {
            let mirror = &rows[row.j * grid.len() + row.i];
            assert_eq!(row.theorem, mirror.theorem);
            if row.theorem == Some(RegionStatus::Inside) {
                assert_eq!(row.subcritical, RegionStatus::Inside);
            }
        }
        assert!(region_scan(6, &[0.5], &[2.0]).is_err());
    }

    proptest! {
        #[test]
        fn branch_symmetry(p in 1.001f64..12.0, q in 1.001f64..12.0, n in 3u32..11) {
            let a = theorem_margin(&pt(p, q, n)).unwrap();
            let b = theorem_margin(&pt(q, p, n)).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn admissible_iff_subcritical(p in 1.001f64..12.0, q in 1.001f64..12.0, n in 3u32..11) {
            let x = pt(p, q, n);
            let gap = hyperbola_gap(&x);
            prop_assume!(gap.abs() > 1e-12);
            prop_assert_eq!(admissible_r_interval(&x).interval.is_some(), gap > 0.0);
        }

        #[test]
        fn balance_at_r_pq(p in 1.001f64..12.0, q in 1.001f64..12.0, n in 1u32..11) {
            let x = pt(p, q, n);
            let r = r_thresholds(&x).r_pq;
            let g = growth_unchecked(&x, r);
            prop_assert!((g.q1 - g.p1).abs() < 1e-12 * (1.0 + g.q1.abs()));
        }
    }
}
