//! Regular value distributions represented by their revenue curves in
//! quantile space.
//!
//! A curve is stored as a concave piecewise-linear function through
//! `(quantile, revenue)` breakpoints. The equal-revenue family has an
//! unbounded support and overrides the queries with closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{DupError, Result};

/// Smallest quantile used for curves whose supremum sits at `q -> 0`.
pub const EPS_MIN: f64 = 1e-12;

const SLOPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveKind {
    Triangle { peak_q: f64, peak_r: f64 },
    PiecewiseLinear,
    PointMass { value: f64 },
    /// `F(v) = 1 - 1/(v/scale + 1)`, so `Rev(q) = scale * (1 - q)`.
    EqualRevenueShifted { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueCurve {
    points: Vec<(f64, f64)>,
    // value(q) at each breakpoint; entry 0 holds the limit at q -> 0+.
    values: Vec<f64>,
    kind: CurveKind,
}

impl RevenueCurve {
    /// Triangle through `(0,0)`, `(peak_q, peak_r)`, `(1,0)`. `peak_q = 1`
    /// encodes a point mass at `peak_r`.
    pub fn triangle(peak_q: f64, peak_r: f64) -> Result<Self> {
        if !(peak_q > 0.0 && peak_q <= 1.0) {
            return Err(DupError::domain(format!("triangle peak quantile {peak_q} not in (0,1]")));
        }
        if !(peak_r > 0.0 && peak_r.is_finite()) {
            return Err(DupError::domain(format!("triangle peak revenue {peak_r} must be positive")));
        }
        let points = if peak_q == 1.0 {
            vec![(0.0, 0.0), (1.0, peak_r)]
        } else {
            vec![(0.0, 0.0), (peak_q, peak_r), (1.0, 0.0)]
        };
        Self::build(points, CurveKind::Triangle { peak_q, peak_r })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(DupError::domain(format!("point mass value {value} must be positive")));
        }
        Self::build(vec![(0.0, 0.0), (1.0, value)], CurveKind::PointMass { value })
    }

    pub fn equal_revenue(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DupError::domain(format!("equal-revenue scale {scale} must be positive")));
        }
        let points = vec![(0.0, 0.0), (EPS_MIN, scale * (1.0 - EPS_MIN)), (1.0, 0.0)];
        Self::build(points, CurveKind::EqualRevenueShifted { scale })
    }

    /// General concave curve. Points must be sorted by strictly increasing
    /// quantile, start at `(0, 0)` and end at `q = 1`.
    pub fn piecewise(points: &[(f64, f64)]) -> Result<Self> {
        Self::build(points.to_vec(), CurveKind::PiecewiseLinear)
    }

    /// The all-zero curve (a bidder who never contributes revenue).
    pub fn zero() -> Self {
        Self::build(vec![(0.0, 0.0), (1.0, 0.0)], CurveKind::PiecewiseLinear)
            .expect("zero curve is valid")
    }

    fn build(points: Vec<(f64, f64)>, kind: CurveKind) -> Result<Self> {
        if points.len() < 2 {
            return Err(DupError::domain("a curve needs at least two breakpoints"));
        }
        for &(q, r) in &points {
            if !(0.0..=1.0).contains(&q) {
                return Err(DupError::domain(format!("quantile {q} outside [0,1]")));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return Err(DupError::domain(format!("revenue {r} must be finite and non-negative")));
            }
        }
        if points[0] != (0.0, 0.0) {
            return Err(DupError::domain("first breakpoint must be (0, 0)"));
        }
        if points[points.len() - 1].0 != 1.0 {
            return Err(DupError::domain("last breakpoint must have quantile 1"));
        }
        for (j, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(DupError::domain(format!(
                    "quantiles must be strictly increasing at breakpoint {}",
                    j + 1
                )));
            }
        }
        let slopes: Vec<f64> = points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        // The equal-revenue representation has a 1e12 slope on its first
        // segment, so the tolerance is relative.
        for j in 1..slopes.len() {
            let (left, right) = (slopes[j - 1], slopes[j]);
            if right > left + SLOPE_TOL * left.abs().max(right.abs()).max(1.0) {
                return Err(DupError::ConcavityViolation { curve: String::new(), index: j, left, right });
            }
        }
        let mut values = Vec::with_capacity(points.len());
        values.push(slopes[0]);
        for &(q, r) in &points[1..] {
            values.push(r / q);
        }
        Ok(Self { points, values, kind })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self.kind, CurveKind::EqualRevenueShifted { .. })
    }

    /// Slopes of the linear pieces, left to right.
    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
    }

    fn segment_of(&self, q: f64) -> usize {
        // Largest j with points[j].0 <= q, capped so j + 1 stays in range.
        let j = self.points.partition_point(|p| p.0 <= q);
        j.saturating_sub(1).min(self.points.len() - 2)
    }

    fn segment_slope(&self, j: usize) -> f64 {
        let (qa, ra) = self.points[j];
        let (qb, rb) = self.points[j + 1];
        (rb - ra) / (qb - qa)
    }

    fn check_q(q: f64) -> Result<()> {
        if (0.0..=1.0).contains(&q) {
            Ok(())
        } else {
            Err(DupError::domain(format!("quantile {q} outside [0,1]")))
        }
    }

    /// `Rev(q)`.
    pub fn rev(&self, q: f64) -> Result<f64> {
        Self::check_q(q)?;
        Ok(self.rev_unchecked(q))
    }

    pub(crate) fn rev_unchecked(&self, q: f64) -> f64 {
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return if q <= 0.0 { 0.0 } else { scale * (1.0 - q) };
        }
        let j = self.segment_of(q);
        let (qa, ra) = self.points[j];
        let (qb, rb) = self.points[j + 1];
        if q == qb {
            return rb;
        }
        ra + (rb - ra) * (q - qa) / (qb - qa)
    }

    /// `val(q) = F^{-1}(1 - q)`. At `q = 0` bounded curves return the top
    /// of their support; unbounded curves are a domain error (see
    /// [`RevenueCurve::value_or_inf`]).
    pub fn value(&self, q: f64) -> Result<f64> {
        Self::check_q(q)?;
        if q == 0.0 && self.is_unbounded() {
            return Err(DupError::domain("value at q = 0 is infinite for an unbounded curve"));
        }
        Ok(self.value_or_inf(q))
    }

    /// Like [`RevenueCurve::value`] but returns `f64::INFINITY` for the
    /// `q -> 0` limit of an unbounded curve.
    pub fn value_or_inf(&self, q: f64) -> f64 {
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return if q <= 0.0 { f64::INFINITY } else { scale * (1.0 / q - 1.0) };
        }
        if q <= 0.0 {
            return self.values[0];
        }
        let j = self.segment_of(q);
        if q == self.points[j + 1].0 {
            return self.values[j + 1];
        }
        if j == 0 {
            // first piece passes through the origin: constant value
            return self.values[0];
        }
        self.rev_unchecked(q) / q
    }

    /// Supremum of the support.
    pub fn top_value(&self) -> f64 {
        self.value_or_inf(0.0)
    }

    /// Largest quantile `q` with `value(q) >= v`, i.e. `Pr[value >= v]`.
    pub fn quantile_of_value(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(DupError::domain(format!("value {v} must be non-negative")));
        }
        Ok(self.sell_prob(v))
    }

    /// `Pr[value >= v]` without argument checks; negative `v` gives 1.
    pub(crate) fn sell_prob(&self, v: f64) -> f64 {
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return if v <= 0.0 { 1.0 } else { scale / (v + scale) };
        }
        let last = self.values.len() - 1;
        if v <= self.values[last] {
            return 1.0;
        }
        let above = self.values[1..].partition_point(|&x| x >= v);
        if above == 0 {
            return 0.0;
        }
        let j = above;
        let (qa, ra) = self.points[j];
        let (qb, _) = self.points[j + 1];
        let s = self.segment_slope(j);
        let c = ra - s * qa;
        (c / (v - s)).clamp(qa, qb)
    }

    /// Values where `sell_prob` is not smooth: the atoms and kinks of the
    /// distribution.
    pub(crate) fn kink_values(&self) -> Vec<f64> {
        if self.is_unbounded() {
            return vec![0.0];
        }
        self.values.clone()
    }

    /// `(q*, R*)`: the peak of the curve, smallest quantile on ties.
    pub fn monopoly(&self) -> (f64, f64) {
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return (EPS_MIN, scale);
        }
        let mut best = self.points[0];
        for &p in &self.points[1..] {
            if p.1 > best.1 {
                best = p;
            }
        }
        best
    }

    /// Monopoly reserve `val(q*)`.
    pub fn monopoly_reserve(&self) -> f64 {
        let (q, _) = self.monopoly();
        self.value_or_inf(q)
    }

    /// Right-derivative of `Rev` at an interior quantile.
    pub fn virtual_value(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(DupError::domain(format!("virtual value needs q in (0,1), got {q}")));
        }
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return Ok(-scale);
        }
        Ok(self.segment_slope(self.segment_of(q)))
    }

    /// Virtual value of a realized bid. Bids on the top atom (and above the
    /// support) take the slope of the rising first piece; other bids take
    /// the right-derivative at their quantile.
    pub fn virtual_value_of_bid(&self, v: f64) -> f64 {
        if let CurveKind::EqualRevenueShifted { scale } = self.kind {
            return -scale;
        }
        let atom = self.values[0];
        if v >= atom * (1.0 - 1e-12) {
            return self.segment_slope(0);
        }
        let q = self.sell_prob(v);
        if q >= 1.0 {
            return self.segment_slope(self.points.len() - 2);
        }
        self.segment_slope(self.segment_of(q))
    }

    /// Inverse-quantile sampling: `u` is the draw's quantile.
    pub fn sample_value(&self, u: f64) -> f64 {
        if self.is_unbounded() {
            self.value_or_inf(u.max(EPS_MIN))
        } else {
            self.value_or_inf(u)
        }
    }

    /// Maximizer of `Rev` on `[lo, hi]` (smallest maximizer on ties).
    pub fn max_on_interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(lo, 1.0);
        let mut best = (lo, self.rev_unchecked(lo));
        for &(q, _) in &self.points {
            if q > lo && q < hi {
                let r = self.rev_unchecked(q);
                if r > best.1 {
                    best = (q, r);
                }
            }
        }
        let r_hi = self.rev_unchecked(hi);
        if r_hi > best.1 {
            best = (hi, r_hi);
        }
        best
    }

    /// True when `self(q) >= other(q) - tol` for every quantile.
    pub fn dominates(&self, other: &RevenueCurve, tol: f64) -> bool {
        // Both curves are linear between the union of their breakpoints on
        // (0, 1], so checking those points (plus EPS_MIN) is exact.
        let mut grid: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .map(|p| p.0)
            .chain(std::iter::once(EPS_MIN))
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid.iter()
            .all(|&q| self.rev_unchecked(q) >= other.rev_unchecked(q) - tol)
    }
}

/// An ordered set of bidders, one revenue curve each.
#[derive(Debug, Clone, PartialEq)]
pub struct BidderProfile {
    curves: Vec<RevenueCurve>,
    names: Vec<Option<String>>,
}

impl BidderProfile {
    pub fn new(curves: Vec<RevenueCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(DupError::domain("a profile needs at least one bidder"));
        }
        let names = vec![None; curves.len()];
        Ok(Self { curves, names })
    }

    pub fn with_names(curves: Vec<RevenueCurve>, names: Vec<Option<String>>) -> Result<Self> {
        if names.len() != curves.len() {
            return Err(DupError::ProfileMismatch { expected: curves.len(), got: names.len() });
        }
        let mut p = Self::new(curves)?;
        p.names = names;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curves(&self) -> &[RevenueCurve] {
        &self.curves
    }

    pub fn curve(&self, i: usize) -> Result<&RevenueCurve> {
        self.curves.get(i).ok_or(DupError::Index { index: i, len: self.curves.len() })
    }

    pub fn names(&self) -> &[Option<String>] {
        &self.names
    }

    pub fn has_unbounded(&self) -> bool {
        self.curves.iter().any(RevenueCurve::is_unbounded)
    }

    pub(crate) fn push(&mut self, curve: RevenueCurve, name: Option<String>) {
        self.curves.push(curve);
        self.names.push(name);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(q: f64, r: f64) -> RevenueCurve {
        RevenueCurve::triangle(q, r).unwrap()
    }

    #[test]
    fn triangle_queries() {
        let c = tri(0.5, 0.5);
        assert!((c.rev(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((c.rev(0.75).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(c.rev(0.0).unwrap(), 0.0);
        assert!((c.value(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.value(1.0).unwrap(), 0.0);
        assert!((c.quantile_of_value(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.monopoly(), (0.5, 0.5));
        assert_eq!(c.monopoly_reserve(), 1.0);
        assert!((c.sample_value(0.75) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_rejects_bad_peaks() {
        assert!(RevenueCurve::triangle(0.0, 1.0).is_err());
        assert!(RevenueCurve::triangle(0.5, 0.0).is_err());
        assert!(RevenueCurve::triangle(1.2, 1.0).is_err());
    }

    #[test]
    fn point_mass_triangle() {
        let c = tri(1.0, 1.0);
        for q in [0.1, 0.3, 0.9, 1.0] {
            assert!((c.rev(q).unwrap() - q).abs() < 1e-15);
        }
        assert_eq!(c.value(0.3).unwrap(), 1.0);
        assert_eq!(c.quantile_of_value(1.0).unwrap(), 1.0);
        assert_eq!(c.quantile_of_value(1.0001).unwrap(), 0.0);
        assert_eq!(c.monopoly(), (1.0, 1.0));
        assert_eq!(c.monopoly_reserve(), 1.0);
        for u in [0.0, 0.2, 0.999] {
            assert_eq!(c.sample_value(u), 1.0);
        }
        assert_eq!(RevenueCurve::point_mass(1.0).unwrap().breakpoints(), c.breakpoints());
    }

    #[test]
    fn equal_revenue_closed_forms() {
        let c = RevenueCurve::equal_revenue(1.0).unwrap();
        assert!((c.rev(0.4).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(c.value(0.5).unwrap(), 1.0);
        assert_eq!(c.quantile_of_value(1.0).unwrap(), 0.5);
        assert_eq!(c.sample_value(0.5), 1.0);
        assert!(c.value(0.0).is_err());
        assert_eq!(c.value_or_inf(0.0), f64::INFINITY);
        let (q, r) = c.monopoly();
        assert_eq!(q, EPS_MIN);
        assert_eq!(r, 1.0);
        assert!(c.sample_value(0.0).is_finite());
    }

    #[test]
    fn piecewise_validation() {
        let a = RevenueCurve::piecewise(&[(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]).unwrap();
        assert_eq!(a.breakpoints(), tri(0.5, 0.5).breakpoints());
        assert!(RevenueCurve::piecewise(&[(0.0, 0.0), (0.3, 0.3), (0.6, 0.5), (1.0, 0.0)]).is_ok());
        let err = RevenueCurve::piecewise(&[(0.0, 0.0), (0.5, 0.2), (0.6, 0.5), (1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, DupError::ConcavityViolation { index: 1, .. }));
        assert!(matches!(
            RevenueCurve::piecewise(&[(0.0, 0.0), (1.5, 0.2)]),
            Err(DupError::Domain(_))
        ));
        assert!(matches!(
            RevenueCurve::piecewise(&[(0.0, 0.0), (0.5, -0.2), (1.0, 0.0)]),
            Err(DupError::Domain(_))
        ));
    }

    #[test]
    fn rev_rejects_out_of_range() {
        let c = tri(0.5, 0.5);
        assert!(c.rev(-0.1).is_err());
        assert!(c.rev(1.1).is_err());
    }

    #[test]
    fn virtual_values() {
        let c = tri(0.5, 0.5);
        assert_eq!(c.virtual_value(0.25).unwrap(), 1.0);
        assert_eq!(c.virtual_value(0.75).unwrap(), -1.0);
        assert_eq!(c.virtual_value(0.5).unwrap(), -1.0);
        assert!(c.virtual_value(0.0).is_err());
        assert!(c.virtual_value(1.0).is_err());
        assert_eq!(c.virtual_value_of_bid(1.0), 1.0);
        assert_eq!(c.virtual_value_of_bid(0.4), -1.0);
    }

    #[test]
    fn max_on_interval_concave() {
        let c = tri(0.5, 0.5);
        assert_eq!(c.max_on_interval(0.6, 1.0), (0.6, c.rev(0.6).unwrap()));
        assert_eq!(c.max_on_interval(0.2, 0.9), (0.5, 0.5));
        assert_eq!(c.max_on_interval(0.1, 0.3), (0.3, c.rev(0.3).unwrap()));
    }

    #[test]
    fn dominance_checks() {
        let big = tri(0.5, 0.5);
        let small = tri(0.5, 0.25);
        assert!(big.dominates(&small, 0.0));
        assert!(!small.dominates(&big, 0.0));
        let er = RevenueCurve::equal_revenue(1.0).unwrap();
        assert!(er.dominates(&tri(0.3, 0.7), 0.0));
    }
}
