//! Closed-form and quadrature evaluations of the worked two- and
//! three-bidder instances, and the lookahead ratio for triangle pairs.

use serde::Serialize;

use crate::curves::{BidderProfile, RevenueCurve};
use crate::duplication::{extend_profile, DuplicatePlan};
use crate::error::{DupError, Result};
use crate::exante::solve_exante;
use crate::mechanisms::{Mechanism, PairConstraint};
use crate::simulate::{
    estimate_revenue, expected_order_stat, paired_compare_arms, Arm, Estimate, EstimatorChoice,
};

const QUAD_TOL: f64 = 1e-10;

/// A point mass at 1 (the triangle peaking at `q = 1`) against an
/// equal-revenue bidder. The point-mass bidder's optimal price in the
/// original construction is a limit, so its ex ante revenue enters as the
/// supremum 2 and is never sampled.
pub fn lbhr_profile() -> BidderProfile {
    BidderProfile::with_names(
        vec![
            RevenueCurve::triangle(1.0, 1.0).expect("valid"),
            RevenueCurve::equal_revenue(1.0).expect("valid"),
        ],
        vec![Some("point_mass".into()), Some("equal_revenue".into())],
    )
    .expect("valid profile")
}

/// An equal-revenue bidder and two triangles peaking at `(1/2, 1/2)`.
pub fn n3_profile() -> BidderProfile {
    let half = RevenueCurve::triangle(0.5, 0.5).expect("valid");
    BidderProfile::new(vec![RevenueCurve::equal_revenue(1.0).expect("valid"), half.clone(), half])
        .expect("valid profile")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbHrReport {
    pub exante_opt: f64,
    pub spa_all_duplicates: f64,
    pub spa_dup_bidder1: f64,
    pub spa_dup_bidder2: f64,
}

impl LbHrReport {
    /// Ex ante benchmark over the best single-duplicate revenue.
    pub fn single_duplicate_gap(&self) -> f64 {
        self.exante_opt / self.spa_dup_bidder1.max(self.spa_dup_bidder2)
    }
}

fn spa_with(profile: &BidderProfile, plan: DuplicatePlan) -> Result<f64> {
    let (p, _) = extend_profile(profile, &plan)?;
    expected_order_stat(&p, 2, QUAD_TOL)
}

pub fn example_lbhr() -> Result<LbHrReport> {
    let p = lbhr_profile();
    Ok(LbHrReport {
        exante_opt: solve_exante(&p, 1, 1e-12)?.opt,
        spa_all_duplicates: spa_with(&p, DuplicatePlan::AllOnce { pair_constrained: false })?,
        spa_dup_bidder1: spa_with(&p, DuplicatePlan::SingleOf { i: 0 })?,
        spa_dup_bidder2: spa_with(&p, DuplicatePlan::SingleOf { i: 1 })?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct N3Report {
    pub exante_opt: f64,
    /// Monte Carlo estimate of SPA with one duplicate per bidder.
    pub spa_duplicates: Estimate,
    /// `mean + 4 stderr`, the certified upper end.
    pub spa_duplicates_upper: f64,
    /// Quadrature value of the same revenue, as a second oracle.
    pub spa_duplicates_exact: f64,
}

pub fn example_n3(n_samples: u64, seed: u64) -> Result<N3Report> {
    let p = n3_profile();
    let exante_opt = solve_exante(&p, 1, 1e-9)?.opt;
    let (dup, c) = extend_profile(&p, &DuplicatePlan::AllOnce { pair_constrained: false })?;
    let est = estimate_revenue(&dup, &c, &Mechanism::Spa, n_samples, seed, EstimatorChoice::Auto)?;
    Ok(N3Report {
        exante_opt,
        spa_duplicates_upper: est.upper(4.0),
        spa_duplicates: est,
        spa_duplicates_exact: expected_order_stat(&dup, 2, QUAD_TOL)?,
    })
}

/// Upper bound on SPA revenue with duplicates given that the largest value
/// among the two triangle bidders and their duplicates is `u`.
pub fn n3_conditional_bound(u: f64) -> f64 {
    u + 1.0 / (u + 1.0)
}

/// Lookahead revenue over ex ante revenue for two triangle bidders with
/// peaks `(q1, r1)` and `(q2, r2)`.
pub fn ratio_two_triangles(q1: f64, r1: f64, q2: f64, r2: f64) -> Result<f64> {
    for (q, r) in [(q1, r1), (q2, r2)] {
        if !(q > 0.0 && q <= 1.0) || !(r >= 0.0 && r.is_finite()) {
            return Err(DupError::domain(format!("invalid triangle peak ({q}, {r})")));
        }
    }
    // Bidder 1 is the one with the larger monopoly price.
    let ((q1, r1), (q2, r2)) = if r1 / q1 >= r2 / q2 { ((q1, r1), (q2, r2)) } else { ((q2, r2), (q1, r1)) };
    if r1 + r2 == 0.0 {
        return Err(DupError::domain("both triangles are zero"));
    }
    if r1 == 0.0 {
        return Ok(1.0);
    }
    let alpha = r2 / r1;
    let s = alpha * (1.0 - q1) / (q2 + (1.0 - q1) * alpha);
    Ok((r1 + r2 * s) / (r1 + r2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioMinimum {
    pub ratio: f64,
    pub q1: f64,
    pub alpha: f64,
}

/// Grid minimum of the ratio with `q2 = 1 - q1`, `q1 = (i - 1/2)/N`,
/// `alpha = alpha_max * j/N`.
pub fn min_ratio_two_triangles_in(grid_steps: usize, alpha_max: f64) -> Result<RatioMinimum> {
    if grid_steps < 100 {
        return Err(DupError::domain("grid_steps must be at least 100"));
    }
    if !(alpha_max > 0.0 && alpha_max <= 1.0) {
        return Err(DupError::domain("alpha_max must lie in (0,1]"));
    }
    let n = grid_steps as f64;
    let mut best = RatioMinimum { ratio: f64::INFINITY, q1: f64::NAN, alpha: f64::NAN };
    for i in 1..=grid_steps {
        let q1 = (i as f64 - 0.5) / n;
        for j in 1..=grid_steps {
            let alpha = if j == grid_steps { alpha_max } else { alpha_max * j as f64 / n };
            let r = ratio_two_triangles(q1, 1.0, 1.0 - q1, alpha)?;
            if r < best.ratio {
                best = RatioMinimum { ratio: r, q1, alpha };
            }
        }
    }
    Ok(best)
}

pub fn min_ratio_two_triangles(grid_steps: usize) -> Result<RatioMinimum> {
    min_ratio_two_triangles_in(grid_steps, 1.0)
}

/// Paired estimate of `SPA(replacement) - SPA(original)`, each bidder
/// facing one independent copy of itself. Fails unless `original`
/// dominates `replacement` pointwise.
pub fn spa_flat_diff(
    original: &RevenueCurve,
    replacement: &RevenueCurve,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if !original.dominates(replacement, 1e-12) {
        return Err(DupError::DominanceViolation(
            "replacement curve is not pointwise below the original".into(),
        ));
    }
    let a = BidderProfile::new(vec![replacement.clone(), replacement.clone()])?;
    let b = BidderProfile::new(vec![original.clone(), original.clone()])?;
    let none = PairConstraint::none();
    paired_compare_arms(
        Arm { profile: &a, constraint: &none, mechanism: &Mechanism::Spa },
        Arm { profile: &b, constraint: &none, mechanism: &Mechanism::Spa },
        n_samples,
        seed,
        EstimatorChoice::Auto,
    )
}

/// True iff the dominated replacement earns at most the original's SPA
/// revenue plus three standard errors.
pub fn spa_flat_check(
    original: &RevenueCurve,
    replacement: &RevenueCurve,
    n_samples: u64,
    seed: u64,
) -> Result<bool> {
    let d = spa_flat_diff(original, replacement, n_samples, seed)?;
    Ok(d.mean <= 3.0 * d.stderr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbhr_constants() {
        let r = example_lbhr().unwrap();
        assert!((r.exante_opt - 2.0).abs() < 1e-9);
        assert!((r.spa_all_duplicates - 1.5).abs() < 1e-6);
        assert_eq!(r.spa_dup_bidder1, 1.0);
        assert!((r.spa_dup_bidder2 - 4f64.ln()).abs() < 1e-6);
        assert!((r.single_duplicate_gap() - 2.0 / 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn n3_bound_formula() {
        assert!((n3_conditional_bound(0.9) - 1.426_315_789_5).abs() < 1e-9);
        assert_eq!(n3_conditional_bound(1.0), 1.5);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio_two_triangles(0.5, 0.5, 0.5, 0.5).unwrap(), 0.75);
        let r = ratio_two_triangles(0.3, 1.0, 0.7, 0.5).unwrap();
        assert!((r - 7.0 / 9.0).abs() < 1e-12);
        let r = ratio_two_triangles(0.3, 1.0, 0.7, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        // Order of the arguments does not matter.
        let a = ratio_two_triangles(0.2, 0.3, 0.6, 0.5).unwrap();
        let b = ratio_two_triangles(0.6, 0.5, 0.2, 0.3).unwrap();
        assert_eq!(a, b);
        assert!(ratio_two_triangles(0.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn ratio_grid_minimum() {
        let m = min_ratio_two_triangles(200).unwrap();
        assert_eq!(m.ratio, 0.75);
        assert_eq!(m.alpha, 1.0);
        let m = min_ratio_two_triangles_in(200, 0.5).unwrap();
        assert!((m.ratio - 7.0 / 9.0).abs() < 1e-12);
        assert_eq!(m.alpha, 0.5);
        assert!(min_ratio_two_triangles(10).is_err());
    }

    #[test]
    fn spa_flat() {
        let t = RevenueCurve::triangle(0.5, 0.5).unwrap();
        let d = spa_flat_diff(&t, &t, 10_000, 1).unwrap();
        assert_eq!(d.mean, 0.0);
        let concave = RevenueCurve::piecewise(&[(0.0, 0.0), (0.2, 0.4), (0.6, 0.6), (1.0, 0.0)]).unwrap();
        let inscribed = RevenueCurve::triangle(0.6, 0.6).unwrap();
        let d = spa_flat_diff(&concave, &inscribed, 20_000, 2).unwrap();
        assert!(d.mean <= 0.0);
        assert!(spa_flat_check(&concave, &inscribed, 20_000, 2).unwrap());
        assert!(matches!(
            spa_flat_check(&inscribed, &concave, 1000, 2),
            Err(DupError::DominanceViolation(_))
        ));
    }
}
