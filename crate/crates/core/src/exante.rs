//! The ex ante relaxation: maximize `sum_i Rev_i(q_i)` subject to
//! `sum_i q_i <= k` and `0 <= q_i <= 1`.
//!
//! The program is separable and concave. For a multiplier `lambda` each
//! bidder independently maximizes `Rev_i(q) - lambda * q`, which on a
//! piecewise-linear curve is attained at the breakpoint where the slope
//! crosses `lambda`. The optimal multiplier is one of the segment slopes
//! (or zero), so the dual search bisects over that finite candidate set
//! and is exact.

use serde::Serialize;

use crate::curves::{BidderProfile, RevenueCurve};
use crate::error::{DupError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExAnteSolution {
    pub quantiles: Vec<f64>,
    pub opt: f64,
    pub k: usize,
    pub dual: f64,
}

impl ExAnteSolution {
    pub fn total_quantile(&self) -> f64 {
        self.quantiles.iter().sum()
    }
}

/// Smallest and largest maximizers of `Rev(q) - lambda * q` on `[0,1]`.
fn demand(curve: &RevenueCurve, lambda: f64) -> (f64, f64) {
    let pts = curve.breakpoints();
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut strictly = true;
    for (j, slope) in curve.slopes().enumerate() {
        let right = pts[j + 1].0;
        if slope > lambda && strictly {
            lo = right;
            hi = right;
        } else if slope == lambda {
            strictly = false;
            hi = right;
        } else {
            break;
        }
    }
    (lo, hi)
}

fn min_demand(profile: &BidderProfile, lambda: f64) -> f64 {
    profile.curves().iter().map(|c| demand(c, lambda).0).sum()
}

pub fn solve_exante(profile: &BidderProfile, k: usize, tol: f64) -> Result<ExAnteSolution> {
    if k == 0 {
        return Err(DupError::domain("item count k must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(DupError::domain("tolerance must be positive"));
    }
    let budget = k as f64;

    // Unconstrained peaks (smallest maximizer, lambda = 0) when they fit.
    let mut candidates: Vec<f64> = profile
        .curves()
        .iter()
        .flat_map(|c| c.slopes().filter(|s| *s > 0.0).collect::<Vec<_>>())
        .collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if candidates.iter().any(|c| !c.is_finite()) {
        return Err(DupError::NonConvergence("non-finite slope in profile".into()));
    }

    let lambda = if min_demand(profile, 0.0) <= budget + tol {
        0.0
    } else {
        // min_demand is non-increasing in lambda and is zero at the
        // largest slope; find the smallest candidate where it fits.
        let (mut lo, mut hi) = (0usize, candidates.len() - 1);
        if min_demand(profile, candidates[hi]) > budget + tol {
            return Err(DupError::NonConvergence(
                "demand exceeds budget at the largest multiplier".into(),
            ));
        }
        let mut iterations = 0;
        while hi - lo > 1 {
            iterations += 1;
            if iterations > 128 {
                return Err(DupError::NonConvergence("dual bisection did not close".into()));
            }
            let mid = (lo + hi) / 2;
            if min_demand(profile, candidates[mid]) <= budget + tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        candidates[hi]
    };

    let bounds: Vec<(f64, f64)> = profile.curves().iter().map(|c| demand(c, lambda)).collect();
    let mut quantiles: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    if lambda > 0.0 {
        // Water-fill the residual budget across tied bidders in index order.
        let mut residual = budget - quantiles.iter().sum::<f64>();
        for (q, &(lo, hi)) in quantiles.iter_mut().zip(&bounds) {
            if residual <= 0.0 {
                break;
            }
            let add = (hi - lo).min(residual);
            *q += add;
            residual -= add;
        }
    }
    let opt = profile
        .curves()
        .iter()
        .zip(&quantiles)
        .map(|(c, &q)| c.rev_unchecked(q))
        .sum();
    Ok(ExAnteSolution { quantiles, opt, k, dual: lambda })
}

/// Replace every curve by the triangle peaking at its ex ante quantile.
/// Bidders with zero ex ante revenue become the zero curve.
pub fn exante_triangle_reduction(
    profile: &BidderProfile,
    solution: &ExAnteSolution,
) -> Result<BidderProfile> {
    if solution.quantiles.len() != profile.len() {
        return Err(DupError::ProfileMismatch {
            expected: profile.len(),
            got: solution.quantiles.len(),
        });
    }
    let curves = profile
        .curves()
        .iter()
        .zip(&solution.quantiles)
        .map(|(c, &q)| {
            let r = c.rev_unchecked(q);
            if q > 0.0 && r > 0.0 {
                RevenueCurve::triangle(q, r)
            } else {
                Ok(RevenueCurve::zero())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BidderProfile::with_names(curves, profile.names().to_vec())
}
