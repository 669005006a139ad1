//! Case classifiers for the two structural lemmas. Every returned case
//! carries a witness that [`LemmaCase::recertify`] re-checks directly
//! against the curves.

use serde::Serialize;

use super::bounds::{check_k_hypothesis, high_mass};
use super::poisson::PoissonBinomial;
use crate::curves::BidderProfile;
use crate::error::{DupError, Result};
use crate::exante::ExAnteSolution;

const CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    /// Bidders whose value at quantile `beta` is at least `threshold`.
    HighAtBeta { bidders: Vec<usize>, beta: f64, threshold: f64 },
    /// `sum_i Pr[v_i >= threshold] >= required`.
    QuantileMass { quantiles: Vec<f64>, threshold: f64, sum: f64, required: f64 },
    /// Set `H`, `|H| <= k`, with `val_i(beta) >= threshold` for `i` in `H`
    /// and `sum_H Rev_i(q_i) >= required`, each `q_i >= beta`.
    RevenueSet {
        bidders: Vec<usize>,
        quantiles: Vec<f64>,
        beta: f64,
        threshold: f64,
        revenue: f64,
        required: f64,
        k: usize,
    },
    /// `Pr[at least k + 1 bids >= threshold] >= 1/2`, computed exactly.
    ManyHigh { threshold: f64, k: usize, probability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCase {
    pub which: CaseId,
    pub witness: Witness,
}

impl LemmaCase {
    /// Re-check the witness's defining inequality from scratch.
    pub fn recertify(&self, profile: &BidderProfile) -> bool {
        let curves = profile.curves();
        match &self.witness {
            Witness::HighAtBeta { bidders, beta, threshold } => {
                !bidders.is_empty()
                    && bidders.iter().all(|&i| {
                        i < curves.len()
                            && curves[i].value_or_inf(*beta) >= threshold * (1.0 - CERT_TOL)
                    })
            }
            Witness::QuantileMass { threshold, required, .. } => {
                let sum: f64 = curves.iter().map(|c| c.sell_prob(*threshold)).sum();
                sum >= required * (1.0 - CERT_TOL)
            }
            Witness::RevenueSet { bidders, quantiles, beta, threshold, required, k, .. } => {
                if bidders.len() > *k || bidders.len() != quantiles.len() {
                    return false;
                }
                let mut revenue = 0.0;
                for (&i, &q) in bidders.iter().zip(quantiles) {
                    if i >= curves.len() || q < *beta || q > 1.0 {
                        return false;
                    }
                    if curves[i].value_or_inf(*beta) < threshold * (1.0 - CERT_TOL) {
                        return false;
                    }
                    revenue += curves[i].rev_unchecked(q);
                }
                revenue >= required * (1.0 - CERT_TOL)
            }
            Witness::ManyHigh { threshold, k, .. } => {
                let probs: Vec<f64> = curves.iter().map(|c| c.sell_prob(*threshold)).collect();
                match PoissonBinomial::new(&probs) {
                    Ok(pb) => pb.tail(k + 1) >= 0.5 - CERT_TOL,
                    Err(_) => false,
                }
            }
        }
    }
}

fn check_solution(profile: &BidderProfile, exante: &ExAnteSolution) -> Result<()> {
    if exante.quantiles.len() != profile.len() {
        return Err(DupError::ProfileMismatch {
            expected: profile.len(),
            got: exante.quantiles.len(),
        });
    }
    Ok(())
}

/// Single-item lemma: either some bidder has `val_i(beta) >= alpha OPT`,
/// or `sum_i q_i(alpha OPT) >= (1 - alpha)/alpha (1 - beta)`.
pub fn classify_single(
    profile: &BidderProfile,
    alpha: f64,
    beta: f64,
    exante: &ExAnteSolution,
) -> Result<LemmaCase> {
    for (name, x) in [("alpha", alpha), ("beta", beta)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(DupError::hypothesis(format!("{name} = {x} must lie in (0,1)")));
        }
    }
    check_solution(profile, exante)?;
    let threshold = alpha * exante.opt;
    let high: Vec<usize> = profile
        .curves()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.value_or_inf(beta) >= threshold)
        .map(|(i, _)| i)
        .collect();
    if !high.is_empty() {
        return Ok(LemmaCase {
            which: CaseId::Case1,
            witness: Witness::HighAtBeta { bidders: high, beta, threshold },
        });
    }
    let quantiles: Vec<f64> = profile.curves().iter().map(|c| c.sell_prob(threshold)).collect();
    let sum: f64 = quantiles.iter().sum();
    let required = high_mass(alpha, beta);
    if sum >= required * (1.0 - CERT_TOL) {
        Ok(LemmaCase {
            which: CaseId::Case2,
            witness: Witness::QuantileMass { quantiles, threshold, sum, required },
        })
    } else {
        Err(DupError::LemmaViolation(format!(
            "no bidder is high at beta and quantile mass {sum:.6} < {required:.6}"
        )))
    }
}

/// k-item lemma (k >= 2): returns the first of its three statements that
/// holds, in order.
pub fn classify_k(
    profile: &BidderProfile,
    k: usize,
    beta: f64,
    gamma: f64,
    delta: f64,
    exante: &ExAnteSolution,
) -> Result<LemmaCase> {
    check_k_hypothesis(beta, gamma, delta)?;
    if k < 2 {
        return Err(DupError::hypothesis(format!("k = {k}: the k-item lemma needs k >= 2")));
    }
    check_solution(profile, exante)?;
    let curves = profile.curves();
    let opt = exante.opt;
    let threshold = gamma / k as f64 * opt;
    let required = delta * opt;
    let high_at_beta = |i: usize| curves[i].value_or_inf(beta) >= threshold;

    // Statement 1, first with the quantiles built as in the lemma's proof:
    // for S = {i : val_i(qbar_i) >= threshold},
    //   q_i' = qbar_i                          if qbar_i > beta
    //        = min(beta, q_i(threshold))       otherwise,
    // restricted to S' = {i in S : val_i(beta) >= threshold}.
    let mut proof_set = Vec::new();
    let mut proof_q = Vec::new();
    for (i, (c, &qbar)) in curves.iter().zip(&exante.quantiles).enumerate() {
        if c.value_or_inf(qbar) < threshold || !high_at_beta(i) {
            continue;
        }
        let q = if qbar > beta { qbar } else { beta.min(c.sell_prob(threshold)) };
        proof_set.push(i);
        proof_q.push(q.max(beta));
    }
    if proof_set.len() <= k {
        let revenue: f64 = proof_set
            .iter()
            .zip(&proof_q)
            .map(|(&i, &q)| curves[i].rev_unchecked(q))
            .sum();
        if !proof_set.is_empty() && revenue >= required {
            return Ok(LemmaCase {
                which: CaseId::Case1,
                witness: Witness::RevenueSet {
                    bidders: proof_set,
                    quantiles: proof_q,
                    beta,
                    threshold,
                    revenue,
                    required,
                    k,
                },
            });
        }
    }

    // Statement 1 with the best witness: the k high bidders with the most
    // revenue available on [beta, 1].
    let high: Vec<usize> = (0..curves.len()).filter(|&i| high_at_beta(i)).collect();
    let mut best: Vec<(usize, f64, f64)> = high
        .iter()
        .map(|&i| {
            let (q, r) = curves[i].max_on_interval(beta, 1.0);
            (i, q, r)
        })
        .collect();
    best.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    best.truncate(k);
    let revenue: f64 = best.iter().map(|b| b.2).sum();
    if !best.is_empty() && revenue >= required {
        return Ok(LemmaCase {
            which: CaseId::Case1,
            witness: Witness::RevenueSet {
                bidders: best.iter().map(|b| b.0).collect(),
                quantiles: best.iter().map(|b| b.1).collect(),
                beta,
                threshold,
                revenue,
                required,
                k,
            },
        });
    }

    // Statement 2.
    if high.len() >= k {
        return Ok(LemmaCase {
            which: CaseId::Case2,
            witness: Witness::HighAtBeta { bidders: high[..k].to_vec(), beta, threshold },
        });
    }

    // Statement 3, exactly.
    let probs: Vec<f64> = curves.iter().map(|c| c.sell_prob(threshold)).collect();
    let probability = PoissonBinomial::new(&probs)?.tail(k + 1);
    if probability >= 0.5 {
        return Ok(LemmaCase {
            which: CaseId::Case3,
            witness: Witness::ManyHigh { threshold, k, probability },
        });
    }
    Err(DupError::LemmaViolation(format!(
        "none of the three statements holds (Pr[>= k+1 high] = {probability:.6})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::RevenueCurve;
    use crate::exante::solve_exante;

    fn tri(q: f64, r: f64) -> RevenueCurve {
        RevenueCurve::triangle(q, r).unwrap()
    }

    fn solved(curves: Vec<RevenueCurve>, k: usize) -> (BidderProfile, ExAnteSolution) {
        let p = BidderProfile::new(curves).unwrap();
        let s = solve_exante(&p, k, 1e-9).unwrap();
        (p, s)
    }

    #[test]
    fn single_case1_on_lbhr() {
        let (p, s) = solved(vec![tri(1.0, 1.0), RevenueCurve::equal_revenue(1.0).unwrap()], 1);
        let c = classify_single(&p, 0.27, 0.4, &s).unwrap();
        assert_eq!(c.which, CaseId::Case1);
        match &c.witness {
            Witness::HighAtBeta { bidders, .. } => assert_eq!(bidders, &vec![0, 1]),
            w => panic!("unexpected witness {w:?}"),
        }
        assert!(c.recertify(&p));
    }

    #[test]
    fn single_case2_on_small_triangles() {
        let (p, s) = solved(vec![tri(0.1, 0.1); 10], 1);
        assert!((s.opt - 1.0).abs() < 1e-12);
        let c = classify_single(&p, 0.27, 0.4, &s).unwrap();
        assert_eq!(c.which, CaseId::Case2);
        match &c.witness {
            Witness::QuantileMass { sum, required, .. } => {
                // 10 * 0.1 / (0.1 + 0.27 * 0.9)
                assert!((sum - 1.0 / 0.343).abs() < 1e-9);
                assert!((required - 0.73 / 0.27 * 0.6).abs() < 1e-12);
            }
            w => panic!("unexpected witness {w:?}"),
        }
        assert!(c.recertify(&p));
    }

    #[test]
    fn single_case1_one_bidder() {
        let (p, s) = solved(vec![tri(0.5, 0.5)], 1);
        let c = classify_single(&p, 0.1, 0.9, &s).unwrap();
        assert_eq!(c.which, CaseId::Case1);
    }

    #[test]
    fn k_rejects_bad_constants() {
        let (p, s) = solved(vec![tri(0.5, 0.5); 3], 2);
        assert!(matches!(
            classify_k(&p, 2, 0.9, 0.5, 0.5, &s),
            Err(DupError::HypothesisViolated(_))
        ));
        assert!(matches!(
            classify_k(&p, 1, 0.5, 0.2, 0.1, &s),
            Err(DupError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn k_big_and_tiny() {
        let mut curves = vec![tri(0.6, 1.0), tri(0.5, 0.8)];
        curves.extend(std::iter::repeat_n(tri(0.3, 0.01), 8));
        let (p, s) = solved(curves, 2);
        let c = classify_k(&p, 2, 0.5, 0.2, 0.1, &s).unwrap();
        assert!(matches!(c.which, CaseId::Case1 | CaseId::Case2));
        assert!(c.recertify(&p));
    }

    #[test]
    fn k_many_small_bidders_case3() {
        let (p, s) = solved(vec![tri(0.1, 0.02); 40], 2);
        assert!((s.opt - 0.4).abs() < 1e-12);
        let c = classify_k(&p, 2, 0.5, 0.2, 0.1, &s).unwrap();
        assert_eq!(c.which, CaseId::Case3);
        match c.witness {
            Witness::ManyHigh { probability, .. } => assert!(probability >= 0.5),
            ref w => panic!("unexpected witness {w:?}"),
        }
        assert!(c.recertify(&p));
    }
}
