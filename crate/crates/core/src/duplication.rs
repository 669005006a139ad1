//! Duplicate environments and the rules for choosing whom to duplicate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::BidderProfile;
use crate::error::{DupError, Result};
use crate::mechanisms::PairConstraint;
use crate::simulate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePlan {
    SingleOf { i: usize },
    KCopiesOf { i: usize, k: usize },
    SetOnce { indices: Vec<usize>, pair_constrained: bool },
    AllOnce { pair_constrained: bool },
}

/// Which single-bidder plan [`best_single_duplicate`] searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    Single,
    KCopies(usize),
}

impl PlanKind {
    pub fn plan(self, i: usize) -> DuplicatePlan {
        match self {
            PlanKind::Single => DuplicatePlan::SingleOf { i },
            PlanKind::KCopies(k) => DuplicatePlan::KCopiesOf { i, k },
        }
    }
}

/// Appends the duplicates after the originals, in plan order. Each pair
/// `(original, duplicate)` is recorded when the plan is pair-constrained.
pub fn extend_profile(
    profile: &BidderProfile,
    plan: &DuplicatePlan,
) -> Result<(BidderProfile, PairConstraint)> {
    let n = profile.len();
    let check = |i: usize| {
        if i < n {
            Ok(i)
        } else {
            Err(DupError::Index { index: i, len: n })
        }
    };
    let (sources, constrained): (Vec<usize>, bool) = match plan {
        DuplicatePlan::SingleOf { i } => (vec![check(*i)?], false),
        DuplicatePlan::KCopiesOf { i, k } => {
            if *k == 0 {
                return Err(DupError::domain("KCopiesOf needs k >= 1"));
            }
            (vec![check(*i)?; *k], false)
        }
        DuplicatePlan::SetOnce { indices, pair_constrained } => {
            let mut seen = vec![false; n];
            for &i in indices {
                if std::mem::replace(&mut seen[check(i)?], true) {
                    return Err(DupError::domain(format!("bidder {i} listed twice in SetOnce")));
                }
            }
            (indices.clone(), *pair_constrained)
        }
        DuplicatePlan::AllOnce { pair_constrained } => ((0..n).collect(), *pair_constrained),
    };
    let mut extended = profile.clone();
    for &i in &sources {
        extended.push(profile.curves()[i].clone(), profile.names()[i].clone());
    }
    let constraint = if constrained {
        let pairs = sources.iter().enumerate().map(|(j, &i)| (i, n + j)).collect();
        PairConstraint::new(pairs, extended.len())?
    } else {
        PairConstraint::none()
    };
    Ok((extended, constraint))
}

/// First index of the largest entry.
fn first_argmax(xs: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in xs.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|b| b.0)
}

/// Indices of the `k` largest entries, ties to the lower index, returned
/// in increasing index order.
fn top_k(xs: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Duplicate the bidder with the largest `Rev_i(beta)`.
pub fn select_by_beta(profile: &BidderProfile, beta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DupError::domain(format!("beta = {beta} must lie in (0,1)")));
    }
    first_argmax(profile.curves().iter().map(|c| c.rev_unchecked(beta)))
        .ok_or_else(|| DupError::domain("empty profile"))
}

/// Argmax of oracle reports `(Rev_i(beta'_i), beta'_i)`.
pub fn select_by_noisy_beta(noisy_revs: &[(f64, f64)]) -> Result<usize> {
    first_argmax(noisy_revs.iter().map(|r| r.0)).ok_or_else(|| DupError::domain("no reports"))
}

/// Duplicate the bidder with the largest observed sample.
pub fn select_by_sample(profile: &BidderProfile, samples: &[f64]) -> Result<usize> {
    if samples.len() != profile.len() {
        return Err(DupError::ProfileMismatch { expected: profile.len(), got: samples.len() });
    }
    first_argmax(samples.iter().copied()).ok_or_else(|| DupError::domain("empty profile"))
}

/// The `k` bidders with the largest reported revenues.
pub fn select_k_set_noisy(noisy_revs: &[(f64, f64)], k: usize) -> Result<Vec<usize>> {
    if k > noisy_revs.len() {
        return Err(DupError::domain(format!(
            "k = {k} exceeds the number of bidders {}",
            noisy_revs.len()
        )));
    }
    let revs: Vec<f64> = noisy_revs.iter().map(|r| r.0).collect();
    Ok(top_k(&revs, k))
}

/// k-independent choice: the bidder maximizing `max_{q in [beta,1]} Rev_i(q)`.
pub fn select_k_independent(profile: &BidderProfile, beta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DupError::domain(format!("beta = {beta} must lie in (0,1)")));
    }
    first_argmax(profile.curves().iter().map(|c| c.max_on_interval(beta, 1.0).1))
        .ok_or_else(|| DupError::domain("empty profile"))
}

/// Simulated revenue oracle: bidder `i` reports `(Rev_i(beta'_i), beta'_i)`
/// with `beta'_i` uniform on `[beta(1-eps), beta(1+eps)]`, clipped to (0,1).
pub fn noisy_reports(profile: &BidderProfile, beta: f64, eps: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(beta > 0.0 && beta < 1.0) || !(0.0..1.0).contains(&eps) {
        return Err(DupError::domain(format!("need beta in (0,1), eps in [0,1); got {beta}, {eps}")));
    }
    let lo = beta * (1.0 - eps);
    let hi = (beta * (1.0 + eps)).min(1.0 - f64::EPSILON);
    Ok(profile
        .curves()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let b = lo + (hi - lo) * rng::uniform(seed, 0, i as u64);
            (c.rev_unchecked(b), b)
        })
        .collect())
}

/// Exhaustive search over which bidder to duplicate. Candidates are
/// evaluated in parallel; ties go to the lowest index.
pub fn best_single_duplicate<F>(
    profile: &BidderProfile,
    evaluator: F,
    plan_kind: PlanKind,
) -> Result<(usize, f64)>
where
    F: Fn(&BidderProfile, &PairConstraint) -> Result<f64> + Sync,
{
    if profile.is_empty() {
        return Err(DupError::domain("empty profile"));
    }
    let revenues = (0..profile.len())
        .into_par_iter()
        .map(|i| {
            let (p, c) = extend_profile(profile, &plan_kind.plan(i))?;
            evaluator(&p, &c)
        })
        .collect::<Result<Vec<f64>>>()?;
    let i = first_argmax(revenues.iter().copied()).expect("non-empty");
    Ok((i, revenues[i]))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&j| cur[j] < n - k + j) else {
            return out;
        };
        cur[pos] += 1;
        for j in pos + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Exhaustive search over sets of `k` bidders to duplicate once each.
pub fn best_k_subset<F>(
    profile: &BidderProfile,
    k: usize,
    pair_constrained: bool,
    evaluator: F,
) -> Result<(Vec<usize>, f64)>
where
    F: Fn(&BidderProfile, &PairConstraint) -> Result<f64> + Sync,
{
    if k == 0 || k > profile.len() {
        return Err(DupError::domain(format!("need 1 <= k <= n, got k = {k}")));
    }
    let sets = k_subsets(profile.len(), k);
    let revenues = sets
        .par_iter()
        .map(|s| {
            let plan = DuplicatePlan::SetOnce { indices: s.clone(), pair_constrained };
            let (p, c) = extend_profile(profile, &plan)?;
            evaluator(&p, &c)
        })
        .collect::<Result<Vec<f64>>>()?;
    let j = first_argmax(revenues.iter().copied()).expect("non-empty");
    Ok((sets[j].clone(), revenues[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::RevenueCurve;
    use crate::simulate::expected_order_stat;

    fn tri(q: f64, r: f64) -> RevenueCurve {
        RevenueCurve::triangle(q, r).unwrap()
    }

    fn lbhr() -> BidderProfile {
        BidderProfile::new(vec![tri(1.0, 1.0), RevenueCurve::equal_revenue(1.0).unwrap()]).unwrap()
    }

    #[test]
    fn extend_examples() {
        let p = BidderProfile::new(vec![tri(0.5, 0.5), tri(0.2, 0.9)]).unwrap();
        let (e, c) = extend_profile(&p, &DuplicatePlan::SingleOf { i: 1 }).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.curves()[2], e.curves()[1]);
        assert!(c.is_empty());

        let (e, c) =
            extend_profile(&p, &DuplicatePlan::AllOnce { pair_constrained: true }).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(c.pairs(), &[(0, 2), (1, 3)]);

        let one = BidderProfile::new(vec![tri(0.5, 0.5)]).unwrap();
        let (e, _) = extend_profile(&one, &DuplicatePlan::KCopiesOf { i: 0, k: 3 }).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.curves().iter().all(|c| *c == one.curves()[0]));

        assert!(matches!(
            extend_profile(&p, &DuplicatePlan::SingleOf { i: 2 }),
            Err(DupError::Index { .. })
        ));
        assert!(extend_profile(&p, &DuplicatePlan::KCopiesOf { i: 0, k: 0 }).is_err());
    }

    #[test]
    fn beta_selection() {
        assert_eq!(select_by_beta(&lbhr(), 0.355).unwrap(), 1);
        let same = BidderProfile::new(vec![tri(0.5, 0.5); 3]).unwrap();
        assert_eq!(select_by_beta(&same, 0.3).unwrap(), 0);
        let p = BidderProfile::new(vec![tri(0.5, 0.5), tri(0.2, 0.9)]).unwrap();
        assert_eq!(select_by_beta(&p, 0.2).unwrap(), 1);
    }

    #[test]
    fn report_selections() {
        assert_eq!(select_by_noisy_beta(&[(0.35, 0.3), (0.62, 0.4)]).unwrap(), 1);
        assert_eq!(select_by_noisy_beta(&[(0.5, 0.3), (0.5, 0.4)]).unwrap(), 0);
        let p = lbhr();
        assert_eq!(select_by_sample(&p, &[1.0, 5.0]).unwrap(), 1);
        assert_eq!(select_by_sample(&p, &[2.0, 2.0]).unwrap(), 0);
        assert!(select_by_sample(&p, &[2.0]).is_err());
        let r = |xs: &[f64]| xs.iter().map(|&x| (x, 0.5)).collect::<Vec<_>>();
        assert_eq!(select_k_set_noisy(&r(&[3.0, 1.0, 2.0]), 2).unwrap(), vec![0, 2]);
        assert_eq!(select_k_set_noisy(&r(&[1.0, 1.0, 1.0]), 2).unwrap(), vec![0, 1]);
        assert_eq!(select_k_set_noisy(&r(&[1.0, 4.0, 2.0]), 3).unwrap(), vec![0, 1, 2]);
        assert!(select_k_set_noisy(&r(&[1.0]), 2).is_err());
    }

    #[test]
    fn noisy_lbhr_reports_keep_choice() {
        // Rev_1 <= (1+eps) beta and Rev_2 >= 1 - (1+eps) beta stay ordered.
        let p = lbhr();
        for seed in 0..200 {
            let reps = noisy_reports(&p, 0.355, 0.1, seed).unwrap();
            for &(_, b) in &reps {
                assert!((b - 0.355).abs() <= 0.0355 + 1e-15);
            }
            assert_eq!(select_by_noisy_beta(&reps).unwrap(), 1);
        }
    }

    #[test]
    fn best_duplicate_on_lbhr() {
        let eval = |p: &BidderProfile, _: &PairConstraint| expected_order_stat(p, 2, 1e-9);
        let (i, rev) = best_single_duplicate(&lbhr(), eval, PlanKind::Single).unwrap();
        assert_eq!(i, 1);
        assert!((rev - 4f64.ln()).abs() < 1e-6);

        let p = BidderProfile::new(vec![tri(1.0, 1.0), tri(1.0, 0.01)]).unwrap();
        let (i, rev) = best_single_duplicate(&p, eval, PlanKind::Single).unwrap();
        assert_eq!(i, 0);
        assert!((rev - 1.0).abs() < 1e-9);

        let one = BidderProfile::new(vec![tri(0.5, 0.5)]).unwrap();
        assert_eq!(best_single_duplicate(&one, eval, PlanKind::Single).unwrap().0, 0);
    }

    #[test]
    fn subsets_enumerate() {
        assert_eq!(k_subsets(4, 2).len(), 6);
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(k_subsets(5, 1).len(), 5);
        assert!(k_subsets(2, 3).is_empty());
    }

    #[test]
    fn k_independent_choice() {
        let p = BidderProfile::new(vec![tri(0.1, 0.5), tri(0.9, 0.3)]).unwrap();
        // On [0.5, 1]: bidder 0 has Rev(0.5) = 0.5 * 0.5 / 0.9, bidder 1 has 0.3.
        assert_eq!(select_k_independent(&p, 0.5).unwrap(), 1);
    }
}
