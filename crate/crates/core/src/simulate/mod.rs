//! Two independent oracles for expected revenues: seeded Monte Carlo over
//! addressable random substreams, and quadrature of the tail-integral
//! identity `E[X] = int_0^inf Pr[X >= t] dt` for order statistics.
//!
//! Monte Carlo work is split into fixed blocks of consecutive sample
//! indices. Blocks run in parallel on the current rayon pool and merge in
//! block order, so an estimate depends only on its inputs and seed.

pub mod quadrature;
pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::poisson::tail_at_least;
use crate::curves::BidderProfile;
use crate::error::{DupError, Result};
use crate::mechanisms::{
    argmax, lookahead_sale, myerson_winner, posted_sale, spa_revenue, vcg_constrained_revenue,
    vcg_revenue, Mechanism, PairConstraint, VcgScratch,
};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Requested estimator. `Auto` picks median-of-means whenever a profile
/// has an unbounded-support curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Plain,
    MedianOfMeans,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plain,
    MedianOfMeans { blocks: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error; for median-of-means, `1.2533 * sd(block means) / sqrt(B)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub estimator: Estimator,
    #[serde(skip)]
    pub block_means: Vec<f64>,
}

impl Estimate {
    pub fn lower(&self, sigmas: f64) -> f64 {
        self.mean - sigmas * self.stderr
    }

    pub fn upper(&self, sigmas: f64) -> f64 {
        self.mean + sigmas * self.stderr
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

fn block_count(n: u64) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

fn block_range(n: u64, blocks: usize, b: usize) -> (u64, u64) {
    let lo = (n as u128 * b as u128 / blocks as u128) as u64;
    let hi = (n as u128 * (b as u128 + 1) / blocks as u128) as u64;
    (lo, hi)
}

/// Per-sample scratch space so the hot loop does not allocate.
pub(crate) struct Scratch {
    bids: Vec<f64>,
    spare: Vec<f64>,
    order: Vec<usize>,
    vcg: VcgScratch,
}

impl Scratch {
    fn new() -> Self {
        Self { bids: Vec::new(), spare: Vec::new(), order: Vec::new(), vcg: VcgScratch::new() }
    }
}

/// One auction environment with everything precomputed for sampling.
pub(crate) struct Environment<'a> {
    profile: &'a BidderProfile,
    mechanism: &'a Mechanism,
    partner: Vec<Option<usize>>,
    reserves: Vec<f64>,
}

impl<'a> Environment<'a> {
    pub(crate) fn new(
        profile: &'a BidderProfile,
        constraint: &PairConstraint,
        mechanism: &'a Mechanism,
    ) -> Result<Self> {
        let n = profile.len();
        for &(a, b) in constraint.pairs() {
            if a >= n || b >= n {
                return Err(DupError::Index { index: a.max(b), len: n });
            }
        }
        match mechanism {
            Mechanism::Vcg { k } | Mechanism::VcgConstrained { k } if *k == 0 => {
                return Err(DupError::domain("VCG needs k >= 1"));
            }
            Mechanism::Posted { prices } if prices.len() != n => {
                return Err(DupError::ProfileMismatch { expected: n, got: prices.len() });
            }
            _ => {}
        }
        let reserves = match mechanism {
            Mechanism::Lookahead => profile.curves().iter().map(|c| c.monopoly_reserve()).collect(),
            _ => Vec::new(),
        };
        Ok(Self { profile, mechanism, partner: constraint.partner_table(n), reserves })
    }

    /// Bidder `j` of sample `i` uses substream `j`; SPALD's late duplicate
    /// of bidder `w` uses substream `n + w`, the stream an all-duplicates
    /// environment assigns to the duplicate of `w`.
    pub(crate) fn revenue(&self, key: u64, i: u64, s: &mut Scratch) -> f64 {
        let curves = self.profile.curves();
        s.bids.clear();
        s.bids.extend(
            curves
                .iter()
                .enumerate()
                .map(|(j, c)| c.sample_value(rng::uniform_keyed(key, i, j as u64))),
        );
        let bids = &s.bids;
        match self.mechanism {
            Mechanism::Spa => spa_revenue(bids),
            Mechanism::Vcg { k } => vcg_revenue(bids, *k, &mut s.order),
            Mechanism::VcgConstrained { k } => {
                vcg_constrained_revenue(bids, *k, &self.partner, &mut s.vcg)
            }
            Mechanism::Myerson => myerson_winner(self.profile, bids).map_or(0.0, |w| w.1),
            Mechanism::Lookahead => lookahead_sale(&self.reserves, bids).map_or(0.0, |w| w.1),
            Mechanism::Posted { prices } => posted_sale(prices, bids).map_or(0.0, |w| w.1),
            Mechanism::Spald => {
                if bids.is_empty() {
                    return 0.0;
                }
                let w = argmax(bids);
                let u = rng::uniform_keyed(key, i, (curves.len() + w) as u64);
                s.spare.clear();
                s.spare.extend_from_slice(bids);
                s.spare.push(curves[w].sample_value(u));
                spa_revenue(&s.spare)
            }
        }
    }
}

fn resolve(choice: EstimatorChoice, unbounded: bool, n: u64) -> Estimator {
    match choice {
        EstimatorChoice::Plain => Estimator::Plain,
        EstimatorChoice::MedianOfMeans => Estimator::MedianOfMeans { blocks: block_count(n) },
        EstimatorChoice::Auto if unbounded => {
            Estimator::MedianOfMeans { blocks: block_count(n) }
        }
        EstimatorChoice::Auto => Estimator::Plain,
    }
}

/// Runs `f(key, sample_index, scratch)` over all samples and summarizes.
fn estimate_with<F>(n: u64, seed: u64, estimator: Estimator, f: F) -> Result<Estimate>
where
    F: Fn(u64, u64, &mut Scratch) -> f64 + Sync,
{
    if n == 0 {
        return Err(DupError::domain("need at least one sample"));
    }
    let key = rng::key(seed);
    let blocks = block_count(n);
    let stats: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = block_range(n, blocks, b);
            let mut s = Scratch::new();
            let mut m = Moments::default();
            for i in lo..hi {
                m.push(f(key, i, &mut s));
            }
            m
        })
        .collect();
    let block_means: Vec<f64> = stats.iter().map(|m| m.mean).collect();
    let total = stats.iter().fold(Moments::default(), |acc, &m| acc.merge(m));
    if !total.mean.is_finite() {
        return Err(DupError::NonConvergence("non-finite revenue sample".into()));
    }
    let (mean, stderr) = match estimator {
        Estimator::Plain => {
            let var = if n > 1 { total.m2 / (n - 1) as f64 } else { 0.0 };
            (total.mean, (var.max(0.0) / n as f64).sqrt())
        }
        Estimator::MedianOfMeans { .. } => {
            let mut sorted = block_means.clone();
            sorted.sort_by(f64::total_cmp);
            let b = sorted.len();
            let median =
                if b % 2 == 1 { sorted[b / 2] } else { 0.5 * (sorted[b / 2 - 1] + sorted[b / 2]) };
            let mut bm = Moments::default();
            block_means.iter().for_each(|&x| bm.push(x));
            let sd = if b > 1 { (bm.m2 / (b - 1) as f64).max(0.0).sqrt() } else { 0.0 };
            (median, 1.2533 * sd / (b as f64).sqrt())
        }
    };
    Ok(Estimate { mean, stderr, n_samples: n, seed, estimator, block_means })
}

/// Monte Carlo estimate of expected revenue. Parallelism comes from the
/// ambient rayon pool; wrap the call in `ThreadPool::install` to pin the
/// worker count. The result does not depend on it.
pub fn estimate_revenue(
    profile: &BidderProfile,
    constraint: &PairConstraint,
    mechanism: &Mechanism,
    n_samples: u64,
    seed: u64,
    estimator: EstimatorChoice,
) -> Result<Estimate> {
    let env = Environment::new(profile, constraint, mechanism)?;
    let est = resolve(estimator, profile.has_unbounded(), n_samples);
    estimate_with(n_samples, seed, est, |key, i, s| env.revenue(key, i, s))
}

/// One side of a paired comparison.
#[derive(Debug, Clone, Copy)]
pub struct Arm<'a> {
    pub profile: &'a BidderProfile,
    pub constraint: &'a PairConstraint,
    pub mechanism: &'a Mechanism,
}

/// Estimate of `E[rev_a - rev_b]` under common random numbers: bidder `j`
/// draws from substream `j` in both arms, so a shared prefix of bidders
/// sees identical values.
pub fn paired_compare_arms(
    a: Arm<'_>,
    b: Arm<'_>,
    n_samples: u64,
    seed: u64,
    estimator: EstimatorChoice,
) -> Result<Estimate> {
    paired_difference(a, b, 1.0, n_samples, seed, estimator)
}

/// Paired estimate of `E[rev_a - weight * rev_b]`.
pub fn paired_difference(
    a: Arm<'_>,
    b: Arm<'_>,
    weight: f64,
    n_samples: u64,
    seed: u64,
    estimator: EstimatorChoice,
) -> Result<Estimate> {
    if !weight.is_finite() {
        return Err(DupError::domain("weight must be finite"));
    }
    let ea = Environment::new(a.profile, a.constraint, a.mechanism)?;
    let eb = Environment::new(b.profile, b.constraint, b.mechanism)?;
    let unbounded = a.profile.has_unbounded() || b.profile.has_unbounded();
    let est = resolve(estimator, unbounded, n_samples);
    estimate_with(n_samples, seed, est, |key, i, s| {
        ea.revenue(key, i, s) - weight * eb.revenue(key, i, s)
    })
}

pub fn paired_compare(
    profile_a: &BidderProfile,
    profile_b: &BidderProfile,
    constraint_a: &PairConstraint,
    constraint_b: &PairConstraint,
    mechanism: &Mechanism,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    let (a, b) = (profile_a, profile_b);
    let common = a.len().min(b.len());
    if a.curves()[..common] != b.curves()[..common] {
        return Err(DupError::domain("paired profiles must share their original prefix"));
    }
    paired_compare_arms(
        Arm { profile: profile_a, constraint: constraint_a, mechanism },
        Arm { profile: profile_b, constraint: constraint_b, mechanism },
        n_samples,
        seed,
        EstimatorChoice::Auto,
    )
}

/// `E[r-th highest value]` as `int_0^inf Pr[#{i : v_i >= t} >= r] dt`.
///
/// The `t` axis is cut at every atom and kink of every curve so each piece
/// is smooth. The unbounded tail beyond the last cut is mapped to a finite
/// interval by `t = u / (1 - u)`.
pub fn expected_order_stat(profile: &BidderProfile, r: usize, tol: f64) -> Result<f64> {
    if r == 0 {
        return Err(DupError::domain("rank must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(DupError::domain("tolerance must be positive"));
    }
    if r == 1 && profile.has_unbounded() {
        return Err(DupError::UnboundedExpectation(
            "the highest value has infinite mean under an unbounded-support curve".into(),
        ));
    }
    let n = profile.len();
    if r > n {
        return Ok(0.0);
    }
    let curves = profile.curves();
    let mut cuts: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.kink_values())
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut probs = vec![0.0; n];
    let mut buf = Vec::with_capacity(r);
    let mut tail = |t: f64| {
        for (p, c) in probs.iter_mut().zip(curves) {
            *p = c.sell_prob(t);
        }
        tail_at_least(&probs, r, &mut buf)
    };

    let unbounded = profile.has_unbounded();
    let pieces = cuts.len() - 1 + usize::from(unbounded);
    let piece_tol = tol / pieces.max(1) as f64;
    let mut total = 0.0;
    // Atoms make the integrand jump at the cuts, so each piece is evaluated
    // strictly inside its endpoints to see the one-sided limits.
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0].next_up(), w[1].next_down());
        let inner = |t: f64| tail(t.clamp(lo, hi));
        total += quadrature::adaptive_simpson(inner, w[0], w[1], piece_tol, 8)?;
    }
    if unbounded {
        let start = cuts[cuts.len() - 1];
        // Guard the endpoint u = 1, where the integrand is taken as its limit.
        const U_MAX: f64 = 1.0 - 1e-15;
        let u_start = start / (1.0 + start);
        let mapped = |u: f64| {
            let u = u.clamp(u_start.next_up(), U_MAX);
            let one_minus = 1.0 - u;
            tail(u / one_minus) / (one_minus * one_minus)
        };
        total += quadrature::adaptive_simpson(mapped, u_start, 1.0, piece_tol, 8)?;
    }
    Ok(total)
}

/// Expected k-unit VCG revenue, `k * E[(k+1)-st highest]`.
pub fn mechanism_revenue_quadrature(profile: &BidderProfile, k: usize) -> Result<f64> {
    mechanism_revenue_quadrature_tol(profile, k, DEFAULT_QUAD_TOL)
}

pub fn mechanism_revenue_quadrature_tol(profile: &BidderProfile, k: usize, tol: f64) -> Result<f64> {
    if k == 0 || profile.len() < k + 1 {
        return Err(DupError::domain(format!(
            "need at least k + 1 = {} bidders, have {}",
            k + 1,
            profile.len()
        )));
    }
    Ok(k as f64 * expected_order_stat(profile, k + 1, tol / k as f64)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::RevenueCurve;

    fn tri(q: f64, r: f64) -> RevenueCurve {
        RevenueCurve::triangle(q, r).unwrap()
    }

    fn er() -> RevenueCurve {
        RevenueCurve::equal_revenue(1.0).unwrap()
    }

    fn profile(c: Vec<RevenueCurve>) -> BidderProfile {
        BidderProfile::new(c).unwrap()
    }

    #[test]
    fn degenerate_point_masses() {
        let p = profile(vec![tri(1.0, 1.0), tri(1.0, 1.0)]);
        for est in [EstimatorChoice::Plain, EstimatorChoice::MedianOfMeans] {
            let e = estimate_revenue(&p, &PairConstraint::none(), &Mechanism::Spa, 1000, 3, est)
                .unwrap();
            assert_eq!(e.mean, 1.0);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn quadrature_examples() {
        let p = profile(vec![tri(1.0, 1.0), er(), tri(1.0, 1.0), er()]);
        assert!((expected_order_stat(&p, 2, 1e-9).unwrap() - 1.5).abs() < 1e-7);
        let p = profile(vec![tri(1.0, 1.0), er(), er()]);
        assert!((expected_order_stat(&p, 2, 1e-9).unwrap() - 4f64.ln()).abs() < 1e-7);
        let p = profile(vec![tri(0.5, 0.5), tri(0.5, 0.5)]);
        assert!((mechanism_revenue_quadrature(&p, 1).unwrap() - 0.5).abs() < 1e-7);
        let p = profile(vec![tri(1.0, 1.0); 5]);
        assert!((mechanism_revenue_quadrature(&p, 2).unwrap() - 2.0).abs() < 1e-9);
        assert!(matches!(
            expected_order_stat(&profile(vec![er(), er()]), 1, 1e-8),
            Err(DupError::UnboundedExpectation(_))
        ));
        assert!(mechanism_revenue_quadrature(&profile(vec![tri(0.5, 0.5)]), 1).is_err());
    }

    #[test]
    fn paired_identical_is_zero() {
        let p = profile(vec![tri(0.3, 0.2), er()]);
        let c = PairConstraint::none();
        let e = paired_compare(&p, &p, &c, &c, &Mechanism::Spa, 5000, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn adding_a_bidder_never_lowers_spa() {
        let p = profile(vec![tri(0.3, 0.2), tri(0.7, 0.5)]);
        let q = profile(vec![tri(0.3, 0.2), tri(0.7, 0.5), tri(0.3, 0.2)]);
        let c = PairConstraint::none();
        let env_p = Environment::new(&p, &c, &Mechanism::Spa).unwrap();
        let env_q = Environment::new(&q, &c, &Mechanism::Spa).unwrap();
        let key = rng::key(8);
        let mut s = Scratch::new();
        for i in 0..10_000 {
            assert!(env_q.revenue(key, i, &mut s) >= env_p.revenue(key, i, &mut s));
        }
    }

    #[test]
    fn mc_agrees_with_quadrature() {
        let p = profile(vec![tri(0.5, 0.5), tri(0.2, 0.4), tri(0.9, 0.3)]);
        let exact = mechanism_revenue_quadrature(&p, 1).unwrap();
        let e = estimate_revenue(
            &p,
            &PairConstraint::none(),
            &Mechanism::Spa,
            100_000,
            11,
            EstimatorChoice::Plain,
        )
        .unwrap();
        assert!((e.mean - exact).abs() <= 4.0 * e.stderr, "{e:?} vs {exact}");
    }
}
