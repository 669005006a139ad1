//! Single bid-profile evaluation of every auction used in the experiments.
//!
//! Ties are broken toward the lowest bidder index everywhere, and a buyer
//! accepts a posted price when `bid >= price`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::curves::BidderProfile;
use crate::error::{DupError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub winners: Vec<usize>,
    pub payments: BTreeMap<usize, f64>,
    pub revenue: f64,
}

impl AuctionOutcome {
    fn empty() -> Self {
        Self { winners: Vec::new(), payments: BTreeMap::new(), revenue: 0.0 }
    }

    fn from_payments(payments: BTreeMap<usize, f64>) -> Self {
        let winners = payments.keys().copied().collect();
        let revenue = payments.values().sum();
        Self { winners, payments, revenue }
    }
}

/// Disjoint (original, duplicate) pairs of which at most one may win.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PairConstraint {
    pairs: Vec<(usize, usize)>,
}

impl PairConstraint {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(pairs: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &(a, b) in &pairs {
            for idx in [a, b] {
                if idx >= n {
                    return Err(DupError::Index { index: idx, len: n });
                }
                if seen[idx] {
                    return Err(DupError::domain(format!("bidder {idx} appears in two pairs")));
                }
                seen[idx] = true;
            }
            if a == b {
                return Err(DupError::domain(format!("bidder {a} paired with itself")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub(crate) fn partner_table(&self, n: usize) -> Vec<Option<usize>> {
        let mut t = vec![None; n];
        for &(a, b) in &self.pairs {
            if a < n && b < n {
                t[a] = Some(b);
                t[b] = Some(a);
            }
        }
        t
    }
}

/// Index of the highest bid, lowest index on ties.
pub(crate) fn argmax(bids: &[f64]) -> usize {
    let mut best = 0;
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b > bids[best] {
            best = i;
        }
    }
    best
}

/// (winner, highest bid among the others).
fn top_two(bids: &[f64]) -> (usize, f64) {
    let w = argmax(bids);
    let second = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != w)
        .map(|(_, &b)| b)
        .fold(0.0_f64, f64::max);
    (w, second)
}

pub fn run_spa(bids: &[f64]) -> AuctionOutcome {
    if bids.is_empty() {
        return AuctionOutcome::empty();
    }
    let (w, second) = top_two(bids);
    AuctionOutcome::from_payments(BTreeMap::from([(w, second)]))
}

pub(crate) fn spa_revenue(bids: &[f64]) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = 0.0_f64;
    for &b in bids {
        if b > first {
            second = second.max(first);
            first = b;
        } else if b > second {
            second = b;
        }
    }
    second
}

fn sort_desc(bids: &[f64], order: &mut Vec<usize>) {
    order.clear();
    order.extend(0..bids.len());
    order.sort_by(|&a, &b| bids[b].total_cmp(&bids[a]).then(a.cmp(&b)));
}

pub fn run_vcg_k(bids: &[f64], k: usize) -> AuctionOutcome {
    let mut order = Vec::new();
    sort_desc(bids, &mut order);
    let price = order.get(k).map_or(0.0, |&i| bids[i]);
    let payments = order.iter().take(k).map(|&i| (i, price)).collect();
    AuctionOutcome::from_payments(payments)
}

pub(crate) fn vcg_revenue(bids: &[f64], k: usize, order: &mut Vec<usize>) -> f64 {
    if bids.len() <= k {
        return 0.0;
    }
    if k == 1 {
        return spa_revenue(bids);
    }
    order.clear();
    order.extend(0..bids.len());
    // Only the (k+1)-st highest bid matters.
    order.select_nth_unstable_by(k, |&a, &b| bids[b].total_cmp(&bids[a]));
    k as f64 * bids[order[k]]
}

/// Matroid greedy over bidders sorted by bid; returns chosen welfare.
/// Bidder `skip` (if any) is excluded.
fn greedy_welfare(
    bids: &[f64],
    k: usize,
    partner: &[Option<usize>],
    order: &[usize],
    skip: Option<usize>,
    taken: &mut [bool],
    mut chosen: Option<&mut Vec<usize>>,
) -> f64 {
    taken.iter_mut().for_each(|t| *t = false);
    let mut count = 0;
    let mut welfare = 0.0;
    for &i in order {
        if count == k {
            break;
        }
        if Some(i) == skip {
            continue;
        }
        if let Some(p) = partner[i] {
            if taken[p] {
                continue;
            }
        }
        taken[i] = true;
        count += 1;
        welfare += bids[i];
        if let Some(c) = chosen.as_deref_mut() {
            c.push(i);
        }
    }
    welfare
}

pub fn run_vcg_constrained(
    bids: &[f64],
    k: usize,
    constraint: &PairConstraint,
) -> Result<AuctionOutcome> {
    let n = bids.len();
    for &(a, b) in constraint.pairs() {
        if a >= n || b >= n {
            return Err(DupError::Index { index: a.max(b), len: n });
        }
    }
    let partner = constraint.partner_table(n);
    let mut order = Vec::new();
    sort_desc(bids, &mut order);
    let mut taken = vec![false; n];
    let mut winners = Vec::new();
    let welfare = greedy_welfare(bids, k, &partner, &order, None, &mut taken, Some(&mut winners));
    let mut payments = BTreeMap::new();
    for &i in &winners {
        let without = greedy_welfare(bids, k, &partner, &order, Some(i), &mut taken, None);
        let pay = (without - (welfare - bids[i])).clamp(0.0, bids[i]);
        payments.insert(i, pay);
    }
    Ok(AuctionOutcome::from_payments(payments))
}

pub(crate) struct VcgScratch {
    order: Vec<usize>,
    taken: Vec<bool>,
    winners: Vec<usize>,
}

impl VcgScratch {
    pub(crate) fn new() -> Self {
        Self { order: Vec::new(), taken: Vec::new(), winners: Vec::new() }
    }
}

pub(crate) fn vcg_constrained_revenue(
    bids: &[f64],
    k: usize,
    partner: &[Option<usize>],
    s: &mut VcgScratch,
) -> f64 {
    sort_desc(bids, &mut s.order);
    s.taken.resize(bids.len(), false);
    s.winners.clear();
    let welfare =
        greedy_welfare(bids, k, partner, &s.order, None, &mut s.taken, Some(&mut s.winners));
    let mut revenue = 0.0;
    for w in 0..s.winners.len() {
        let i = s.winners[w];
        let without = greedy_welfare(bids, k, partner, &s.order, Some(i), &mut s.taken, None);
        revenue += (without - (welfare - bids[i])).clamp(0.0, bids[i]);
    }
    revenue
}

fn check_len(profile: &BidderProfile, bids: &[f64]) -> Result<()> {
    if profile.len() != bids.len() {
        return Err(DupError::ProfileMismatch { expected: profile.len(), got: bids.len() });
    }
    Ok(())
}

const THRESHOLD_TOL: f64 = 1e-9;

/// Myerson's optimal single-item auction for regular bidders: allocate to
/// the highest non-negative virtual value and charge the threshold bid.
pub fn run_myerson_single(profile: &BidderProfile, bids: &[f64]) -> Result<AuctionOutcome> {
    check_len(profile, bids)?;
    match myerson_winner(profile, bids) {
        None => Ok(AuctionOutcome::empty()),
        Some((w, pay)) => Ok(AuctionOutcome::from_payments(BTreeMap::from([(w, pay)]))),
    }
}

pub(crate) fn myerson_winner(profile: &BidderProfile, bids: &[f64]) -> Option<(usize, f64)> {
    let curves = profile.curves();
    let mut winner: Option<(usize, f64)> = None;
    for (i, (c, &b)) in curves.iter().zip(bids).enumerate() {
        let phi = c.virtual_value_of_bid(b);
        if phi >= 0.0 && winner.is_none_or(|(_, best)| phi > best) {
            winner = Some((i, phi));
        }
    }
    let (w, _) = winner?;
    let mut before = f64::NEG_INFINITY;
    let mut after = f64::NEG_INFINITY;
    for (j, (c, &b)) in curves.iter().zip(bids).enumerate() {
        if j == w {
            continue;
        }
        let phi = c.virtual_value_of_bid(b);
        if j < w {
            before = before.max(phi);
        } else {
            after = after.max(phi);
        }
    }
    let curve = &curves[w];
    let wins = |v: f64| {
        let phi = curve.virtual_value_of_bid(v);
        phi >= 0.0 && phi > before && phi >= after
    };
    let (mut lo, mut hi) = (0.0, bids[w]);
    if wins(lo) {
        return Some((w, 0.0));
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if wins(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((w, hi))
}

/// Lookahead auction: the highest bidder faces `max(second bid, r*)`.
pub fn run_lookahead(profile: &BidderProfile, bids: &[f64]) -> Result<AuctionOutcome> {
    check_len(profile, bids)?;
    let reserves: Vec<f64> = profile.curves().iter().map(|c| c.monopoly_reserve()).collect();
    Ok(match lookahead_sale(&reserves, bids) {
        Some((w, price)) => AuctionOutcome::from_payments(BTreeMap::from([(w, price)])),
        None => AuctionOutcome::empty(),
    })
}

pub(crate) fn lookahead_sale(reserves: &[f64], bids: &[f64]) -> Option<(usize, f64)> {
    let (w, second) = top_two(bids);
    let price = second.max(reserves[w]);
    (bids[w] >= price).then_some((w, price))
}

/// Second price auction with a late duplicate of the realized highest
/// bidder; `dup_draw` is the duplicate's quantile draw. The duplicate gets
/// index `n`.
pub fn run_spald(profile: &BidderProfile, bids: &[f64], dup_draw: f64) -> Result<AuctionOutcome> {
    check_len(profile, bids)?;
    let star = argmax(bids);
    let dup = profile.curves()[star].sample_value(dup_draw);
    let mut all = bids.to_vec();
    all.push(dup);
    Ok(run_spa(&all))
}

/// Sequential posted prices in index order.
pub fn run_posted(prices: &[f64], bids: &[f64]) -> Result<AuctionOutcome> {
    if prices.len() != bids.len() {
        return Err(DupError::ProfileMismatch { expected: prices.len(), got: bids.len() });
    }
    Ok(match posted_sale(prices, bids) {
        Some((i, p)) => AuctionOutcome::from_payments(BTreeMap::from([(i, p)])),
        None => AuctionOutcome::empty(),
    })
}

pub(crate) fn posted_sale(prices: &[f64], bids: &[f64]) -> Option<(usize, f64)> {
    prices.iter().zip(bids).position(|(p, b)| b >= p).map(|i| (i, prices[i]))
}

/// Auctions selectable by name in configs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Mechanism {
    Spa,
    Vcg { k: usize },
    VcgConstrained { k: usize },
    Myerson,
    Lookahead,
    Spald,
    Posted { prices: Vec<f64> },
}

impl Mechanism {
    pub const NAMES: [&'static str; 7] =
        ["spa", "vcg", "vcg_constrained", "myerson", "lookahead", "spald", "posted"];

    pub fn from_name(name: &str, k: usize, prices: Option<&[f64]>) -> Result<Self> {
        Ok(match name {
            "spa" => Mechanism::Spa,
            "vcg" => Mechanism::Vcg { k },
            "vcg_constrained" => Mechanism::VcgConstrained { k },
            "myerson" => Mechanism::Myerson,
            "lookahead" => Mechanism::Lookahead,
            "spald" => Mechanism::Spald,
            "posted" => Mechanism::Posted {
                prices: prices
                    .ok_or_else(|| DupError::domain("posted mechanism needs a price list"))?
                    .to_vec(),
            },
            other => return Err(DupError::domain(format!("unknown mechanism '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Spa => "spa",
            Mechanism::Vcg { .. } => "vcg",
            Mechanism::VcgConstrained { .. } => "vcg_constrained",
            Mechanism::Myerson => "myerson",
            Mechanism::Lookahead => "lookahead",
            Mechanism::Spald => "spald",
            Mechanism::Posted { .. } => "posted",
        }
    }

    /// Full outcome for one bid profile.
    pub fn run(
        &self,
        profile: &BidderProfile,
        constraint: &PairConstraint,
        bids: &[f64],
        dup_draw: f64,
    ) -> Result<AuctionOutcome> {
        match self {
            Mechanism::Spa => Ok(run_spa(bids)),
            Mechanism::Vcg { k } => Ok(run_vcg_k(bids, *k)),
            Mechanism::VcgConstrained { k } => run_vcg_constrained(bids, *k, constraint),
            Mechanism::Myerson => run_myerson_single(profile, bids),
            Mechanism::Lookahead => run_lookahead(profile, bids),
            Mechanism::Spald => run_spald(profile, bids, dup_draw),
            Mechanism::Posted { prices } => run_posted(prices, bids),
        }
    }
}
