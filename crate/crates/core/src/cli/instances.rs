//! Seeded random instances for sweeps and property checks.
//!
//! Triangles have `peak_q ~ U(0.05, 1)` and `peak_r ~ U(0.1, 1)`; sweep
//! profiles add an equal-revenue bidder with probability 0.2 per slot.

use crate::curves::{BidderProfile, RevenueCurve};
use crate::simulate::rng;

/// Sequential view of one counter-based substream.
#[derive(Debug, Clone)]
pub struct Stream {
    seed: u64,
    tag: u64,
    next: u64,
}

impl Stream {
    pub fn new(seed: u64, tag: u64) -> Self {
        Self { seed, tag, next: 0 }
    }

    pub fn uniform(&mut self) -> f64 {
        let u = rng::uniform(self.seed, self.next, self.tag);
        self.next += 1;
        u
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((self.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }
}

pub fn random_triangle(s: &mut Stream) -> RevenueCurve {
    RevenueCurve::triangle(s.range(0.05, 1.0), s.range(0.1, 1.0)).expect("valid triangle")
}

/// `n` bidders: triangles, each slot replaced by an equal-revenue curve of
/// random scale with probability `er_prob`.
pub fn random_profile(s: &mut Stream, n: usize, er_prob: f64) -> BidderProfile {
    let curves = (0..n)
        .map(|_| {
            if s.uniform() < er_prob {
                RevenueCurve::equal_revenue(s.range(0.1, 1.0)).expect("valid scale")
            } else {
                random_triangle(s)
            }
        })
        .collect();
    BidderProfile::new(curves).expect("valid profile")
}

pub fn random_triangle_profile(s: &mut Stream, n: usize) -> BidderProfile {
    random_profile(s, n, 0.0)
}

/// Right ends of up to `max_pieces` pieces splitting `(lo, hi]`, spaced
/// well apart so slopes stay numerically meaningful.
fn piece_ends(s: &mut Stream, lo: f64, hi: f64, max_pieces: usize) -> Vec<f64> {
    let gap = 1e-3 * (hi - lo);
    let mut cuts: Vec<f64> = (1..s.int(1, max_pieces)).map(|_| s.range(lo, hi)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for c in cuts {
        if c - out.last().copied().unwrap_or(lo) >= gap && hi - c >= gap {
            out.push(c);
        }
    }
    out.push(hi);
    out
}

/// Random concave piecewise-linear curve with up to `max_pieces` pieces on
/// each side of its peak.
pub fn random_concave(s: &mut Stream, max_pieces: usize) -> RevenueCurve {
    let peak_q = s.range(0.02, 1.0);
    let peak_r = s.range(0.05, 1.0);
    let mut points = vec![(0.0, 0.0)];

    // Rising side: positive slopes in decreasing order, scaled to reach the peak.
    let cuts = piece_ends(s, 0.0, peak_q, max_pieces);
    let m = cuts.len();
    let mut slopes: Vec<f64> = (0..m).map(|_| s.range(0.1, 1.0)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut prev = 0.0;
    let mut rise = 0.0;
    for (c, sl) in cuts.iter().zip(&slopes) {
        rise += sl * (c - prev);
        prev = *c;
    }
    let scale = peak_r / rise;
    let (mut q, mut r) = (0.0, 0.0);
    for (c, sl) in cuts.iter().zip(&slopes) {
        r += sl * scale * (c - q);
        q = *c;
        if q < peak_q {
            points.push((q, r));
        }
    }
    points.push((peak_q, peak_r));

    // Falling side down to a random end value.
    if peak_q < 1.0 {
        let end_r = peak_r * s.uniform() * s.uniform();
        let cuts = piece_ends(s, peak_q, 1.0, max_pieces);
        let m = cuts.len();
        let mut drops: Vec<f64> = (0..m).map(|_| s.range(0.1, 1.0)).collect();
        drops.sort_by(f64::total_cmp);
        let mut prev = peak_q;
        let mut fall = 0.0;
        for (c, d) in cuts.iter().zip(&drops) {
            fall += d * (c - prev);
            prev = *c;
        }
        let scale = (peak_r - end_r) / fall;
        let (mut q, mut r) = (peak_q, peak_r);
        for (c, d) in cuts.iter().zip(&drops) {
            r -= d * scale * (c - q);
            q = *c;
            if q < 1.0 {
                points.push((q, r));
            }
        }
        points.push((1.0, end_r));
    }
    RevenueCurve::piecewise(&points).expect("generated curve is concave")
}

/// Probability vector of length `n` with a random mix of tiny, moderate
/// and near-one entries.
pub fn random_probs(s: &mut Stream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match s.int(0, 3) {
            0 => s.range(0.0, 0.05),
            1 => s.range(0.95, 1.0),
            _ => s.uniform(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_produce_valid_curves() {
        let mut s = Stream::new(1, 0);
        for _ in 0..2000 {
            let c = random_concave(&mut s, 4);
            assert!(c.breakpoints().len() >= 2);
        }
        let p = random_profile(&mut s, 6, 0.2);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<f64> = {
            let mut s = Stream::new(3, 7);
            (0..5).map(|_| s.uniform()).collect()
        };
        let mut s = Stream::new(3, 7);
        assert_eq!(a, (0..5).map(|_| s.uniform()).collect::<Vec<_>>());
        for _ in 0..1000 {
            let k = s.int(2, 4);
            assert!((2..=4).contains(&k));
        }
    }
}
