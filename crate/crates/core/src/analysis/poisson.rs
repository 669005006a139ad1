use serde::Serialize;

use crate::error::{DupError, Result};

/// Distribution of a sum of independent, non-identical Bernoulli draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonBinomial {
    pub probs: Vec<f64>,
    pub pmf: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(DupError::domain(format!("probability {p} outside [0,1]")));
        }
        let mut pmf = Vec::with_capacity(probs.len() + 1);
        pmf_into(probs, &mut pmf);
        Ok(Self { probs: probs.to_vec(), pmf })
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Pr[S >= m]`.
    pub fn tail(&self, m: usize) -> f64 {
        self.pmf.iter().skip(m).sum::<f64>().min(1.0)
    }
}

/// Standard O(n^2) convolution recurrence.
pub(crate) fn pmf_into(probs: &[f64], pmf: &mut Vec<f64>) {
    pmf.clear();
    pmf.resize(probs.len() + 1, 0.0);
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        for s in (1..=i + 1).rev() {
            pmf[s] = pmf[s] * (1.0 - p) + pmf[s - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
}

/// `Pr[S >= m]` using a DP truncated at `m` states, so it costs O(n m).
/// `buf` is scratch space.
pub(crate) fn tail_at_least(probs: &[f64], m: usize, buf: &mut Vec<f64>) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > probs.len() {
        return 0.0;
    }
    // buf[s] = Pr[S = s] for s < m; `reached` accumulates Pr[S >= m].
    buf.clear();
    buf.resize(m, 0.0);
    buf[0] = 1.0;
    let mut reached = 0.0;
    for &p in probs {
        reached += buf[m - 1] * p;
        for s in (1..m).rev() {
            buf[s] = buf[s] * (1.0 - p) + buf[s - 1] * p;
        }
        buf[0] *= 1.0 - p;
    }
    reached.clamp(0.0, 1.0)
}

/// Checks `Pr[S >= floor(n * mean p)] >= 1/2` from the exact pmf.
pub fn median_lower_bound_check(probs: &[f64]) -> Result<bool> {
    if probs.is_empty() {
        return Err(DupError::domain("need at least one probability"));
    }
    let pb = PoissonBinomial::new(probs)?;
    // floor of the expected count; the 1e-12 guards sums like 0.1 * 10.
    let threshold = (pb.mean() + 1e-12).floor() as usize;
    Ok(pb.tail(threshold) >= 0.5 - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_pmfs() {
        assert_eq!(PoissonBinomial::new(&[0.5, 0.5]).unwrap().pmf, vec![0.25, 0.5, 0.25]);
        assert_eq!(PoissonBinomial::new(&[1.0, 0.0]).unwrap().pmf, vec![0.0, 1.0, 0.0]);
        let pb = PoissonBinomial::new(&[0.9, 0.1]).unwrap();
        assert!((pb.tail(1) - 0.91).abs() < 1e-15);
        assert!(PoissonBinomial::new(&[1.2]).is_err());
    }

    #[test]
    fn truncated_tail_matches_pmf() {
        let probs = [0.3, 0.9, 0.05, 0.5, 0.77, 0.12];
        let pb = PoissonBinomial::new(&probs).unwrap();
        let mut buf = Vec::new();
        for m in 0..=8 {
            assert!((tail_at_least(&probs, m, &mut buf) - pb.tail(m)).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn median_checks() {
        assert!(median_lower_bound_check(&[0.9, 0.1]).unwrap());
        assert!(median_lower_bound_check(&[0.5; 4]).unwrap());
        let pb = PoissonBinomial::new(&[0.5; 4]).unwrap();
        assert!((pb.tail(2) - 0.6875).abs() < 1e-15);
        assert!(median_lower_bound_check(&[0.0]).unwrap());
    }
}
