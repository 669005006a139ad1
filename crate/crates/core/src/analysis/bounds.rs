//! Closed-form approximation constants for the duplicate-bidder auctions.
//! Each formula checks its own hypothesis region before evaluating.

use serde::{Deserialize, Serialize};

use crate::error::{DupError, Result};

const HYP_TOL: f64 = 1e-12;

/// `(1 - alpha) / alpha * (1 - beta)`: lower bound on the expected number
/// of high bidders in the second case of the single-item lemma.
pub fn high_mass(alpha: f64, beta: f64) -> f64 {
    (1.0 - alpha) / alpha * (1.0 - beta)
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(DupError::hypothesis(format!("{name} = {x} must lie in (0,1)")))
    }
}

fn check_single(alpha: f64, beta: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    if !(0.0..1.0).contains(&beta) {
        return Err(DupError::hypothesis(format!("beta = {beta} must lie in [0,1)")));
    }
    let x = high_mass(alpha, beta);
    if x < 1.0 - HYP_TOL {
        return Err(DupError::hypothesis(format!(
            "(1-alpha)/alpha*(1-beta) = {x:.6} < 1 for alpha={alpha}, beta={beta}"
        )));
    }
    Ok(x)
}

/// Probability bound that at least two bidders (one of them the duplicate
/// of the most likely high bidder) bid at least `alpha * OPT`.
pub fn eta_single(alpha: f64, beta: f64) -> Result<f64> {
    let x = check_single(alpha, beta)?;
    Ok(1.0 - (1.0 + beta + x) * (-x).exp())
}

/// Variant of [`eta_single`] that assumes no duplicate is added and every
/// bidder is high with probability at most `beta`.
pub fn eta_without_duplicate(alpha: f64, beta: f64) -> Result<f64> {
    let x = check_single(alpha, beta)?;
    Ok(1.0 - (1.0 + x) * beta.exp() * (-x).exp())
}

pub fn bound_single(alpha: f64, beta: f64) -> Result<f64> {
    Ok(alpha * beta.min(eta_single(alpha, beta)?))
}

pub fn bound_single_noisy(alpha: f64, beta: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(DupError::hypothesis(format!("epsilon = {eps} must lie in [0,1]")));
    }
    Ok(alpha * ((1.0 - eps) * beta).min(eta_single(alpha, beta)?))
}

pub fn bound_sample(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    check_unit("gamma", gamma)?;
    let eta = eta_single(alpha, beta)?;
    Ok(alpha * (beta * beta * (1.0 - gamma)).min(beta * gamma).min(eta))
}

/// Largest alpha allowed by the single-item hypothesis for this beta.
pub fn alpha_max(beta: f64) -> f64 {
    (1.0 - beta) / (2.0 - beta)
}

/// `max_alpha bound_single_noisy(alpha, beta, eps)` over a uniform grid of
/// `steps` points in `(0, alpha_max(beta)]`. Returns `(value, alpha)`.
pub fn best_single_noisy(beta: f64, eps: f64, steps: usize) -> Result<(f64, f64)> {
    let top = alpha_max(beta);
    let mut best: Option<(f64, f64)> = None;
    for s in 1..=steps {
        let alpha = top * s as f64 / steps as f64;
        if let Ok(v) = bound_single_noisy(alpha, beta, eps) {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, alpha));
            }
        }
    }
    best.ok_or_else(|| DupError::hypothesis(format!("no feasible alpha for beta = {beta}")))
}

/// Maximize `bound_single` over a `steps x steps` grid of `(alpha, beta)`
/// in the open unit square. Returns `(value, alpha, beta)`.
pub fn best_single(steps: usize) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0);
    for a in 1..steps {
        let alpha = a as f64 / steps as f64;
        for b in 1..steps {
            let beta = b as f64 / steps as f64;
            if let Ok(v) = bound_single(alpha, beta) {
                if v > best.0 {
                    best = (v, alpha, beta);
                }
            }
        }
    }
    best
}

/// Hypothesis of the k-item case lemma:
/// `((1 - gamma)(1 - beta) - delta) / gamma >= 3/2`.
pub fn check_k_hypothesis(beta: f64, gamma: f64, delta: f64) -> Result<()> {
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    check_unit("delta", delta)?;
    let lhs = ((1.0 - gamma) * (1.0 - beta) - delta) / gamma;
    if lhs < 1.5 - HYP_TOL {
        return Err(DupError::hypothesis(format!(
            "((1-gamma)(1-beta)-delta)/gamma = {lhs:.6} < 3/2"
        )));
    }
    Ok(())
}

/// k copies of one bidder, all competing normally.
pub fn bound_k_free(beta: f64, gamma: f64, delta: f64) -> Result<f64> {
    check_k_hypothesis(beta, gamma, delta)?;
    Ok((delta / 32.0).min(beta * gamma / 6.0).min(gamma / 2.0))
}

/// Same as [`bound_k_free`] with the duplicated bidder chosen independently
/// of k, which costs a factor beta in the middle case.
pub fn bound_k_free_independent(beta: f64, gamma: f64, delta: f64) -> Result<f64> {
    check_k_hypothesis(beta, gamma, delta)?;
    Ok((delta / 32.0).min(beta * beta * gamma / 6.0).min(gamma / 2.0))
}

/// One duplicate for each of k bidders; a bidder and her duplicate never
/// both win.
pub fn bound_k_constrained(beta: f64, gamma: f64, delta: f64) -> Result<f64> {
    check_k_hypothesis(beta, gamma, delta)?;
    Ok(delta.min(beta * gamma).min(gamma / 2.0))
}

pub fn bound_k_noisy(beta: f64, gamma: f64, delta: f64, eps: f64) -> Result<f64> {
    check_k_hypothesis(beta, gamma, delta)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(DupError::hypothesis(format!("epsilon = {eps} must lie in [0,1)")));
    }
    let shrink = (1.0 - eps).powi(3);
    Ok(delta.min(shrink * gamma * beta).min(gamma / 2.0))
}

/// `1 - 2 exp(-3/4)`: probability floor for two high bids in the loose
/// 40-approximation.
pub fn warmup_constant() -> f64 {
    1.0 - 2.0 * (-0.75_f64).exp()
}

/// Constants shared by bound formulas, classifiers and experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Single,
    SingleNoisy,
    Sample,
    KFree,
    KConstrained,
    KNoisy,
    Warmup,
}

impl BoundKind {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| DupError::domain(format!("unknown bound '{name}'")))
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Single => "single",
            BoundKind::SingleNoisy => "single-noisy",
            BoundKind::Sample => "sample",
            BoundKind::KFree => "k-free",
            BoundKind::KConstrained => "k-constrained",
            BoundKind::KNoisy => "k-noisy",
            BoundKind::Warmup => "warmup",
        }
    }

    pub fn evaluate(self, c: &Constants) -> Result<f64> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| DupError::hypothesis(format!("bound '{}' needs {name}", self.name())))
        };
        match self {
            BoundKind::Single => bound_single(need(c.alpha, "alpha")?, need(c.beta, "beta")?),
            BoundKind::SingleNoisy => bound_single_noisy(
                need(c.alpha, "alpha")?,
                need(c.beta, "beta")?,
                need(c.epsilon, "epsilon")?,
            ),
            BoundKind::Sample => bound_sample(
                need(c.alpha, "alpha")?,
                need(c.beta, "beta")?,
                need(c.gamma, "gamma")?,
            ),
            BoundKind::KFree => {
                bound_k_free(need(c.beta, "beta")?, need(c.gamma, "gamma")?, need(c.delta, "delta")?)
            }
            BoundKind::KConstrained => bound_k_constrained(
                need(c.beta, "beta")?,
                need(c.gamma, "gamma")?,
                need(c.delta, "delta")?,
            ),
            BoundKind::KNoisy => bound_k_noisy(
                need(c.beta, "beta")?,
                need(c.gamma, "gamma")?,
                need(c.delta, "delta")?,
                need(c.epsilon, "epsilon")?,
            ),
            BoundKind::Warmup => Ok(warmup_constant()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_values() {
        // 1 - (1.4 + 73/45) e^{-73/45}
        let x: f64 = 0.73 / 0.27 * 0.6;
        let expected = 1.0 - (1.4 + x) * (-x).exp();
        let eta = eta_single(0.27, 0.4).unwrap();
        assert!((eta - expected).abs() < 1e-15);
        assert!((eta - 0.4032).abs() < 1e-4);
        let eta = eta_single(0.5, 0.0).unwrap();
        assert!((eta - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-15);
        assert!(matches!(eta_single(0.6, 0.4), Err(DupError::HypothesisViolated(_))));
    }

    #[test]
    fn reported_constants() {
        assert!((bound_single(0.27, 0.4).unwrap() - 0.108).abs() < 1e-12);
        assert!(bound_sample(0.26, 0.51, 0.34).unwrap() >= 0.0446);
        assert!((bound_k_free(0.377, 0.15, 0.3).unwrap() - 0.009375).abs() < 1e-15);
        assert!((bound_k_constrained(0.5, 0.2, 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!(bound_k_free_independent(0.4, 0.19, 0.2).unwrap() > 0.005);
        assert!(warmup_constant() > 0.05);
        assert!((warmup_constant() - 0.05527).abs() < 1e-5);
        let (c1, _) = best_single_noisy(0.355, 0.0, 10_000).unwrap();
        assert!(c1 >= 0.099);
    }

    #[test]
    fn k_noisy_shrinks_middle_term() {
        for eps in [0.0, 0.01, 0.1, 0.5] {
            let v = bound_k_noisy(0.5, 0.2, 0.1, eps).unwrap();
            assert!((v - (1.0 - eps).powi(3) * 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn k_hypothesis_rejects() {
        assert!(matches!(
            bound_k_free(0.9, 0.5, 0.5),
            Err(DupError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn bound_kind_names() {
        for kind in [
            BoundKind::Single,
            BoundKind::SingleNoisy,
            BoundKind::Sample,
            BoundKind::KFree,
            BoundKind::KConstrained,
            BoundKind::KNoisy,
            BoundKind::Warmup,
        ] {
            assert_eq!(BoundKind::parse(kind.name()).unwrap(), kind);
        }
    }
}
