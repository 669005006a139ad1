//! JSON experiment configs. Parsing validates everything that can be
//! checked without sampling: curve shapes, mechanism parameters, duplicate
//! plans, and the hypotheses of every requested bound.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::verify::SweepSpec;
use crate::analysis::{BoundKind, Constants};
use crate::curves::{BidderProfile, RevenueCurve};
use crate::duplication::{extend_profile, DuplicatePlan};
use crate::error::{DupError, Result};
use crate::mechanisms::Mechanism;
use crate::simulate::EstimatorChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Triangle { q: f64, r: f64 },
    /// Breakpoints `[q, R]` from `q = 0` to `q = 1`.
    Piecewise(Vec<[f64; 2]>),
    PointMass(f64),
    EqualRevenue(f64),
}

impl CurveSpec {
    pub fn build(&self) -> Result<RevenueCurve> {
        match self {
            CurveSpec::Triangle { q, r } => RevenueCurve::triangle(*q, *r),
            CurveSpec::Piecewise(points) => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                RevenueCurve::piecewise(&pts)
            }
            CurveSpec::PointMass(v) => RevenueCurve::point_mass(*v),
            CurveSpec::EqualRevenue(scale) => RevenueCurve::equal_revenue(*scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub curve: CurveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub name: String,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

impl Default for MechanismSpec {
    fn default() -> Self {
        Self { name: "spa".into(), k: 1, prices: None }
    }
}

impl MechanismSpec {
    pub fn build(&self) -> Result<Mechanism> {
        Mechanism::from_name(&self.name, self.k, self.prices.as_deref())
    }

    /// Items sold, which is also the ex ante quantile budget.
    pub fn items(&self) -> usize {
        match self.name.as_str() {
            "vcg" | "vcg_constrained" => self.k,
            _ => 1,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_samples")]
    pub n_samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorChoice,
}

fn default_samples() -> u64 {
    100_000
}

impl Default for Sampling {
    fn default() -> Self {
        Self { n_samples: default_samples(), seed: 0, estimator: EstimatorChoice::Auto }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub profile: Vec<BidderSpec>,
    #[serde(default)]
    pub mechanism: MechanismSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicates: Option<DuplicatePlan>,
    #[serde(default)]
    pub constants: Constants,
    /// Each bound `c` adds the check `revenue >= c * opt - 4 stderr`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundKind>,
    /// Acceptance criteria to run with the configured seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verify: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepSpec>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub output: Output,
}

impl ExperimentConfig {
    /// The profile with curve errors tagged by bidder name (or position).
    pub fn build_profile(&self) -> Result<BidderProfile> {
        let mut curves = Vec::with_capacity(self.profile.len());
        for (i, b) in self.profile.iter().enumerate() {
            let label = b.name.clone().unwrap_or_else(|| format!("profile[{i}]"));
            curves.push(b.curve.build().map_err(|e| match e {
                DupError::ConcavityViolation { index, left, right, .. } => {
                    DupError::ConcavityViolation { curve: label.clone(), index, left, right }
                }
                DupError::Domain(m) => DupError::Domain(format!("curve '{label}': {m}")),
                other => other,
            })?);
        }
        BidderProfile::with_names(curves, self.profile.iter().map(|b| b.name.clone()).collect())
    }

    /// Checks everything short of running the experiment.
    pub fn validate(&self) -> Result<()> {
        if !self.profile.is_empty() {
            let profile = self.build_profile()?;
            self.mechanism.build()?;
            if let Some(plan) = &self.duplicates {
                extend_profile(&profile, plan)?;
            }
        }
        if self.sampling.n_samples == 0 {
            return Err(DupError::domain("sampling.n_samples must be positive"));
        }
        for b in &self.bounds {
            b.evaluate(&self.constants)?;
        }
        if !self.bounds.is_empty() && self.profile.is_empty() {
            return Err(DupError::domain("bound checks need a profile"));
        }
        for &id in &self.verify {
            if !(1..=9).contains(&id) {
                return Err(DupError::domain(format!("no acceptance criterion {id}")));
            }
        }
        for s in &self.sweeps {
            s.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical emitted form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(emit_config(self).as_bytes()))
    }
}

fn parse_error(e: &serde_json::Error) -> DupError {
    DupError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical pretty JSON; `parse_config(emit_config(c)) == c`.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const LBHR: &str = r#"{
        "name": "lbhr",
        "profile": [
            {"name": "point_mass", "curve": {"triangle": {"q": 1, "r": 1}}},
            {"name": "equal_revenue", "curve": {"equal_revenue": 1}}
        ],
        "duplicates": {"all_once": {"pair_constrained": false}},
        "sampling": {"n_samples": 1000, "seed": 7}
    }"#;

    #[test]
    fn parses_lbhr() {
        let c = parse_config(LBHR).unwrap();
        let p = c.build_profile().unwrap();
        assert_eq!(p.curves()[0], RevenueCurve::triangle(1.0, 1.0).unwrap());
        assert_eq!(p.curves()[1], RevenueCurve::equal_revenue(1.0).unwrap());
        assert_eq!(c.mechanism, MechanismSpec::default());
        assert_eq!(c.sampling.estimator, EstimatorChoice::Auto);
    }

    #[test]
    fn round_trip() {
        let c = parse_config(LBHR).unwrap();
        let text = emit_config(&c);
        let again = parse_config(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(emit_config(&again), text);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn hypothesis_checked_at_parse() {
        let text = r#"{"profile": [{"curve": {"point_mass": 1}}],
                       "constants": {"alpha": 0.6, "beta": 0.4}, "bounds": ["single"]}"#;
        assert!(matches!(parse_config(text), Err(DupError::HypothesisViolated(_))));
    }

    #[test]
    fn concavity_error_names_curve() {
        let text = r#"{"profile": [{"name": "bumpy", "curve": {"piecewise": [[0,0],[0.3,0.1],[0.6,0.5],[1,0]]}}]}"#;
        match parse_config(text) {
            Err(DupError::ConcavityViolation { curve, .. }) => assert_eq!(curve, "bumpy"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"profile": [{"curve": {"piecewise": [[0,0],[0.3,0.1],[0.6,0.5],[1,0]]}}]}"#;
        match parse_config(text) {
            Err(DupError::ConcavityViolation { curve, .. }) => assert_eq!(curve, "profile[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_text_reports_position() {
        match parse_config("{\n  \"profile\": [,]\n}") {
            Err(DupError::Parse { location, .. }) => assert!(location.starts_with("line 2")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_config(r#"{"profiel": []}"#), Err(DupError::Parse { .. })));
    }

    #[test]
    fn rejects_bad_plans_and_mechanisms() {
        let bad_plan = r#"{"profile": [{"curve": {"point_mass": 1}}], "duplicates": {"single_of": {"i": 3}}}"#;
        assert!(matches!(parse_config(bad_plan), Err(DupError::Index { .. })));
        let bad_mech = r#"{"profile": [{"curve": {"point_mass": 1}}], "mechanism": {"name": "dutch"}}"#;
        assert!(matches!(parse_config(bad_mech), Err(DupError::Domain(_))));
        assert!(parse_config(r#"{"verify": [10]}"#).is_err());
    }
}
