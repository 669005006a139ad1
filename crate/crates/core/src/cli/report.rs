//! Running a config and emitting its report.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, Format};
use super::verify::{run_criterion, run_sweep, Expectations, Row};
use crate::duplication::extend_profile;
use crate::error::Result;
use crate::exante::solve_exante;
use crate::mechanisms::PairConstraint;
use crate::simulate::{estimate_revenue, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub section: String,
    #[serde(flatten)]
    pub row: Row,
}

/// Everything needed to reproduce and audit a run: the config itself, its
/// hash, the estimates, and one record per check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exante_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Estimate>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.row.passed)
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            Format::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("config_hash,seed,section,label,passed,detail\n");
        let mut line = |section: &str, label: &str, passed: bool, detail: &str| {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.config_hash,
                self.seed,
                csv_field(section),
                csv_field(label),
                passed,
                csv_field(detail)
            );
        };
        if let Some(opt) = self.exante_opt {
            line("exante", "opt", true, &format!("{opt:.12}"));
        }
        if let Some(e) = &self.estimate {
            line("estimate", "revenue", true, &format!("mean {:.12} stderr {:.12} n {}", e.mean, e.stderr, e.n_samples));
        }
        for c in &self.checks {
            line(&c.section, &c.row.label, c.row.passed, &c.row.detail);
        }
        out
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        std::fs::write(path, self.render(format))?;
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs every configured section. Errors are configuration problems; a
/// failed check is reported in the returned report instead.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let seed = config.sampling.seed;
    let mut checks = Vec::new();
    let (mut exante_opt, mut estimate) = (None, None);

    if !config.profile.is_empty() {
        let profile = config.build_profile()?;
        let mechanism = config.mechanism.build()?;
        let (env, constraint) = match &config.duplicates {
            Some(plan) => extend_profile(&profile, plan)?,
            None => (profile.clone(), PairConstraint::none()),
        };
        let opt = solve_exante(&profile, config.mechanism.items(), 1e-12)?.opt;
        let est = estimate_revenue(
            &env,
            &constraint,
            &mechanism,
            config.sampling.n_samples,
            seed,
            config.sampling.estimator,
        )?;
        for b in &config.bounds {
            let c = b.evaluate(&config.constants)?;
            let floor = c * opt - 4.0 * est.stderr;
            checks.push(Check {
                section: "bound".into(),
                row: Row {
                    label: format!("{}: revenue >= {c:.6} opt - 4 sigma", b.name()),
                    detail: format!("{:.6} vs {floor:.6}", est.mean),
                    passed: est.mean >= floor,
                },
            });
        }
        exante_opt = Some(opt);
        estimate = Some(est);
    }

    let exp = Expectations::default();
    for &id in &config.verify {
        let r = run_criterion(id, seed, &exp)?;
        let section = format!("criterion {id}");
        checks.extend(r.rows.into_iter().map(|row| Check { section: section.clone(), row }));
    }
    for s in &config.sweeps {
        checks.push(Check { section: "sweep".into(), row: run_sweep(s, seed) });
    }

    let passed = checks.iter().all(|c| c.row.passed);
    Ok(Report { config_hash: config.hash(), seed, config: config.clone(), exante_opt, estimate, checks, passed })
}
