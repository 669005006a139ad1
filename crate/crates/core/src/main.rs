use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dupkit::analysis::{classify_k, classify_single, BoundKind, Constants};
use dupkit::cli::verify::{verify_selected, Expectations};
use dupkit::cli::{parse_config, run_experiment, ExperimentConfig, Format};
use dupkit::duplication::{
    noisy_reports, select_by_beta, select_by_noisy_beta, select_by_sample, select_k_independent,
    select_k_set_noisy,
};
use dupkit::error::{DupError, Result};
use dupkit::examples::{example_lbhr, example_n3, min_ratio_two_triangles};
use dupkit::exante::solve_exante;
use dupkit::simulate::rng;

#[derive(Parser)]
#[command(name = "dupkit", version, about = "Duplicate-bidder auction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ex ante relaxation for the configured profile.
    Exante,
    /// Run the configured experiment and its checks.
    Simulate,
    /// Pick the bidder(s) to duplicate by the configured rule.
    Select {
        #[arg(long, value_enum, default_value = "beta")]
        rule: Rule,
    },
    /// Evaluate bound formulas at the configured constants.
    Bounds,
    /// Reproduce the worked examples.
    Examples,
    /// Classify the profile into a case of the structural lemma.
    Classify,
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criteria, default all.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    /// Largest `Rev_i(beta)`.
    Beta,
    /// Largest noisy oracle report at quantiles near beta.
    Noisy,
    /// Largest single sample from each bidder.
    Sample,
    /// The k largest noisy reports.
    Kset,
    /// Largest `max Rev_i` on `[beta, 1]`, usable for every k.
    Independent,
}

/// Exit status for an error: 1 when the mathematics failed a check, 2 for
/// usage and configuration problems.
fn error_code(e: &DupError) -> u8 {
    match e {
        DupError::LemmaViolation(_) | DupError::DominanceViolation(_) | DupError::NonConvergence(_) => 1,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.sampling.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.sampling.n_samples = n;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_profile(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.profile.is_empty() {
        return Err(DupError::Domain("this command needs --config with a non-empty profile".into()));
    }
    Ok(())
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| DupError::Domain(format!("constants.{name} is required")))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scalar leaves of a JSON value as `path,value` lines.
fn flatten(v: &Value, path: &str, out: &mut String) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| {
            flatten(x, &if path.is_empty() { k.clone() } else { format!("{path}.{k}") }, out)
        }),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(x, &format!("{path}[{i}]"), out)),
        Value::String(s) => out.push_str(&format!("{path},{}\n", csv_field(s))),
        other => out.push_str(&format!("{path},{other}\n")),
    }
}

fn render<T: Serialize>(value: &T, format: Format) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    match format {
        Format::Json => serde_json::to_string_pretty(&v).expect("serializable") + "\n",
        Format::Csv => {
            let mut out = String::from("key,value\n");
            flatten(&v, "", &mut out);
            out
        }
    }
}

fn emit(cfg: &ExperimentConfig, text: &str) -> Result<()> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = load_config(cli)?;
    let fmt = cfg.output.format;
    match &cli.command {
        Command::Exante => {
            require_profile(&cfg)?;
            let sol = solve_exante(&cfg.build_profile()?, cfg.mechanism.items(), 1e-12)?;
            emit(&cfg, &render(&sol, fmt))?;
        }
        Command::Simulate => {
            let report = run_experiment(&cfg)?;
            emit(&cfg, &report.render(fmt))?;
            for f in report.failures() {
                eprintln!("check failed [{}] {}: {}", f.section, f.row.label, f.row.detail);
            }
            return Ok(report.exit_code());
        }
        Command::Select { rule } => {
            require_profile(&cfg)?;
            let p = cfg.build_profile()?;
            let c = &cfg.constants;
            let seed = cfg.sampling.seed;
            let out = match rule {
                Rule::Beta => {
                    let beta = need(c.beta, "beta")?;
                    json!({"rule": "beta", "beta": beta, "chosen": [select_by_beta(&p, beta)?]})
                }
                Rule::Independent => {
                    let beta = need(c.beta, "beta")?;
                    json!({"rule": "independent", "beta": beta, "chosen": [select_k_independent(&p, beta)?]})
                }
                Rule::Noisy | Rule::Kset => {
                    let (beta, eps) = (need(c.beta, "beta")?, need(c.epsilon, "epsilon")?);
                    let reports = noisy_reports(&p, beta, eps, seed)?;
                    let (name, chosen) = match rule {
                        Rule::Kset => ("kset", select_k_set_noisy(&reports, c.k.unwrap_or(cfg.mechanism.items()))?),
                        _ => ("noisy", vec![select_by_noisy_beta(&reports)?]),
                    };
                    json!({"rule": name, "beta": beta, "epsilon": eps, "reports": reports, "chosen": chosen})
                }
                Rule::Sample => {
                    let samples: Vec<f64> = p
                        .curves()
                        .iter()
                        .enumerate()
                        .map(|(i, curve)| curve.sample_value(rng::uniform(seed, 0, i as u64)))
                        .collect();
                    json!({"rule": "sample", "samples": samples, "chosen": [select_by_sample(&p, &samples)?]})
                }
            };
            emit(&cfg, &render(&out, fmt))?;
        }
        Command::Bounds => {
            let kinds: Vec<BoundKind> = if cfg.bounds.is_empty() { vec![BoundKind::Warmup] } else { cfg.bounds.clone() };
            let rows: Vec<Value> = kinds
                .iter()
                .map(|b| b.evaluate(&cfg.constants).map(|v| json!({"bound": b.name(), "value": v})))
                .collect::<Result<_>>()?;
            emit(&cfg, &render(&json!({"constants": cfg.constants, "bounds": rows}), fmt))?;
        }
        Command::Examples => {
            let n3 = example_n3(cfg.sampling.n_samples, cfg.sampling.seed)?;
            let out = json!({
                "lbhr": example_lbhr()?,
                "n3": n3,
                "min_ratio_two_triangles": min_ratio_two_triangles(1000)?,
            });
            emit(&cfg, &render(&out, fmt))?;
        }
        Command::Classify => {
            require_profile(&cfg)?;
            let p = cfg.build_profile()?;
            let Constants { alpha, beta, gamma, delta, k, .. } = cfg.constants;
            let k = k.unwrap_or(cfg.mechanism.items());
            let sol = solve_exante(&p, k, 1e-12)?;
            let case = if k == 1 {
                classify_single(&p, need(alpha, "alpha")?, need(beta, "beta")?, &sol)?
            } else {
                classify_k(&p, k, need(beta, "beta")?, need(gamma, "gamma")?, need(delta, "delta")?, &sol)?
            };
            emit(&cfg, &render(&json!({"opt": sol.opt, "case": case}), fmt))?;
        }
        Command::Verify { criteria } => {
            let ids = criteria.clone().unwrap_or_else(|| (1..=9).collect());
            let summary = verify_selected(cfg.sampling.seed, &ids, &Expectations::default())?;
            let text = match fmt {
                Format::Json => render(&summary, fmt),
                Format::Csv => {
                    let mut out = String::from("criterion,label,passed,detail\n");
                    for c in &summary.criteria {
                        for r in &c.rows {
                            out.push_str(&format!("{},{},{},{}\n", c.id, csv_field(&r.label), r.passed, csv_field(&r.detail)));
                        }
                    }
                    out
                }
            };
            emit(&cfg, &text)?;
            return Ok(if summary.passed() { 0 } else { 1 });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(DupError::Domain(format!("cannot start {w} workers: {e}"))),
        },
        None => run(&cli),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
