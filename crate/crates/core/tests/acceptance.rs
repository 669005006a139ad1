//! Runs every acceptance criterion once and prints a pass/fail line for
//! each. `DUPKIT_SEED` overrides the default seed; `DUPKIT_CRITERIA` takes a
//! comma-separated subset such as `1,4,8`.

use std::process::ExitCode;

use dupkit::cli::verify::{run_criterion, Expectations};

const DEFAULT_SEED: u64 = 20_240_601;

fn main() -> ExitCode {
    let seed = std::env::var("DUPKIT_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED);
    let ids: Vec<u8> = std::env::var("DUPKIT_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_else(|| (1..=9).collect());
    let exp = Expectations::default();
    let mut all_ok = true;
    for id in ids {
        let report = match run_criterion(id, seed, &exp) {
            Ok(r) => r,
            Err(e) => {
                println!("criterion {id}: FAIL ({e})");
                all_ok = false;
                continue;
            }
        };
        let ok = report.passed() && report.within_budget();
        all_ok &= ok;
        println!(
            "criterion {}: {} {} [{:.1}s of {}s]",
            report.id,
            if ok { "PASS" } else { "FAIL" },
            report.title,
            report.elapsed.as_secs_f64(),
            report.budget.as_secs()
        );
        for r in report.rows.iter() {
            println!("    [{}] {}: {}", if r.passed { "ok" } else { "FAIL" }, r.label, r.detail);
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
