//! Runs the selected checks and writes `results/*.csv`, `summary.json` and
//! `timings.json` under the output directory.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::checks::{run_check, CheckOutcome, RunContext};
use crate::config::{CheckFamily, Resolved};
use crate::{HarnessError, Result};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Worker count; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub dump_counts: bool,
    pub dump_gaussians: bool,
    /// Restrict to one family of checks; `None` runs all.
    pub family: Option<CheckFamily>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outcomes: BTreeMap<String, CheckOutcome>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.outcomes.values().all(|o| o.pass)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Runs every selected check. A check that errors is recorded as failed
/// and the run continues; only setup errors abort.
pub fn run_experiment(resolved: &Resolved, opts: &RunOptions) -> Result<RunSummary> {
    if opts.replicates.is_some_and(|r| r < 2) {
        return Err(HarnessError::Config("--replicates: need at least 2".into()));
    }
    let master_seed = opts.seed.unwrap_or(resolved.config.master_seed);
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| resolved.config.output_dir.clone());
    let results_dir = out_dir.join("results");
    std::fs::create_dir_all(&results_dir)?;

    let ctx = RunContext {
        resolved,
        master_seed,
        replicates: opts.replicates,
        results_dir,
        dump_counts: opts.dump_counts,
        dump_gaussians: opts.dump_gaussians,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Config(format!("--threads: {e}")))?;

    let mut outcomes = BTreeMap::new();
    let mut timings = BTreeMap::new();
    for spec in &resolved.config.checks {
        if opts.family.is_some_and(|f| f != spec.family()) {
            continue;
        }
        let start = Instant::now();
        let outcome = pool
            .install(|| run_check(&ctx, spec))
            .unwrap_or_else(CheckOutcome::from);
        timings.insert(spec.id().to_string(), start.elapsed().as_secs_f64());
        eprintln!(
            "{} {}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            spec.id(),
            outcome.detail
        );
        outcomes.insert(spec.id().to_string(), outcome);
    }

    let mut summary = serde_json::Map::new();
    for (id, o) in &outcomes {
        summary.insert(id.clone(), serde_json::to_value(o)?);
    }
    summary.insert(
        "_run".into(),
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "master_seed": master_seed,
            "checks": outcomes.len(),
            "pass": outcomes.values().all(|o| o.pass),
        }),
    );
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(summary))?;
    std::fs::write(out_dir.join("summary.json"), text + "\n")?;
    let text = serde_json::to_string_pretty(&timings)?;
    std::fs::write(out_dir.join("timings.json"), text + "\n")?;

    Ok(RunSummary { out_dir, outcomes })
}
