//! `batch`: many seeds of one scenario, per-episode records plus aggregate.

use std::path::PathBuf;
use std::sync::Mutex;

use anyhow::Result;

use safelane_core::sim::run_episode;

use crate::commands::run::resolve_config;
use crate::output::{self, Aggregate, EpisodeMetricsOut, EpisodeRecord, Manifest};
use crate::{ControllerKind, ScenarioSelect};

#[derive(Clone, Debug)]
pub struct BatchArgs {
    pub scenario: Option<ScenarioSelect>,
    pub config: Option<PathBuf>,
    pub controller: ControllerKind,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub forbid_crash: bool,
}

pub struct BatchOutcome {
    pub aggregate: Aggregate,
    pub dir: PathBuf,
}

/// Run the batch and write `episodes.jsonl`, `aggregate.json`,
/// `failures.json` (when any) and `manifest.json` under one directory.
pub fn run_batch(args: &BatchArgs) -> Result<BatchOutcome> {
    let name = match (&args.scenario, &args.config) {
        (Some(s), _) => s.name.clone(),
        (None, Some(p)) => p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into()),
        (None, None) => anyhow::bail!("one of --scenario or --config is required"),
    };

    // Episodes are independent; partition seeds over worker threads and
    // reassemble in seed order so outputs never depend on scheduling.
    let jobs = args.jobs.max(1).min(args.seeds.len().max(1));
    let results: Mutex<Vec<Option<Result<EpisodeRecord, String>>>> =
        Mutex::new((0..args.seeds.len()).map(|_| None).collect());
    let next: Mutex<usize> = Mutex::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = {
                    let mut guard = next.lock().unwrap();
                    let idx = *guard;
                    if idx >= args.seeds.len() {
                        return;
                    }
                    *guard += 1;
                    idx
                };
                let seed = args.seeds[idx];
                let outcome = (|| -> Result<EpisodeRecord> {
                    let (config, _) = resolve_config(&args.scenario, &args.config, seed)?;
                    let mut policy = args.controller.build();
                    let report = run_episode(&config, policy.as_mut(), false)?;
                    Ok(EpisodeRecord {
                        seed,
                        metrics: EpisodeMetricsOut::from(&report.metrics),
                    })
                })()
                .map_err(|e| format!("{e:#}"));
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let mut records = Vec::new();
    let mut failures: Vec<(u64, String)> = Vec::new();
    for (idx, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("worker left a seed unprocessed") {
            Ok(record) => records.push(record),
            Err(msg) => failures.push((args.seeds[idx], msg)),
        }
    }

    let aggregate = Aggregate::from_records(&name, args.controller.name(), &records, failures.len());
    let dir = args
        .out_dir
        .join(format!("batch_{name}_{}", args.controller.name()));
    output::write_jsonl(&dir.join("episodes.jsonl"), &records)?;
    output::write_json(&dir.join("aggregate.json"), &aggregate)?;
    if !failures.is_empty() {
        let lines: Vec<serde_json::Value> = failures
            .iter()
            .map(|(seed, msg)| serde_json::json!({ "seed": seed, "error": msg }))
            .collect();
        output::write_json(&dir.join("failures.json"), &lines)?;
    }
    output::write_json(
        &dir.join("manifest.json"),
        &Manifest::new(
            "batch",
            format!("{name} {}", args.controller.name()),
            args.seeds.clone(),
        ),
    )?;
    Ok(BatchOutcome { aggregate, dir })
}

pub fn cmd_batch(args: &BatchArgs) -> Result<i32> {
    let outcome = run_batch(args)?;
    let a = &outcome.aggregate;
    println!(
        "{} {}: seeds {} (failed {}) mean_speed {:.3} mean|jerk| {:.3} crash_rate {:.4} route_miss_rate {:.4} merge_miss_rate {:.4}",
        a.scenario,
        a.controller,
        a.seeds,
        a.failed_seeds,
        a.mean_speed,
        a.mean_abs_jerk,
        a.crash_rate,
        a.route_miss_rate,
        a.merge_miss_rate,
    );
    if args.forbid_crash && a.crash_rate > 0.0 {
        eprintln!("crashes occurred and --forbid-crash is set");
        return Ok(2);
    }
    Ok(0)
}
