//! `run`: one episode, one metrics record, optional trace.

use std::path::PathBuf;

use anyhow::{bail, Result};

use safelane_core::sim::{make_scenario, run_episode, ScenarioConfig};

use crate::output::{self, EpisodeMetricsOut, Manifest};
use crate::{config, ControllerKind, ScenarioSelect};

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub scenario: Option<ScenarioSelect>,
    pub config: Option<PathBuf>,
    pub controller: ControllerKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub trace: bool,
    pub forbid_crash: bool,
}

pub(crate) fn resolve_config(
    scenario: &Option<ScenarioSelect>,
    config_path: &Option<PathBuf>,
    seed: u64,
) -> Result<(ScenarioConfig, String)> {
    match (scenario, config_path) {
        (Some(_), Some(_)) => bail!("pass either --scenario or --config, not both"),
        (Some(select), None) => {
            let kind = select.to_kind()?;
            Ok((make_scenario(&kind, seed), select.name.clone()))
        }
        (None, Some(path)) => {
            let mut cfg = config::load_scenario(path)?;
            cfg.seed = seed;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            Ok((cfg, name))
        }
        (None, None) => bail!("one of --scenario or --config is required"),
    }
}

/// Returns the process exit code: 0 on success, 2 on a crash under
/// `--forbid-crash`.
pub fn cmd_run(args: &RunArgs) -> Result<i32> {
    let (config, name) = resolve_config(&args.scenario, &args.config, args.seed)?;
    let mut policy = args.controller.build();
    let report = run_episode(&config, policy.as_mut(), args.trace)?;

    let dir = args
        .out_dir
        .join(format!("run_{name}_{}_seed{}", args.controller.name(), args.seed));
    output::write_json(
        &dir.join("metrics.json"),
        &EpisodeMetricsOut::from(&report.metrics),
    )?;
    if let Some(rows) = &report.trace {
        output::write_text(&dir.join("trace.csv"), &output::trace_csv(rows))?;
    }
    output::write_json(
        &dir.join("manifest.json"),
        &Manifest::new("run", format!("{name} {}", args.controller.name()), vec![args.seed]),
    )?;

    println!(
        "{name} seed {}: steps {} mean_speed {:.3} mean|jerk| {:.3} crash {} route_miss {} merge_miss {}",
        args.seed,
        report.metrics.steps,
        report.metrics.mean_speed,
        report.metrics.mean_abs_jerk,
        report.metrics.crash,
        report.metrics.route_miss,
        report.metrics.merge_miss,
    );
    if args.forbid_crash && report.metrics.crash {
        eprintln!("crash occurred and --forbid-crash is set");
        return Ok(2);
    }
    Ok(0)
}
