//! `repro`: the pinned reproduction bundle — every built-in scenario across
//! 30 seeds and both controllers, the platoon comparison, and the stability
//! sweep — under fixed seeds with plot-ready outputs.

use std::path::PathBuf;

use anyhow::Result;

use crate::commands::batch::{run_batch, BatchArgs};
use crate::commands::platoon::{run_platoon, PlatoonArgs};
use crate::commands::stability::{cmd_stability, StabilityArgs};
use crate::output::{self, Csv};
use crate::{ControllerKind, ScenarioSelect};

#[derive(Clone, Debug)]
pub struct ReproArgs {
    pub seeds: usize,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

fn select(name: &str, spacing: f64, route: &str) -> ScenarioSelect {
    ScenarioSelect {
        name: name.into(),
        spacing,
        route: route.into(),
        ..ScenarioSelect::default()
    }
}

/// The scenario roster of the reproduction bundle.
pub fn roster() -> Vec<(String, ScenarioSelect)> {
    vec![
        ("loop_normal".into(), select("loop_normal", 20.0, "random")),
        ("loop_congested".into(), select("loop_congested", 20.0, "random")),
        ("loop_emergency".into(), select("loop_emergency", 20.0, "random")),
        ("freeway_bypass_h5".into(), select("freeway_bypass", 5.0, "random")),
        ("freeway_bypass_h10".into(), select("freeway_bypass", 10.0, "random")),
        ("freeway_bypass_h20".into(), select("freeway_bypass", 20.0, "random")),
        ("freeway_emergency".into(), select("freeway_emergency", 20.0, "random")),
        ("freeway_merge".into(), select("freeway_merge", 20.0, "random")),
    ]
}

pub fn cmd_repro(args: &ReproArgs) -> Result<i32> {
    let seeds: Vec<u64> = (0..args.seeds as u64).collect();
    let mut summary = Csv::new(
        "scenario,controller,seeds,mean_speed,mean_abs_jerk,crash_rate,route_miss_rate,\
         merge_miss_rate",
    );
    let mut worst_crash_rate: f64 = 0.0;

    for (label, scenario) in roster() {
        for controller in [ControllerKind::GippsGreedy, ControllerKind::ComfortGreedy] {
            let out = run_batch(&BatchArgs {
                scenario: Some(ScenarioSelect {
                    name: scenario.name.clone(),
                    ..scenario.clone()
                }),
                config: None,
                controller,
                seeds: seeds.clone(),
                jobs: args.jobs,
                out_dir: args.out_dir.join("batches").join(&label),
                forbid_crash: false,
            })?;
            let a = &out.aggregate;
            println!(
                "{label:<20} {:<15} crash_rate {:.4} route_miss_rate {:.4} merge_miss_rate {:.4} \
                 mean_speed {:.2} mean|jerk| {:.3}",
                a.controller, a.crash_rate, a.route_miss_rate, a.merge_miss_rate, a.mean_speed,
                a.mean_abs_jerk
            );
            worst_crash_rate = worst_crash_rate.max(a.crash_rate);
            summary.row(&[
                label.clone(),
                a.controller.clone(),
                a.seeds.to_string(),
                a.mean_speed.to_string(),
                a.mean_abs_jerk.to_string(),
                a.crash_rate.to_string(),
                a.route_miss_rate.to_string(),
                a.merge_miss_rate.to_string(),
            ]);
        }
    }
    output::write_text(&args.out_dir.join("summary.csv"), &summary.finish())?;

    let platoon = run_platoon(&PlatoonArgs {
        leader_speed: 25.0,
        followers: 3,
        min_stopped_gap: 4.0,
        decels: None,
        horizon: 3000,
        seed: 0,
        out_dir: args.out_dir.clone(),
    })?;
    for (i, (p, m)) in platoon
        .predicted
        .iter()
        .zip(platoon.measured.iter())
        .enumerate()
    {
        println!(
            "platoon follower {i}: predicted {p:.4} m, measured {m:.4} m, relative error {:.2e}",
            (m - p).abs() / p
        );
    }

    cmd_stability(&StabilityArgs {
        out_dir: args.out_dir.clone(),
        ..StabilityArgs::default()
    })?;

    println!("bundle written under {}", args.out_dir.display());
    println!("worst crash rate across batches: {worst_crash_rate}");
    Ok(0)
}
