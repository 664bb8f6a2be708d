//! `platoon`: run a constant-speed leader with followers and compare the
//! measured steady-state gaps against the closed-form prediction.

use std::path::PathBuf;

use anyhow::{Context, Result};

use safelane_core::analysis::platoon_prediction;
use safelane_core::controllers::ConstantSpeed;
use safelane_core::kernel::VehicleParams;
use safelane_core::sim::{make_scenario, run_episode, ScenarioKind, TraceRow};

use crate::output::{self, Csv, Manifest};

#[derive(Clone, Debug)]
pub struct PlatoonArgs {
    pub leader_speed: f64,
    pub followers: usize,
    pub min_stopped_gap: f64,
    /// Per-vehicle deceleration capabilities, leader first.
    pub decels: Option<Vec<f64>>,
    pub horizon: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub struct PlatoonOutcome {
    pub predicted: Vec<f64>,
    pub measured: Vec<f64>,
    pub dir: PathBuf,
}

/// Gaps of consecutive pairs at the last traced step, head of the platoon
/// first, measured bumper to bumper along the ring.
fn measured_gaps(
    rows: &[TraceRow],
    config: &safelane_core::sim::ScenarioConfig,
    followers: usize,
) -> Result<Vec<f64>> {
    let net = config.network.build();
    let last_step = rows.iter().map(|r| r.step).max().context("empty trace")?;
    let chain_of = |id: u32| -> Result<f64> {
        let row = rows
            .iter()
            .find(|r| r.step == last_step && r.id == id)
            .with_context(|| format!("vehicle {id} missing from final trace step"))?;
        Ok(net.offset(row.section) + row.pos)
    };
    // Followers hold ids 0..k in spawn order (head first); the controlled
    // leader is spawned last.
    let leader_id = followers as u32;
    let total = net.total_length();
    let length = VehicleParams::default().length;
    let mut gaps = Vec::with_capacity(followers);
    let mut ahead = chain_of(leader_id)?;
    for id in 0..followers as u32 {
        let behind = chain_of(id)?;
        let mut dist = ahead - behind;
        if dist < 0.0 {
            dist += total;
        }
        gaps.push(dist - length);
        ahead = behind;
    }
    Ok(gaps)
}

pub fn run_platoon(args: &PlatoonArgs) -> Result<PlatoonOutcome> {
    let kind = ScenarioKind::Platoon {
        leader_speed: args.leader_speed,
        followers: args.followers,
        min_stopped_gap: args.min_stopped_gap,
        decels: args.decels.clone(),
    };
    let mut config = make_scenario(&kind, args.seed);
    config.horizon = args.horizon;

    // The platoon track is open; the head must not run off its end.
    let net = config.network.build();
    let head = net.offset(config.ego.section) + config.ego.pos;
    let travel = args.leader_speed * config.step_len * args.horizon as f64;
    anyhow::ensure!(
        head + travel + 50.0 < net.total_length(),
        "horizon {} steps at {} m/s exceeds the {} m platoon track",
        args.horizon,
        args.leader_speed,
        net.total_length()
    );

    let mut policy = ConstantSpeed {
        target: args.leader_speed,
    };
    let report = run_episode(&config, &mut policy, true)?;
    anyhow::ensure!(!report.metrics.crash, "platoon run crashed");
    let rows = report.trace.as_ref().expect("trace was requested");

    let decels = args
        .decels
        .clone()
        .unwrap_or_else(|| vec![3.0; args.followers + 1]);
    let follower_params: Vec<VehicleParams> = decels[1..]
        .iter()
        .map(|&d| VehicleParams {
            max_decel: d,
            min_stopped_gap: args.min_stopped_gap,
            ..VehicleParams::default()
        })
        .collect();
    let predicted = platoon_prediction(args.leader_speed, decels[0], &follower_params)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let measured = measured_gaps(rows, &config, args.followers)?;

    let dir = args.out_dir.join(format!(
        "platoon_w{}_k{}_eps{}_seed{}",
        args.leader_speed, args.followers, args.min_stopped_gap, args.seed
    ));
    let mut csv = Csv::new("follower,predicted_gap,measured_gap,relative_error");
    for (i, (p, m)) in predicted.iter().zip(measured.iter()).enumerate() {
        csv.row(&[
            i.to_string(),
            p.to_string(),
            m.to_string(),
            ((m - p).abs() / p).to_string(),
        ]);
    }
    output::write_text(&dir.join("comparison.csv"), &csv.finish())?;
    output::write_text(&dir.join("trace.csv"), &output::trace_csv(rows))?;
    output::write_json(
        &dir.join("manifest.json"),
        &Manifest::new(
            "platoon",
            format!(
                "w={} followers={} eps={}",
                args.leader_speed, args.followers, args.min_stopped_gap
            ),
            vec![args.seed],
        ),
    )?;
    Ok(PlatoonOutcome {
        predicted,
        measured,
        dir,
    })
}

pub fn cmd_platoon(args: &PlatoonArgs) -> Result<i32> {
    let outcome = run_platoon(args)?;
    for (i, (p, m)) in outcome
        .predicted
        .iter()
        .zip(outcome.measured.iter())
        .enumerate()
    {
        println!(
            "follower {i}: predicted {:.6} m, measured {:.6} m, relative error {:.2e}",
            p,
            m,
            (m - p).abs() / p
        );
    }
    println!("outputs in {}", outcome.dir.display());
    Ok(0)
}
