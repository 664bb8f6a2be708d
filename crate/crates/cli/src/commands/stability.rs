//! `stability`: equilibrium and Jacobian-spectrum sweep over a parameter
//! grid, written as plot-ready CSV.

use std::path::PathBuf;

use anyhow::Result;

use safelane_core::analysis::{FollowerSystem, Stability};
use safelane_core::kernel::VehicleParams;

use crate::output::{self, Csv, Manifest};

#[derive(Clone, Debug)]
pub struct StabilityArgs {
    pub w_min: f64,
    pub w_max: f64,
    pub w_points: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_points: usize,
    pub r_list: Vec<f64>,
    pub min_stopped_gap: f64,
    /// Leader deceleration expressed as an offset above the ego's.
    pub leader_decel_extra: f64,
    pub include_standstill: bool,
    pub out_dir: PathBuf,
}

impl Default for StabilityArgs {
    fn default() -> Self {
        Self {
            w_min: 0.5,
            w_max: 60.0,
            w_points: 120,
            d_min: 1.0,
            d_max: 9.0,
            d_points: 9,
            r_list: vec![0.05, 0.1, 0.5, 1.0],
            min_stopped_gap: 2.0,
            leader_decel_extra: 0.0,
            include_standstill: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![min];
    }
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

pub struct SweepRow {
    pub w: f64,
    pub d_e: f64,
    pub d_l: f64,
    pub r: f64,
    pub epsilon: f64,
    pub report: safelane_core::analysis::EquilibriumReport,
}

pub fn run_sweep(args: &StabilityArgs) -> Vec<SweepRow> {
    let mut speeds = Vec::new();
    if args.include_standstill {
        speeds.push(0.0);
    }
    speeds.extend(grid(args.w_min, args.w_max, args.w_points));

    let mut rows = Vec::new();
    for &w in &speeds {
        for &d in &grid(args.d_min, args.d_max, args.d_points) {
            for &r in &args.r_list {
                let sys = FollowerSystem {
                    leader_speed: w,
                    ego: VehicleParams {
                        max_decel: d,
                        reaction_time: r,
                        min_stopped_gap: args.min_stopped_gap,
                        ..VehicleParams::default()
                    },
                    leader_decel: d + args.leader_decel_extra,
                };
                rows.push(SweepRow {
                    w,
                    d_e: d,
                    d_l: d + args.leader_decel_extra,
                    r,
                    epsilon: args.min_stopped_gap,
                    report: sys.classify(),
                });
            }
        }
    }
    rows
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = Csv::new(
        "w,d_e,d_l,r,epsilon,g_star,lambda1_re,lambda1_im,lambda2_re,lambda2_im,\
         spectral_radius,classification",
    );
    for row in rows {
        let rep = &row.report;
        csv.row(&[
            row.w.to_string(),
            row.d_e.to_string(),
            row.d_l.to_string(),
            row.r.to_string(),
            row.epsilon.to_string(),
            rep.gap.to_string(),
            rep.eigenvalues.0.re.to_string(),
            rep.eigenvalues.0.im.to_string(),
            rep.eigenvalues.1.re.to_string(),
            rep.eigenvalues.1.im.to_string(),
            rep.spectral_radius.to_string(),
            rep.classification.as_str().to_string(),
        ]);
    }
    csv.finish()
}

pub fn cmd_stability(args: &StabilityArgs) -> Result<i32> {
    let rows = run_sweep(args);
    let stable = rows
        .iter()
        .filter(|r| r.report.classification == Stability::AsymptoticallyStable)
        .count();
    let marginal = rows
        .iter()
        .filter(|r| r.report.classification == Stability::Marginal)
        .count();
    let unstable = rows.len() - stable - marginal;

    let dir = args.out_dir.join("stability");
    output::write_text(&dir.join("stability.csv"), &sweep_csv(&rows))?;
    output::write_json(
        &dir.join("manifest.json"),
        &Manifest::new(
            "stability",
            format!(
                "w [{}, {}] x{}, d [{}, {}] x{}, r {:?}",
                args.w_min, args.w_max, args.w_points, args.d_min, args.d_max, args.d_points,
                args.r_list
            ),
            Vec::new(),
        ),
    )?;
    println!(
        "{} grid points: {stable} asymptotically stable, {marginal} marginal, {unstable} unstable",
        rows.len()
    );
    println!("outputs in {}", dir.display());
    Ok(0)
}
