//! Scenario runner, batch harness and analysis sweeps for the driving
//! kernel and microsimulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safelane_cli::commands::batch::BatchArgs;
use safelane_cli::commands::platoon::PlatoonArgs;
use safelane_cli::commands::repro::ReproArgs;
use safelane_cli::commands::run::RunArgs;
use safelane_cli::commands::stability::StabilityArgs;
use safelane_cli::commands::{cmd_batch, cmd_platoon, cmd_repro, cmd_run, cmd_stability};
use safelane_cli::output::resolve_out_dir;
use safelane_cli::{ControllerKind, ScenarioSelect};

#[derive(Parser)]
#[command(
    name = "safelane",
    about = "Safety-constrained driving scenarios: single runs, seed batches, platoon and stability analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioFlags {
    /// Built-in scenario kind (loop_normal, loop_congested, loop_emergency,
    /// freeway_bypass, freeway_emergency, freeway_merge, platoon).
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario configuration file (TOML) instead of a built-in kind.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Head-to-head fleet spacing for freeway_bypass (m).
    #[arg(long, default_value_t = 20.0)]
    spacing: f64,
    /// Route assignment for freeway_bypass: off_ramp, mainline or random.
    #[arg(long, default_value = "random")]
    route: String,
    /// Off-ramp probability when --route random.
    #[arg(long, default_value_t = 0.5)]
    offramp_probability: f64,
}

impl ScenarioFlags {
    fn select(&self) -> Option<ScenarioSelect> {
        self.scenario.as_ref().map(|name| ScenarioSelect {
            name: name.clone(),
            spacing: self.spacing,
            route: self.route.clone(),
            offramp_probability: self.offramp_probability,
            ..ScenarioSelect::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its metrics (and optional trace).
    Run {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Controller: gipps_greedy or comfort_greedy.
        #[arg(long, default_value = "comfort_greedy")]
        controller: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (default ./out, or $SAFELANE_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-step CSV trace of every vehicle.
        #[arg(long)]
        trace: bool,
        /// Exit with code 2 if the episode ends in a crash.
        #[arg(long)]
        forbid_crash: bool,
    },
    /// Run many seeds of one scenario and aggregate.
    Batch {
        #[command(flatten)]
        scenario: ScenarioFlags,
        #[arg(long, default_value = "comfort_greedy")]
        controller: String,
        /// Number of seeds, 0..N.
        #[arg(long, default_value_t = 30)]
        seeds: u64,
        /// Explicit comma-separated seed list; overrides --seeds.
        #[arg(long)]
        seed_list: Option<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        forbid_crash: bool,
    },
    /// Platoon steady state: measured gaps vs the closed-form prediction.
    Platoon {
        /// Leader speed w (m/s).
        #[arg(long, default_value_t = 25.0)]
        leader_speed: f64,
        #[arg(long, default_value_t = 3)]
        followers: usize,
        /// Minimal stopped gap ε (m).
        #[arg(long, default_value_t = 4.0)]
        min_stopped_gap: f64,
        /// Comma-separated per-vehicle decelerations, leader first.
        #[arg(long)]
        decels: Option<String>,
        #[arg(long, default_value_t = 3000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equilibrium/eigenvalue sweep over (w, d, r), written as CSV.
    Stability {
        #[arg(long, default_value_t = 0.5)]
        w_min: f64,
        #[arg(long, default_value_t = 60.0)]
        w_max: f64,
        #[arg(long, default_value_t = 120)]
        w_points: usize,
        #[arg(long, default_value_t = 1.0)]
        d_min: f64,
        #[arg(long, default_value_t = 9.0)]
        d_max: f64,
        #[arg(long, default_value_t = 9)]
        d_points: usize,
        /// Comma-separated reaction times.
        #[arg(long, default_value = "0.05,0.1,0.5,1.0")]
        r_list: String,
        #[arg(long, default_value_t = 2.0)]
        min_stopped_gap: f64,
        /// Leader deceleration margin above the ego's.
        #[arg(long, default_value_t = 0.0)]
        leader_decel_extra: f64,
        /// Skip the standstill (w = 0) rows.
        #[arg(long)]
        no_standstill: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full reproduction bundle: all scenario batches, platoon, stability.
    Repro {
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_f64_list(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("bad number {s:?}: {e}"))
        })
        .collect()
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run {
            scenario,
            controller,
            seed,
            out,
            trace,
            forbid_crash,
        } => cmd_run(&RunArgs {
            scenario: scenario.select(),
            config: scenario.config.clone(),
            controller: ControllerKind::parse(&controller)?,
            seed,
            out_dir: resolve_out_dir(out),
            trace,
            forbid_crash,
        }),
        Command::Batch {
            scenario,
            controller,
            seeds,
            seed_list,
            jobs,
            out,
            forbid_crash,
        } => {
            let seeds = match seed_list {
                Some(list) => list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u64>()
                            .map_err(|e| anyhow::anyhow!("bad seed {s:?}: {e}"))
                    })
                    .collect::<anyhow::Result<Vec<u64>>>()?,
                None => (0..seeds).collect(),
            };
            anyhow::ensure!(!seeds.is_empty(), "at least one seed is required");
            cmd_batch(&BatchArgs {
                scenario: scenario.select(),
                config: scenario.config.clone(),
                controller: ControllerKind::parse(&controller)?,
                seeds,
                jobs,
                out_dir: resolve_out_dir(out),
                forbid_crash,
            })
        }
        Command::Platoon {
            leader_speed,
            followers,
            min_stopped_gap,
            decels,
            horizon,
            seed,
            out,
        } => cmd_platoon(&PlatoonArgs {
            leader_speed,
            followers,
            min_stopped_gap,
            decels: decels.as_deref().map(parse_f64_list).transpose()?,
            horizon,
            seed,
            out_dir: resolve_out_dir(out),
        }),
        Command::Stability {
            w_min,
            w_max,
            w_points,
            d_min,
            d_max,
            d_points,
            r_list,
            min_stopped_gap,
            leader_decel_extra,
            no_standstill,
            out,
        } => cmd_stability(&StabilityArgs {
            w_min,
            w_max,
            w_points,
            d_min,
            d_max,
            d_points,
            r_list: parse_f64_list(&r_list)?,
            min_stopped_gap,
            leader_decel_extra,
            include_standstill: !no_standstill,
            out_dir: resolve_out_dir(out),
        }),
        Command::Repro { seeds, jobs, out } => cmd_repro(&ReproArgs {
            seeds,
            jobs,
            out_dir: resolve_out_dir(out),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}