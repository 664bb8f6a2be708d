//! Episode driver: steps a world under a policy to the horizon or a crash,
//! and reduces the run to metrics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::action::{enforce_action, filter_action};
use crate::controllers::{DecisionView, Policy, PolicyDecision};
use crate::math;
use crate::sim::observe::build_observation;
use crate::sim::scenario::ScenarioConfig;
use crate::sim::world::{SimError, World};

/// Measured outcomes of one episode.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EpisodeMetrics {
    /// Steps actually simulated (≤ horizon on crash or ego exit).
    pub steps: usize,
    /// Mean ego speed over the episode (m/s).
    pub mean_speed: f64,
    /// Mean absolute ego jerk (m/s³).
    pub mean_abs_jerk: f64,
    /// Root-mean-square ego jerk (m/s³).
    pub rms_jerk: f64,
    pub crash: bool,
    pub crash_step: Option<u64>,
    pub route_miss: bool,
    pub merge_miss: bool,
    pub ego_exited: bool,
    /// Smallest front gap the ego observed (m); +∞ if it never had a leader.
    pub min_front_gap: f64,
}

/// One trace record; written per step per vehicle when tracing is on.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub step: u64,
    pub id: u32,
    pub section: usize,
    pub lane: usize,
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
    /// Absent on a vehicle's first recorded step.
    pub jerk: Option<f64>,
}

/// Episode result: metrics plus the optional full trace.
#[derive(Clone, Debug)]
pub struct EpisodeReport {
    pub metrics: EpisodeMetrics,
    pub trace: Option<Vec<TraceRow>>,
}

/// Run one episode of `config` under `policy`.
///
/// Raw policy outputs pass through the safety filter; direct actions are
/// re-enforced against the same constraints, which leaves already-feasible
/// actions unchanged.
pub fn run_episode(
    config: &ScenarioConfig,
    policy: &mut dyn Policy,
    with_trace: bool,
) -> Result<EpisodeReport, SimError> {
    let mut world = World::new(config)?;
    let mut speeds: Vec<f64> = Vec::with_capacity(config.horizon);
    let mut accels: Vec<f64> = Vec::with_capacity(config.horizon);
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut last_accel: BTreeMap<u32, f64> = BTreeMap::new();
    let mut min_front_gap = f64::INFINITY;
    let mut actions = BTreeMap::new();

    for _ in 0..config.horizon {
        if world.crash().is_some() {
            break;
        }
        let Some(ego) = world.ego() else {
            break; // exited an open network
        };
        let ego_id = ego.id;

        let neighbors = world.build_context(ego_id, f64::INFINITY);
        min_front_gap = min_front_gap.min(neighbors.current.leader.gap());
        let observation = policy
            .wants_observation()
            .then(|| build_observation(&world, ego_id, &config.observation));
        let view = DecisionView {
            neighbors,
            speed: ego.speed,
            prev_accel: ego.prev_accel,
            params: ego.params,
            speed_limit: ego.speed_limit,
            speed_cap: world.speed_cap(),
            route: &world.routes()[config.ego_route],
            section: ego.section,
            lane: ego.lane,
            dist_to_section_end: world.dist_to_section_end(ego),
            off_route_dead_end: world.crossing_loses_route(ego, &world.routes()[config.ego_route]),
            observation,
        };
        let action = match policy.decide(&view) {
            PolicyDecision::Raw(raw) => filter_action(
                raw,
                &view.neighbors,
                view.speed,
                &view.params,
                view.speed_cap,
            ),
            PolicyDecision::Direct(a) => enforce_action(
                a,
                &view.neighbors,
                view.speed,
                &view.params,
                view.speed_cap,
            ),
        };

        actions.clear();
        actions.insert(ego_id, action);
        world.step(&actions)?;

        if let Some(ego) = world.ego() {
            speeds.push(ego.speed);
            accels.push(ego.prev_accel);
        }
        if with_trace {
            let step = world.step_count() - 1;
            for v in world.vehicles() {
                let jerk = last_accel
                    .get(&v.id)
                    .map(|prev| (v.prev_accel - prev) / config.step_len);
                trace.push(TraceRow {
                    step,
                    id: v.id,
                    section: v.section,
                    lane: v.lane,
                    pos: v.pos,
                    speed: v.speed,
                    accel: v.prev_accel,
                    jerk,
                });
                last_accel.insert(v.id, v.prev_accel);
            }
        }
    }

    let status = *world.ego_status();
    let merge_miss = match (config.merge_lane, world.ego()) {
        (Some((section, lane)), Some(ego)) => ego.section == section && ego.lane == lane,
        _ => false,
    };

    let steps = speeds.len();
    let mean_speed = if steps == 0 {
        0.0
    } else {
        speeds.iter().sum::<f64>() / steps as f64
    };
    let jerks: Vec<f64> = accels
        .windows(2)
        .map(|w| (w[1] - w[0]) / config.step_len)
        .collect();
    let (mean_abs_jerk, rms_jerk) = if jerks.is_empty() {
        (0.0, 0.0)
    } else {
        let n = jerks.len() as f64;
        (
            jerks.iter().map(|j| math::abs(*j)).sum::<f64>() / n,
            math::sqrt(jerks.iter().map(|j| j * j).sum::<f64>() / n),
        )
    };

    Ok(EpisodeReport {
        metrics: EpisodeMetrics {
            steps,
            mean_speed,
            mean_abs_jerk,
            rms_jerk,
            crash: world.crash().is_some(),
            crash_step: world.crash().map(|c| c.step),
            route_miss: status.route_miss,
            merge_miss,
            ego_exited: status.exited,
            min_front_gap,
        },
        trace: with_trace.then_some(trace),
    })
}
