//! Driving policies behind one interface.
//!
//! Two deterministic controllers are built in: a safe-speed tracker with
//! threshold-based greedy lane selection, and a one-step reward maximizer
//! that additionally weighs comfort. Both emit direct actions that already
//! satisfy the safety constraints; external policies may instead emit raw
//! coordinates and rely on the filter.

use alloc::vec::Vec;

use crate::action::{Action, LaneChange, RawPolicyOutput};
use crate::kernel::{
    lane_change_feasible, max_safe_accel, target_speeds, NeighborContext, Side, SpeedTriple,
    VehicleParams,
};
use crate::math;
use crate::reward::{self, RewardWeights, TransitionView};
use crate::route::RouteSpec;

/// Everything a policy may look at when deciding.
#[derive(Clone, Debug)]
pub struct DecisionView<'a> {
    pub neighbors: NeighborContext,
    pub speed: f64,
    pub prev_accel: f64,
    pub params: VehicleParams,
    pub speed_limit: f64,
    pub speed_cap: f64,
    pub route: &'a RouteSpec,
    pub section: usize,
    pub lane: usize,
    pub dist_to_section_end: f64,
    /// Crossing the current section boundary on the current lane would leave
    /// the route (an off-route exit, an uncovered section, or a lane drop).
    pub off_route_dead_end: bool,
    /// Present only when the policy asked for it.
    pub observation: Option<Vec<f64>>,
}

/// A policy's verdict for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyDecision {
    /// Coordinates in [−3, 3]²; the runner projects them through the filter.
    Raw(RawPolicyOutput),
    /// A concrete action; the runner still enforces the constraints on it.
    Direct(Action),
}

pub trait Policy {
    /// Whether the runner should build the observation vector each step.
    fn wants_observation(&self) -> bool {
        false
    }

    fn decide(&mut self, view: &DecisionView) -> PolicyDecision;
}

/// Tuning shared by the built-in controllers.
#[derive(Clone, Copy, Debug)]
pub struct GreedyConfig {
    /// Discretionary changes need at least this target-speed gain (m/s).
    pub lane_change_threshold: f64,
    /// Acceleration candidates evaluated by the reward maximizer.
    pub accel_grid: usize,
    /// Distance from a section end inside which route pressure overrides
    /// discretionary lane selection (m).
    pub mandatory_distance: f64,
    /// Speed backed off the current target while waiting for a gap during a
    /// blocked mandatory change (m/s).
    pub yield_slowdown: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            lane_change_threshold: 3.0,
            accel_grid: 21,
            mandatory_distance: 300.0,
            yield_slowdown: 2.0,
        }
    }
}

/// Outcome of the shared mandatory-route rule.
enum RoutePressure {
    None,
    /// Feasible change toward the route.
    Move(LaneChange),
    /// Change needed but blocked; back off and wait for a gap.
    Yield,
}

fn route_pressure(view: &DecisionView, cfg: &GreedyConfig) -> RoutePressure {
    let delta = match view.route.lane_changes_needed(view.section, view.lane) {
        Ok(d) => d,
        Err(_) => return RoutePressure::None, // off the route's coverage
    };
    if delta == 0 || view.dist_to_section_end > cfg.mandatory_distance {
        return RoutePressure::None;
    }
    match view.route.direction_to_route(view.section, view.lane) {
        Ok(Some(mv)) => {
            let side = mv.side().expect("direction is never Stay");
            if lane_change_feasible(side, view.speed, &view.neighbors, &view.params) {
                RoutePressure::Move(mv)
            } else {
                RoutePressure::Yield
            }
        }
        _ => RoutePressure::None,
    }
}

fn track_speed_accel(target: f64, view: &DecisionView) -> f64 {
    ((target - view.speed) / view.params.reaction_time)
        .clamp(-view.params.max_decel, view.params.max_accel)
}

/// Inside the mandatory window, discretionary moves must not worsen the
/// lane-change count to the route; outside it anything goes.
fn discretionary_allowed(view: &DecisionView, cfg: &GreedyConfig, mv: LaneChange) -> bool {
    if view.dist_to_section_end > cfg.mandatory_distance {
        return true;
    }
    let target_lane = match mv {
        LaneChange::Left => view.lane + 1,
        LaneChange::Stay => return true,
        LaneChange::Right => match view.lane.checked_sub(1) {
            Some(l) => l,
            None => return false,
        },
    };
    let here = view
        .route
        .lane_changes_needed(view.section, view.lane)
        .unwrap_or(0);
    let there = view
        .route
        .lane_changes_needed(view.section, target_lane)
        .unwrap_or(0);
    there <= here
}

fn lane_targets(view: &DecisionView) -> SpeedTriple {
    target_speeds(
        &view.neighbors,
        view.speed,
        view.speed_limit,
        &view.params,
        view.speed_cap,
    )
    .unwrap_or(SpeedTriple {
        left: None,
        cur: 0.0,
        right: None,
    })
}

/// Upper acceleration bound exactly as the action filter computes it.
fn safe_accel_bound(view: &DecisionView) -> f64 {
    let p = &view.params;
    match max_safe_accel(&view.neighbors, view.speed, p, view.speed_cap) {
        Ok(b) => crate::action::accel_upper_bound(b.accel, b.already_unsafe, p),
        Err(_) => -p.max_decel,
    }
}

/// Acceleration bound that lets the vehicle stop before the current section
/// end, used while waiting out a blocked mandatory change whose lane would
/// otherwise carry the vehicle off its route.
fn dead_end_accel_bound(view: &DecisionView) -> f64 {
    let p = &view.params;
    let safe = crate::kernel::max_safe_speed(
        view.dist_to_section_end,
        view.speed,
        0.0,
        p,
        f64::INFINITY,
        view.speed_cap,
    )
    .expect("infinite leader decel always satisfies the defensive principle");
    let speed = if safe.already_unsafe { 0.0 } else { safe.speed };
    (speed - view.speed) / p.reaction_time
}

/// Safe-speed tracker with greedy lane selection: drive at the current
/// lane's target speed; move to an adjacent lane when its target speed beats
/// the current one by more than the threshold and the change is safe. Route
/// pressure near a section end overrides the discretionary rule.
#[derive(Clone, Debug, Default)]
pub struct GippsGreedy {
    pub cfg: GreedyConfig,
}

impl GippsGreedy {
    pub fn new(cfg: GreedyConfig) -> Self {
        Self { cfg }
    }
}

impl Policy for GippsGreedy {
    fn decide(&mut self, view: &DecisionView) -> PolicyDecision {
        let targets = lane_targets(view);
        // Derive the acceleration from the same bound the filter enforces,
        // so the emitted action passes it bit for bit.
        let a_ub = safe_accel_bound(view);
        let accel = track_speed_accel(view.speed_limit, view).min(a_ub);

        let (accel, lane_change) = match route_pressure(view, &self.cfg) {
            RoutePressure::Move(mv) => (accel, mv),
            RoutePressure::Yield => {
                let reduced = (targets.cur - self.cfg.yield_slowdown).max(0.0);
                let mut a = track_speed_accel(reduced, view).min(a_ub);
                if view.off_route_dead_end {
                    a = a.min(dead_end_accel_bound(view)).max(-view.params.max_decel);
                }
                (a, LaneChange::Stay)
            }
            RoutePressure::None => {
                let mut best: Option<(LaneChange, f64)> = None;
                for (mv, side, target) in [
                    (LaneChange::Left, Side::Left, targets.left),
                    (LaneChange::Right, Side::Right, targets.right),
                ] {
                    let Some(target) = target else { continue };
                    if target - targets.cur <= self.cfg.lane_change_threshold {
                        continue;
                    }
                    if !discretionary_allowed(view, &self.cfg, mv)
                        || !lane_change_feasible(side, view.speed, &view.neighbors, &view.params)
                    {
                        continue;
                    }
                    // Strict comparison keeps the left preference on ties.
                    if best.map_or(true, |(_, t)| target > t) {
                        best = Some((mv, target));
                    }
                }
                (accel, best.map_or(LaneChange::Stay, |(mv, _)| mv))
            }
        };
        PolicyDecision::Direct(Action { accel, lane_change })
    }
}

/// Greedy reward maximizer: enumerates an acceleration grid crossed with
/// the feasible lane moves, scores each candidate by the reward of the state
/// it leads to, and returns the argmax. Ties break toward the smaller
/// acceleration change, then toward staying in lane.
///
/// Scoring detail: efficiency and route penalties persist while a state
/// lasts, whereas jerk is paid once and the lane-change bonus is already a
/// boosted stream equivalent. To compare them on one scale, the two
/// persistent terms enter the score as discounted streams (divided by
/// 1 − γ) — the same geometric-series reasoning behind the lane-change
/// boost. Without this, any one-step efficiency gain is smaller than one
/// grid cell of jerk cost and the controller freezes its acceleration.
#[derive(Clone, Debug, Default)]
pub struct ComfortGreedy {
    pub cfg: GreedyConfig,
    pub weights: RewardWeights,
}

impl ComfortGreedy {
    pub fn new(cfg: GreedyConfig, weights: RewardWeights) -> Self {
        Self { cfg, weights }
    }

    fn score(&self, view: &DecisionView, targets: &SpeedTriple, accel: f64, mv: LaneChange) -> f64 {
        let p = &view.params;
        let next_speed = (view.speed + accel * p.reaction_time).max(0.0);
        let next_dist = (view.dist_to_section_end - next_speed * p.reaction_time).max(0.0);
        let next_lane = match mv {
            LaneChange::Left => view.lane + 1,
            LaneChange::Stay => view.lane,
            LaneChange::Right => view.lane.saturating_sub(1),
        };
        let tv = TransitionView {
            speed: next_speed,
            next_speed,
            prev_accel: view.prev_accel,
            accel,
            targets: *targets,
            lane_move: mv,
            section: view.section,
            lane: next_lane,
            dist_to_section_end: next_dist,
            ego: p,
        };
        let stream = 1.0 / (1.0 - self.weights.discount);
        let mandatory = reward::r_mandatory_lc(&tv, view.route).unwrap_or(0.0);
        stream * reward::r_efficiency(&tv)
            + self.weights.comfort * reward::r_comfort(&tv)
            + self.weights.lane_change
                * reward::r_discretionary_lc(&tv, &self.weights).unwrap_or(0.0)
            + self.weights.mandatory * stream * mandatory
    }
}

impl Policy for ComfortGreedy {
    fn decide(&mut self, view: &DecisionView) -> PolicyDecision {
        let p = &view.params;
        let targets = lane_targets(view);
        let a_ub = safe_accel_bound(view);

        let mut lane_moves: Vec<LaneChange> = Vec::with_capacity(3);
        let mut a_top = a_ub;
        match route_pressure(view, &self.cfg) {
            RoutePressure::Move(mv) => lane_moves.push(mv),
            RoutePressure::Yield => {
                lane_moves.push(LaneChange::Stay);
                let reduced = (targets.cur - self.cfg.yield_slowdown).max(0.0);
                a_top = a_top.min(track_speed_accel(reduced, view));
                if view.off_route_dead_end {
                    a_top = a_top.min(dead_end_accel_bound(view)).max(-p.max_decel);
                }
            }
            RoutePressure::None => {
                lane_moves.push(LaneChange::Stay);
                for (mv, side, target) in [
                    (LaneChange::Left, Side::Left, targets.left),
                    (LaneChange::Right, Side::Right, targets.right),
                ] {
                    if target.is_some()
                        && discretionary_allowed(view, &self.cfg, mv)
                        && lane_change_feasible(side, view.speed, &view.neighbors, p)
                    {
                        lane_moves.push(mv);
                    }
                }
            }
        }

        let grid = self.cfg.accel_grid.max(3);
        let mut best: Option<(f64, f64, Action)> = None; // (score, |jerk|, action)
        for mv in lane_moves {
            // The held acceleration joins the grid as a zero-jerk candidate,
            // so comfort can keep a smooth profile between grid cells.
            for i in 0..=grid {
                let accel = if i == grid {
                    view.prev_accel.clamp(-p.max_decel, a_top)
                } else {
                    let t = i as f64 / (grid - 1) as f64;
                    // Interior lerp points can overshoot by an ulp; keep
                    // every candidate inside the safe interval.
                    math::lerp(-p.max_decel, a_top, t).clamp(-p.max_decel, a_top)
                };
                let score = self.score(view, &targets, accel, mv);
                let jerk = math::abs(accel - view.prev_accel);
                let replace = match &best {
                    None => true,
                    Some((s, j, _)) => score > *s || (score == *s && jerk < *j),
                };
                if replace {
                    best = Some((
                        score,
                        jerk,
                        Action {
                            accel,
                            lane_change: mv,
                        },
                    ));
                }
            }
        }
        PolicyDecision::Direct(best.expect("grid is never empty").2)
    }
}

/// Holds a fixed speed; used for scripted platoon leaders.
#[derive(Clone, Copy, Debug)]
pub struct ConstantSpeed {
    pub target: f64,
}

impl Policy for ConstantSpeed {
    fn decide(&mut self, view: &DecisionView) -> PolicyDecision {
        PolicyDecision::Direct(Action {
            accel: track_speed_accel(self.target, view),
            lane_change: LaneChange::Stay,
        })
    }
}

/// Emits the same raw coordinates every step; exercises the safety filter.
#[derive(Clone, Copy, Debug)]
pub struct ConstantRaw {
    pub x: f64,
    pub y: f64,
}

impl Policy for ConstantRaw {
    fn decide(&mut self, _view: &DecisionView) -> PolicyDecision {
        PolicyDecision::Raw(RawPolicyOutput {
            x: self.x,
            y: self.y,
        })
    }
}
