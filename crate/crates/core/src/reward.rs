//! The four driving reward terms and their weighted combination.
//!
//! Efficiency penalizes deviation from the current lane's target speed,
//! comfort penalizes squared jerk, the discretionary lane-change term pays a
//! boosted bonus (or penalty) for moving toward a faster (slower) lane, and
//! the mandatory term penalizes being off-route, growing as the section end
//! approaches. All terms are normalized to comparable scales.

use crate::action::LaneChange;
use crate::kernel::{SpeedTriple, VehicleParams};
use crate::math;
use crate::route::{RouteSpec, SectionOutsideRoute};

/// Weights of the combined reward. Efficiency is implicitly weighted 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    pub comfort: f64,
    pub lane_change: f64,
    pub mandatory: f64,
    /// Discount factor in [0, 1); enters the lane-change boost.
    pub discount: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            comfort: 1.0,
            lane_change: 1.0,
            mandatory: 1.0,
            discount: 0.99,
        }
    }
}

/// Everything one state transition exposes to the reward terms.
#[derive(Clone, Copy, Debug)]
pub struct TransitionView<'a> {
    /// Ego speed in the state being scored (m/s).
    pub speed: f64,
    /// Ego speed after the transition (m/s).
    pub next_speed: f64,
    /// Acceleration applied on the previous step (m/s²); zero on the first
    /// transition of an episode.
    pub prev_accel: f64,
    /// Acceleration applied on this step (m/s²).
    pub accel: f64,
    /// Target speeds at the decision state.
    pub targets: SpeedTriple,
    /// Lateral component of the action.
    pub lane_move: LaneChange,
    /// Current section index.
    pub section: usize,
    /// Current lane index.
    pub lane: usize,
    /// Longitudinal distance to the end of the current section (m).
    pub dist_to_section_end: f64,
    pub ego: &'a VehicleParams,
}

/// Error from reward evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardError {
    /// The lane move targets a lane with no target speed; the action filter
    /// must prevent this.
    AbsentTargetLane(LaneChange),
    SectionOutsideRoute(SectionOutsideRoute),
}

impl core::fmt::Display for RewardError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RewardError::AbsentTargetLane(mv) => {
                write!(f, "lane move {mv:?} targets a lane with no target speed")
            }
            RewardError::SectionOutsideRoute(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for RewardError {}

impl From<SectionOutsideRoute> for RewardError {
    fn from(e: SectionOutsideRoute) -> Self {
        RewardError::SectionOutsideRoute(e)
    }
}

/// Normalized deviation of the ego speed from the current lane's target
/// speed; zero at the target, −1 when stopped under a full target. Speeding
/// above the target is penalized through the absolute value. A zero target
/// (fully jammed lane) defines the penalty as zero.
pub fn r_efficiency(view: &TransitionView) -> f64 {
    let target = view.targets.cur;
    if target <= 0.0 {
        return 0.0;
    }
    -math::abs(target - view.speed) / target
}

/// Squared jerk normalized by the widest possible acceleration swing; always
/// in [−1, 0].
pub fn r_comfort(view: &TransitionView) -> f64 {
    let swing = view.ego.max_accel + view.ego.max_decel;
    let jerk = (view.accel - view.prev_accel) / swing;
    -(jerk * jerk)
}

/// Number of control steps an idealized catch-up from `v1` to `v0` takes at
/// full acceleration, rounded half away from zero.
pub fn catchup_steps(v0: f64, v1: f64, ego: &VehicleParams) -> u32 {
    let steps = math::abs(v0 - v1) / (ego.max_accel * ego.reaction_time);
    let rounded = math::round(steps);
    if rounded >= u32::MAX as f64 {
        u32::MAX
    } else {
        rounded as u32
    }
}

/// Geometric-series boost Σ_{t<T} γ^t with T = [`catchup_steps`], written in
/// closed form.
pub fn boost_coefficient(v0: f64, v1: f64, weights: &RewardWeights, ego: &VehicleParams) -> f64 {
    let t = catchup_steps(v0, v1, ego);
    if t == 0 {
        return 0.0;
    }
    let gamma = weights.discount;
    (1.0 - math::powf(gamma, t as f64)) / (1.0 - gamma)
}

/// Discretionary lane-change term: the boosted, normalized target-speed
/// difference toward the chosen lane; zero when staying.
pub fn r_discretionary_lc(
    view: &TransitionView,
    weights: &RewardWeights,
) -> Result<f64, RewardError> {
    let target = match view.lane_move {
        LaneChange::Stay => return Ok(0.0),
        mv => view
            .targets
            .for_move(mv)
            .ok_or(RewardError::AbsentTargetLane(mv))?,
    };
    let cur = view.targets.cur;
    if cur <= 0.0 {
        return Ok(0.0);
    }
    let boost = boost_coefficient(target, cur, weights, view.ego);
    Ok(boost * (target - cur) / cur)
}

/// Mandatory lane-change (route-following) penalty: the number of lane
/// changes still needed to reach an on-route lane, scaled up as the section
/// end approaches. Zero when on-route.
pub fn r_mandatory_lc(view: &TransitionView, route: &RouteSpec) -> Result<f64, RewardError> {
    let delta = route.lane_changes_needed(view.section, view.lane)?;
    Ok(-(delta as f64) / (1.0 + view.dist_to_section_end))
}

/// Weighted sum of the four terms.
pub fn total_reward(
    view: &TransitionView,
    route: &RouteSpec,
    weights: &RewardWeights,
) -> Result<f64, RewardError> {
    Ok(r_efficiency(view)
        + weights.comfort * r_comfort(view)
        + weights.lane_change * r_discretionary_lc(view, weights)?
        + weights.mandatory * r_mandatory_lc(view, route)?)
}
