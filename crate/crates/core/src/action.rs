//! Projection of raw policy outputs onto the set of safe actions.
//!
//! Policies emit points in the square [−3, 3]²; the filter maps them to an
//! acceleration inside the safe interval and a lane move that is either
//! feasible or demoted to staying in lane. Enforcement is hard projection,
//! not a penalty: the returned action always satisfies the constraints.

use crate::kernel::{
    self, lane_change_feasible, max_safe_accel, NeighborContext, Side, VehicleParams,
};
use crate::math;

/// Raw two-coordinate policy output, nominally in [−3, 3]².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawPolicyOutput {
    pub x: f64,
    pub y: f64,
}

/// Discrete lateral move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaneChange {
    Left,
    Stay,
    Right,
}

impl LaneChange {
    pub fn side(self) -> Option<Side> {
        match self {
            LaneChange::Left => Some(Side::Left),
            LaneChange::Stay => None,
            LaneChange::Right => Some(Side::Right),
        }
    }
}

/// A constraint-satisfying action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action {
    /// Longitudinal acceleration (m/s²), within [−d, clip(â_safe, −d, a)].
    pub accel: f64,
    /// Lateral move; never `Left`/`Right` unless the change was feasible at
    /// decision time.
    pub lane_change: LaneChange,
}

fn clamp_coord(c: f64) -> f64 {
    c.clamp(-3.0, 3.0)
}

/// Upper acceleration bound: the safe-speed bound clipped to the vehicle's
/// box limits, collapsing to maximal braking when the state is already
/// unsafe.
pub fn accel_upper_bound(a_safe: f64, already_unsafe: bool, ego: &VehicleParams) -> f64 {
    if already_unsafe {
        -ego.max_decel
    } else {
        a_safe.clamp(-ego.max_decel, ego.max_accel)
    }
}

/// Affine projection of `x` onto [−d, a_ub]. Endpoints map exactly:
/// `x = −3` gives −d and `x = +3` gives `a_ub`.
pub fn project_accel(x: f64, a_ub: f64, ego: &VehicleParams) -> f64 {
    let t = (clamp_coord(x) + 3.0) / 6.0;
    math::lerp(-ego.max_decel, a_ub, t)
}

/// Piecewise projection of `y` onto the lane-change set: left on [−3, −1),
/// stay on [−1, 1), right on [1, 3].
pub fn project_lane_change(y: f64) -> LaneChange {
    let y = clamp_coord(y);
    if y < -1.0 {
        LaneChange::Left
    } else if y < 1.0 {
        LaneChange::Stay
    } else {
        LaneChange::Right
    }
}

/// Map a raw policy output to a safe action for the given state.
///
/// Total: any finite raw coordinates yield an action that satisfies both the
/// acceleration constraint and the lane-change constraints. Raw coordinates
/// outside [−3, 3] are clamped first. Infeasible lane intents demote to
/// staying in lane. A context that violates the defensive principle is
/// treated as already unsafe and answered with maximal braking.
pub fn filter_action(
    raw: RawPolicyOutput,
    ctx: &NeighborContext,
    v_now: f64,
    ego: &VehicleParams,
    cap: f64,
) -> Action {
    let a_ub = match max_safe_accel(ctx, v_now, ego, cap) {
        Ok(bound) => accel_upper_bound(bound.accel, bound.already_unsafe, ego),
        Err(kernel::SafetyError::DefensivePrinciple { .. }) => -ego.max_decel,
    };
    let accel = project_accel(raw.x, a_ub, ego);
    let lane_change = demote_if_infeasible(project_lane_change(raw.y), ctx, v_now, ego);
    Action { accel, lane_change }
}

/// Enforce the action invariants on an already-formed action: clip the
/// acceleration into the safe interval and demote an infeasible lane move.
/// Feasible actions pass through unchanged.
pub fn enforce_action(
    action: Action,
    ctx: &NeighborContext,
    v_now: f64,
    ego: &VehicleParams,
    cap: f64,
) -> Action {
    let a_ub = match max_safe_accel(ctx, v_now, ego, cap) {
        Ok(bound) => accel_upper_bound(bound.accel, bound.already_unsafe, ego),
        Err(kernel::SafetyError::DefensivePrinciple { .. }) => -ego.max_decel,
    };
    Action {
        accel: action.accel.clamp(-ego.max_decel, a_ub),
        lane_change: demote_if_infeasible(action.lane_change, ctx, v_now, ego),
    }
}

fn demote_if_infeasible(
    mv: LaneChange,
    ctx: &NeighborContext,
    v_now: f64,
    ego: &VehicleParams,
) -> LaneChange {
    match mv.side() {
        None => LaneChange::Stay,
        Some(side) => {
            if lane_change_feasible(side, v_now, ctx, ego) {
                mv
            } else {
                LaneChange::Stay
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{LaneNeighbors, NeighborVehicle, Slot, DEFAULT_SPEED_CAP};
    use crate::rng::SplitMix64;

    fn ego() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn projection_endpoints_are_exact() {
        let p = ego();
        assert_eq!(project_accel(-3.0, 2.5, &p), -3.0);
        assert_eq!(project_accel(3.0, 2.5, &p), 2.5);
        assert_eq!(project_accel(3.0, -1.25, &p), -1.25);
    }

    #[test]
    fn projection_midpoint() {
        let p = ego();
        let a = project_accel(0.0, 2.5, &p);
        assert!((a - (-0.25)).abs() < 1e-15, "got {a}");
    }

    #[test]
    fn projection_clamps_out_of_range_input() {
        let p = ego();
        assert_eq!(project_accel(-7.0, 2.5, &p), -3.0);
        assert_eq!(project_accel(9.0, 2.5, &p), 2.5);
    }

    #[test]
    fn projection_monotone_in_x() {
        let p = ego();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=60 {
            let x = -3.0 + 0.1 * i as f64;
            let a = project_accel(x, 2.0, &p);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn lane_projection_boundaries() {
        assert_eq!(project_lane_change(0.0), LaneChange::Stay);
        assert_eq!(project_lane_change(-1.0), LaneChange::Stay);
        assert_eq!(project_lane_change(1.0), LaneChange::Right);
        assert_eq!(project_lane_change(-3.0), LaneChange::Left);
        assert_eq!(project_lane_change(3.0), LaneChange::Right);
        assert_eq!(project_lane_change(-1.0000001), LaneChange::Left);
    }

    #[test]
    fn absent_lane_demotes_to_stay() {
        let ctx = NeighborContext {
            current: LaneNeighbors::default(),
            left: None,
            right: Some(LaneNeighbors::default()),
        };
        let act = filter_action(
            RawPolicyOutput { x: 0.0, y: -3.0 },
            &ctx,
            10.0,
            &ego(),
            DEFAULT_SPEED_CAP,
        );
        assert_eq!(act.lane_change, LaneChange::Stay);
    }

    #[test]
    fn close_slow_leader_binds_the_throttle() {
        let p = ego();
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap: 6.0,
                    speed: 5.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: None,
            right: None,
        };
        let act = filter_action(
            RawPolicyOutput { x: 3.0, y: 0.0 },
            &ctx,
            10.0,
            &p,
            DEFAULT_SPEED_CAP,
        );
        assert!(act.accel < p.max_accel);
    }

    #[test]
    fn feasible_left_change_passes() {
        // Occupied left lane with both conditions satisfied (matched speeds,
        // both gaps above the 4 m threshold the parameters give).
        let p = ego();
        let neighbor = |gap: f64| NeighborVehicle {
            gap,
            speed: 20.0,
            max_decel: 3.0,
            reaction_time: 0.1,
        };
        let lane = LaneNeighbors {
            leader: Slot::Occupied(neighbor(5.0)),
            follower: Slot::Occupied(neighbor(5.0)),
        };
        let ctx = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(lane),
            right: None,
        };
        assert!(lane_change_feasible(Side::Left, 20.0, &ctx, &p));
        let act = filter_action(
            RawPolicyOutput { x: 0.0, y: -2.0 },
            &ctx,
            20.0,
            &p,
            DEFAULT_SPEED_CAP,
        );
        assert_eq!(act.lane_change, LaneChange::Left);

        // The same intent with a tight front gap demotes to staying.
        let tight = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(LaneNeighbors {
                leader: Slot::Occupied(neighbor(3.0)),
                follower: Slot::Occupied(neighbor(5.0)),
            }),
            right: None,
        };
        let act = filter_action(
            RawPolicyOutput { x: 0.0, y: -2.0 },
            &tight,
            20.0,
            &p,
            DEFAULT_SPEED_CAP,
        );
        assert_eq!(act.lane_change, LaneChange::Stay);
    }

    #[test]
    fn already_unsafe_collapses_to_full_braking() {
        let p = ego();
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap: 0.5,
                    speed: 0.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: None,
            right: None,
        };
        for x in [-3.0, 0.0, 3.0] {
            let act = filter_action(
                RawPolicyOutput { x, y: 0.0 },
                &ctx,
                30.0,
                &p,
                DEFAULT_SPEED_CAP,
            );
            assert_eq!(act.accel, -p.max_decel);
        }
    }

    #[test]
    fn enforcement_is_idempotent_on_feasible_actions() {
        let p = ego();
        let mut rng = SplitMix64::new(0xDEAD);
        for _ in 0..10_000 {
            let ctx = random_ctx(&mut rng);
            let v = rng.uniform(0.0, 40.0);
            let raw = RawPolicyOutput {
                x: rng.uniform(-3.0, 3.0),
                y: rng.uniform(-3.0, 3.0),
            };
            let once = filter_action(raw, &ctx, v, &p, DEFAULT_SPEED_CAP);
            let twice = enforce_action(once, &ctx, v, &p, DEFAULT_SPEED_CAP);
            assert_eq!(once, twice);
        }
    }

    fn random_slot(rng: &mut SplitMix64) -> Slot {
        if rng.chance(0.3) {
            Slot::Empty
        } else {
            Slot::Occupied(NeighborVehicle {
                gap: rng.uniform(0.0, 120.0),
                speed: rng.uniform(0.0, 40.0),
                max_decel: rng.uniform(3.0, 6.0),
                reaction_time: rng.uniform(0.05, 1.0),
            })
        }
    }

    fn random_lane(rng: &mut SplitMix64) -> Option<LaneNeighbors> {
        if rng.chance(0.2) {
            None
        } else {
            Some(LaneNeighbors {
                leader: random_slot(rng),
                follower: random_slot(rng),
            })
        }
    }

    fn random_ctx(rng: &mut SplitMix64) -> NeighborContext {
        NeighborContext {
            current: LaneNeighbors {
                leader: random_slot(rng),
                follower: random_slot(rng),
            },
            left: random_lane(rng),
            right: random_lane(rng),
        }
    }

    #[test]
    fn filter_is_total_and_output_satisfies_constraints() {
        // Fuzz over a million random states: the filter must always return
        // an action inside the safe set.
        let p = ego();
        let mut rng = SplitMix64::new(0xFEED_FACE);
        for _ in 0..1_000_000 {
            let ctx = random_ctx(&mut rng);
            let v = rng.uniform(0.0, 45.0);
            let raw = RawPolicyOutput {
                x: rng.uniform(-4.0, 4.0),
                y: rng.uniform(-4.0, 4.0),
            };
            let act = filter_action(raw, &ctx, v, &p, DEFAULT_SPEED_CAP);

            assert!(act.accel.is_finite());
            assert!(act.accel >= -p.max_decel - 1e-12);
            let bound = max_safe_accel(&ctx, v, &p, DEFAULT_SPEED_CAP).unwrap();
            let a_ub = accel_upper_bound(bound.accel, bound.already_unsafe, &p);
            assert!(act.accel <= a_ub + 1e-12);

            if let Some(side) = act.lane_change.side() {
                assert!(lane_change_feasible(side, v, &ctx, &p));
            }
        }
    }
}
