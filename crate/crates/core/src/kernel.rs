//! Closed-form safety envelope for car following and lane changing.
//!
//! The safety criterion: a vehicle is safe if and only if, should its leader
//! start braking at the leader's maximal rate, the vehicle can react for one
//! control period and then brake to a stop while keeping at least
//! `min_stopped_gap` metres of clearance. Everything in this module is a
//! pure function of its arguments.

use crate::math;

/// Ceiling applied to the safe speed when the lane ahead is empty, so that
/// downstream `min` with a speed limit is always well defined.
pub const DEFAULT_SPEED_CAP: f64 = 100.0;

/// Static capability limits of one vehicle. All quantities SI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleParams {
    /// Maximal acceleration (m/s²), > 0.
    pub max_accel: f64,
    /// Maximal deceleration magnitude (m/s²), > 0.
    pub max_decel: f64,
    /// Reaction time (s), > 0. Also the control period.
    pub reaction_time: f64,
    /// Minimal bumper-to-bumper clearance after a full stop (m), ≥ 0.
    pub min_stopped_gap: f64,
    /// Vehicle length (m), > 0.
    pub length: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            max_accel: 2.5,
            max_decel: 3.0,
            reaction_time: 0.1,
            min_stopped_gap: 2.0,
            length: 5.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.max_accel > 0.0) {
            return Err("max_accel must be > 0");
        }
        if !(self.max_decel > 0.0) {
            return Err("max_decel must be > 0");
        }
        if !(self.reaction_time > 0.0) {
            return Err("reaction_time must be > 0");
        }
        if !(self.min_stopped_gap >= 0.0) {
            return Err("min_stopped_gap must be >= 0");
        }
        if !(self.length > 0.0) {
            return Err("length must be > 0");
        }
        Ok(())
    }
}

/// Adjacent-lane direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// One observed neighbor: bumper-to-bumper gap plus the fields of its state
/// the safety formulas use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborVehicle {
    /// Bumper-to-bumper gap to the ego vehicle (m). Negative means overlap.
    pub gap: f64,
    /// Current speed (m/s).
    pub speed: f64,
    /// Maximal deceleration magnitude (m/s²).
    pub max_decel: f64,
    /// Reaction time (s). Used only for followers in lane-change checks.
    pub reaction_time: f64,
}

/// One neighbor role on one lane: either empty road or an actual vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Slot {
    /// Lane exists but the role is unoccupied (gap sentinel +∞).
    #[default]
    Empty,
    Occupied(NeighborVehicle),
}

impl Slot {
    /// Gap as a plain number: +∞ for an empty slot.
    pub fn gap(&self) -> f64 {
        match self {
            Slot::Empty => f64::INFINITY,
            Slot::Occupied(n) => n.gap,
        }
    }

    pub fn occupied(&self) -> Option<&NeighborVehicle> {
        match self {
            Slot::Empty => None,
            Slot::Occupied(n) => Some(n),
        }
    }
}

/// Leader/follower pair on one lane.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LaneNeighbors {
    pub leader: Slot,
    pub follower: Slot,
}

/// The six-neighbor view around the ego vehicle: leader and follower on the
/// current lane plus, where the lane exists, on the two adjacent lanes.
///
/// Lane absence is encoded structurally (`None`), which is what the gap
/// sentinel −1 denotes in flat encodings; an unoccupied role on an existing
/// lane carries gap +∞. `sentinel_gaps` recovers the flat encoding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborContext {
    pub current: LaneNeighbors,
    pub left: Option<LaneNeighbors>,
    pub right: Option<LaneNeighbors>,
}

impl NeighborContext {
    /// A context with no vehicles anywhere and both adjacent lanes present.
    pub fn empty_road() -> Self {
        Self {
            current: LaneNeighbors::default(),
            left: Some(LaneNeighbors::default()),
            right: Some(LaneNeighbors::default()),
        }
    }

    pub fn lane(&self, side: Side) -> Option<&LaneNeighbors> {
        match side {
            Side::Left => self.left.as_ref(),
            Side::Right => self.right.as_ref(),
        }
    }

    /// The six gaps in the order (g, ḡ, g_l, ḡ_l, g_r, ḡ_r), using the flat
    /// sentinel conventions: +∞ for an unoccupied role, −1 for a missing
    /// lane.
    pub fn sentinel_gaps(&self) -> [f64; 6] {
        fn pair(lane: &Option<LaneNeighbors>) -> (f64, f64) {
            match lane {
                None => (-1.0, -1.0),
                Some(l) => (l.leader.gap(), l.follower.gap()),
            }
        }
        let (gl, bgl) = pair(&self.left);
        let (gr, bgr) = pair(&self.right);
        [
            self.current.leader.gap(),
            self.current.follower.gap(),
            gl,
            bgl,
            gr,
            bgr,
        ]
    }

    /// The same context with left and right swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            current: self.current,
            left: self.right,
            right: self.left,
        }
    }
}

/// Error raised when a kernel call pairs an ego with a leader that brakes
/// harder than the ego can, which would let the safe-gap formula go negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SafetyError {
    DefensivePrinciple { ego_decel: f64, leader_decel: f64 },
}

impl core::fmt::Display for SafetyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SafetyError::DefensivePrinciple {
                ego_decel,
                leader_decel,
            } => write!(
                f,
                "defensive principle violated: ego max deceleration {ego_decel} m/s² exceeds \
                 leader max deceleration {leader_decel} m/s²"
            ),
        }
    }
}

impl core::error::Error for SafetyError {}

fn check_defensive(ego: &VehicleParams, leader_decel: f64) -> Result<(), SafetyError> {
    if ego.max_decel <= leader_decel {
        Ok(())
    } else {
        Err(SafetyError::DefensivePrinciple {
            ego_decel: ego.max_decel,
            leader_decel,
        })
    }
}

/// Front gap required for the ego vehicle to be safe when holding speed
/// `v_now` this step and `v_next` the next step, against a leader currently
/// at `v_leader` that may brake at `leader_decel`.
///
/// Requires `leader_decel ≥ ego.max_decel` (the defensive principle) and
/// nonnegative speeds.
pub fn required_safe_gap(
    v_now: f64,
    v_next: f64,
    v_leader: f64,
    ego: &VehicleParams,
    leader_decel: f64,
) -> Result<f64, SafetyError> {
    check_defensive(ego, leader_decel)?;
    debug_assert!(v_now >= 0.0 && v_leader >= 0.0);
    Ok((v_now + v_next) * 0.5 * ego.reaction_time
        + v_next * v_next / (2.0 * ego.max_decel)
        - v_leader * v_leader / (2.0 * leader_decel)
        + ego.min_stopped_gap)
}

/// Result of a safe-speed computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafeSpeed {
    /// Largest next-step speed that keeps the safety criterion satisfiable.
    /// May be marginally negative (down to −r·d/2) when even a full stop
    /// barely fits; consumers clamp for physics, but the raw root is kept so
    /// that the gap/speed inversion is exact.
    pub speed: f64,
    /// Set when the current state already violates the safety criterion
    /// (negative discriminant). `speed` is 0 and the caller should brake
    /// maximally.
    pub already_unsafe: bool,
}

/// Maximal safe next-step speed given the current front gap.
///
/// An infinite gap (empty lane) yields `cap`. Otherwise the positive root of
/// the safe-gap quadratic, so feeding the result back through
/// [`required_safe_gap`] as `v_next` reproduces `gap` exactly.
pub fn max_safe_speed(
    gap: f64,
    v_now: f64,
    v_leader: f64,
    ego: &VehicleParams,
    leader_decel: f64,
    cap: f64,
) -> Result<SafeSpeed, SafetyError> {
    if gap.is_infinite() && gap > 0.0 {
        return Ok(SafeSpeed {
            speed: cap,
            already_unsafe: false,
        });
    }
    check_defensive(ego, leader_decel)?;
    let d = ego.max_decel;
    let r = ego.reaction_time;
    let half_rd = 0.5 * r * d;
    let shortfall = 0.5 * r * v_now - v_leader * v_leader / (2.0 * leader_decel) - gap
        + ego.min_stopped_gap;
    let discriminant = half_rd * half_rd - 2.0 * d * shortfall;
    if discriminant < 0.0 {
        return Ok(SafeSpeed {
            speed: 0.0,
            already_unsafe: true,
        });
    }
    Ok(SafeSpeed {
        speed: -half_rd + math::sqrt(discriminant),
        already_unsafe: false,
    })
}

/// Safe speed for one lane slot: empty slots return `cap` without touching
/// the (absent) leader fields.
pub fn safe_speed_for_slot(
    slot: &Slot,
    v_now: f64,
    ego: &VehicleParams,
    cap: f64,
) -> Result<SafeSpeed, SafetyError> {
    match slot {
        Slot::Empty => Ok(SafeSpeed {
            speed: cap,
            already_unsafe: false,
        }),
        Slot::Occupied(n) => max_safe_speed(n.gap, v_now, n.speed, ego, n.max_decel, cap),
    }
}

/// Acceleration bound derived from the safe speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccelBound {
    /// `(v̂_safe − v_now) / r`, not yet clipped to the vehicle's box bounds;
    /// clipping is the action filter's job.
    pub accel: f64,
    pub already_unsafe: bool,
}

/// Upper acceleration bound against the current-lane leader.
pub fn max_safe_accel(
    ctx: &NeighborContext,
    v_now: f64,
    ego: &VehicleParams,
    cap: f64,
) -> Result<AccelBound, SafetyError> {
    let safe = safe_speed_for_slot(&ctx.current.leader, v_now, ego, cap)?;
    Ok(AccelBound {
        accel: (safe.speed - v_now) / ego.reaction_time,
        already_unsafe: safe.already_unsafe,
    })
}

/// Whether an immediate one-lane move to `side` is permitted.
///
/// Both vehicles are assumed to hold their current speeds for one step: the
/// front condition checks the ego against the target-lane leader, the rear
/// condition checks the target-lane follower against the ego, each with its
/// own deceleration and reaction time. A missing lane forbids the move; a
/// missing neighbor makes its condition vacuously true.
///
/// Safety also demands that both gaps be positive: the inequality thresholds
/// turn negative whenever the rearward vehicle of a pair is the slower one,
/// which would otherwise admit a move into an occupied slot.
pub fn lane_change_feasible(
    side: Side,
    v_now: f64,
    ctx: &NeighborContext,
    ego: &VehicleParams,
) -> bool {
    let Some(lane) = ctx.lane(side) else {
        return false;
    };
    let eps = ego.min_stopped_gap;

    let front_ok = match lane.leader.occupied() {
        None => true,
        Some(l) => {
            let need = v_now * ego.reaction_time + v_now * v_now / (2.0 * ego.max_decel)
                - l.speed * l.speed / (2.0 * l.max_decel)
                + eps;
            l.gap > 0.0 && l.gap >= need
        }
    };
    if !front_ok {
        return false;
    }

    match lane.follower.occupied() {
        None => true,
        Some(f) => {
            let need = f.speed * f.reaction_time + f.speed * f.speed / (2.0 * f.max_decel)
                - v_now * v_now / (2.0 * ego.max_decel)
                + eps;
            f.gap > 0.0 && f.gap >= need
        }
    }
}

/// Per-lane target speeds: the safe speed against each lane's leader, capped
/// by the speed limit. Entries for missing lanes are absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedTriple {
    pub left: Option<f64>,
    pub cur: f64,
    pub right: Option<f64>,
}

impl SpeedTriple {
    pub fn for_move(&self, mv: crate::action::LaneChange) -> Option<f64> {
        match mv {
            crate::action::LaneChange::Left => self.left,
            crate::action::LaneChange::Stay => Some(self.cur),
            crate::action::LaneChange::Right => self.right,
        }
    }
}

/// Target speeds on the current and adjacent lanes.
pub fn target_speeds(
    ctx: &NeighborContext,
    v_now: f64,
    speed_limit: f64,
    ego: &VehicleParams,
    cap: f64,
) -> Result<SpeedTriple, SafetyError> {
    let target = |lane: &LaneNeighbors| -> Result<f64, SafetyError> {
        let safe = safe_speed_for_slot(&lane.leader, v_now, ego, cap)?;
        Ok(safe.speed.min(speed_limit).max(0.0))
    };
    Ok(SpeedTriple {
        left: match &ctx.left {
            None => None,
            Some(l) => Some(target(l)?),
        },
        cur: target(&ctx.current)?,
        right: match &ctx.right {
            None => None,
            Some(l) => Some(target(l)?),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn ego(r: f64, d: f64, eps: f64) -> VehicleParams {
        VehicleParams {
            max_accel: 2.5,
            max_decel: d,
            reaction_time: r,
            min_stopped_gap: eps,
            length: 5.0,
        }
    }

    #[test]
    fn stopped_pair_needs_only_min_gap() {
        let p = ego(0.1, 3.0, 2.0);
        let g = required_safe_gap(0.0, 0.0, 0.0, &p, 3.0).unwrap();
        assert_eq!(g, 2.0);
    }

    #[test]
    fn equal_decel_terms_cancel() {
        let p = ego(0.1, 3.0, 4.0);
        let g = required_safe_gap(25.0, 25.0, 25.0, &p, 3.0).unwrap();
        assert!((g - 6.5).abs() < 1e-12, "got {g}");
    }

    #[test]
    fn stopped_leader_hand_computed() {
        let p = ego(0.1, 3.0, 2.0);
        let g = required_safe_gap(20.0, 20.0, 0.0, &p, 3.0).unwrap();
        // 2 + 400/6 + 2
        assert!((g - (4.0 + 400.0 / 6.0)).abs() < 1e-12, "got {g}");
    }

    #[test]
    fn defensive_principle_violation_named() {
        let p = ego(0.1, 4.0, 2.0);
        let err = required_safe_gap(10.0, 10.0, 10.0, &p, 3.0).unwrap_err();
        let SafetyError::DefensivePrinciple {
            ego_decel,
            leader_decel,
        } = err;
        assert_eq!(ego_decel, 4.0);
        assert_eq!(leader_decel, 3.0);
    }

    #[test]
    fn min_gap_at_standstill_gives_zero_speed() {
        let p = ego(0.1, 3.0, 2.0);
        let s = max_safe_speed(2.0, 0.0, 0.0, &p, 3.0, DEFAULT_SPEED_CAP).unwrap();
        assert_eq!(s.speed, 0.0);
        assert!(!s.already_unsafe);
    }

    #[test]
    fn equilibrium_gap_returns_leader_speed() {
        // gap = w·r + ε with equal decelerations keeps the follower at w.
        let p = ego(0.1, 3.0, 4.0);
        let w = 25.0;
        let gap = w * 0.1 + 4.0;
        let s = max_safe_speed(gap, w, w, &p, 3.0, DEFAULT_SPEED_CAP).unwrap();
        assert!((s.speed - w).abs() < 1e-12, "got {}", s.speed);
    }

    #[test]
    fn infinite_gap_returns_cap() {
        let p = ego(0.1, 3.0, 2.0);
        let s = max_safe_speed(f64::INFINITY, 10.0, 0.0, &p, 3.0, 100.0).unwrap();
        assert_eq!(s.speed, 100.0);
    }

    #[test]
    fn negative_discriminant_flags_already_unsafe() {
        let p = ego(0.1, 3.0, 2.0);
        // Ego fast, leader stopped, gap far below what a full stop needs.
        let s = max_safe_speed(1.0, 30.0, 0.0, &p, 3.0, DEFAULT_SPEED_CAP).unwrap();
        assert!(s.already_unsafe);
        assert_eq!(s.speed, 0.0);
    }

    #[test]
    fn plug_back_identity_on_random_grid() {
        let mut rng = SplitMix64::new(0xC0FFEE);
        let mut checked = 0usize;
        while checked < 20_000 {
            let r = rng.uniform(0.05, 1.0);
            let d = rng.uniform(1.0, 9.0);
            let d_l = d + rng.uniform(0.0, 3.0);
            let eps = rng.uniform(0.0, 5.0);
            let p = ego(r, d, eps);
            let gap = rng.uniform(0.0, 200.0);
            let v_now = rng.uniform(0.0, 40.0);
            let v_l = rng.uniform(0.0, 40.0);
            let s = max_safe_speed(gap, v_now, v_l, &p, d_l, DEFAULT_SPEED_CAP).unwrap();
            if s.already_unsafe {
                continue;
            }
            let back = required_safe_gap(v_now, s.speed, v_l, &p, d_l).unwrap();
            assert!(
                (back - gap).abs() < 1e-9,
                "plug-back residual {} at gap {gap}",
                back - gap
            );
            checked += 1;
        }
    }

    #[test]
    fn accel_bound_is_zero_at_safe_speed() {
        let p = ego(0.1, 3.0, 4.0);
        let w = 25.0;
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap: w * 0.1 + 4.0,
                    speed: w,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: None,
            right: None,
        };
        let b = max_safe_accel(&ctx, w, &p, DEFAULT_SPEED_CAP).unwrap();
        assert!(b.accel.abs() < 1e-10, "got {}", b.accel);
    }

    #[test]
    fn accel_bound_no_leader_tracks_cap() {
        let p = ego(0.1, 3.0, 2.0);
        let ctx = NeighborContext::empty_road();
        let b = max_safe_accel(&ctx, 20.0, &p, 100.0).unwrap();
        assert!((b.accel - (100.0 - 20.0) / 0.1).abs() < 1e-12);
    }

    #[test]
    fn accel_bound_arithmetic() {
        // v̂ = 24 against v = 25 at r = 0.1 gives −10 m/s².
        let p = ego(0.1, 3.0, 2.0);
        // Choose a gap that produces exactly v̂ = 24: invert the safe-gap form.
        let gap = required_safe_gap(25.0, 24.0, 20.0, &p, 3.0).unwrap();
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap,
                    speed: 20.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: None,
            right: None,
        };
        let b = max_safe_accel(&ctx, 25.0, &p, DEFAULT_SPEED_CAP).unwrap();
        assert!((b.accel - (-10.0)).abs() < 1e-9, "got {}", b.accel);
    }

    fn symmetric_lane(gap_front: f64, gap_back: f64, v: f64) -> LaneNeighbors {
        LaneNeighbors {
            leader: Slot::Occupied(NeighborVehicle {
                gap: gap_front,
                speed: v,
                max_decel: 3.0,
                reaction_time: 0.1,
            }),
            follower: Slot::Occupied(NeighborVehicle {
                gap: gap_back,
                speed: v,
                max_decel: 3.0,
                reaction_time: 0.1,
            }),
        }
    }

    #[test]
    fn lane_change_absent_lane_is_infeasible() {
        let p = ego(0.1, 3.0, 2.0);
        let ctx = NeighborContext {
            current: LaneNeighbors::default(),
            left: None,
            right: Some(LaneNeighbors::default()),
        };
        assert!(!lane_change_feasible(Side::Left, 10.0, &ctx, &p));
        assert!(lane_change_feasible(Side::Right, 10.0, &ctx, &p));
    }

    #[test]
    fn lane_change_threshold_both_sides_of_four_metres() {
        // All speeds 20, equal decelerations, ε = 2: both conditions need 4 m.
        let p = ego(0.1, 3.0, 2.0);
        let ok = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(symmetric_lane(5.0, 5.0, 20.0)),
            right: None,
        };
        assert!(lane_change_feasible(Side::Left, 20.0, &ok, &p));

        let tight = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(symmetric_lane(3.0, 5.0, 20.0)),
            right: None,
        };
        assert!(!lane_change_feasible(Side::Left, 20.0, &tight, &p));
    }

    #[test]
    fn lane_change_rejects_overlap_even_when_thresholds_go_negative() {
        // A fast ego makes the rear threshold negative; an overlapping
        // follower must still forbid the move. Mirrored for a fast leader.
        let p = ego(0.1, 3.0, 2.0);
        let overlap_follower = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(LaneNeighbors {
                leader: Slot::Empty,
                follower: Slot::Occupied(NeighborVehicle {
                    gap: -4.7,
                    speed: 17.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
            }),
            right: None,
        };
        assert!(!lane_change_feasible(Side::Left, 20.7, &overlap_follower, &p));

        let overlap_leader = NeighborContext {
            current: LaneNeighbors::default(),
            left: Some(LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap: -2.0,
                    speed: 30.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            }),
            right: None,
        };
        assert!(!lane_change_feasible(Side::Left, 10.0, &overlap_leader, &p));
    }

    #[test]
    fn lane_change_symmetry_under_mirroring() {
        let p = ego(0.1, 3.0, 2.0);
        let mut rng = SplitMix64::new(99);
        for _ in 0..1000 {
            let lane = symmetric_lane(rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0));
            let ctx = NeighborContext {
                current: LaneNeighbors::default(),
                left: Some(lane),
                right: None,
            };
            let v = rng.uniform(0.0, 30.0);
            assert_eq!(
                lane_change_feasible(Side::Left, v, &ctx, &p),
                lane_change_feasible(Side::Right, v, &ctx.mirrored(), &p)
            );
        }
    }

    #[test]
    fn target_speeds_cap_at_limit() {
        let p = ego(0.1, 3.0, 2.0);
        let ctx = NeighborContext::empty_road();
        let t = target_speeds(&ctx, 10.0, 34.0, &p, DEFAULT_SPEED_CAP).unwrap();
        assert_eq!(t.cur, 34.0);
        assert_eq!(t.left, Some(34.0));
        assert_eq!(t.right, Some(34.0));
    }

    #[test]
    fn target_speeds_select_safe_speed_when_lower() {
        let p = ego(0.1, 3.0, 2.0);
        // A close slow leader forces the current-lane target below the limit.
        let gap = required_safe_gap(12.0, 12.0, 10.0, &p, 3.0).unwrap();
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap,
                    speed: 10.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: None,
            right: Some(LaneNeighbors::default()),
        };
        let t = target_speeds(&ctx, 12.0, 34.0, &p, DEFAULT_SPEED_CAP).unwrap();
        assert!((t.cur - 12.0).abs() < 1e-9);
        assert_eq!(t.left, None);
        assert_eq!(t.right, Some(34.0));
    }

    #[test]
    fn sentinel_gaps_follow_conventions() {
        let ctx = NeighborContext {
            current: LaneNeighbors {
                leader: Slot::Occupied(NeighborVehicle {
                    gap: 25.0,
                    speed: 10.0,
                    max_decel: 3.0,
                    reaction_time: 0.1,
                }),
                follower: Slot::Empty,
            },
            left: Some(LaneNeighbors::default()),
            right: None,
        };
        let g = ctx.sentinel_gaps();
        assert_eq!(g[0], 25.0);
        assert_eq!(g[1], f64::INFINITY);
        assert_eq!(g[2], f64::INFINITY);
        assert_eq!(g[3], f64::INFINITY);
        assert_eq!(g[4], -1.0);
        assert_eq!(g[5], -1.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = (VehicleParams, f64)> {
            (
                0.05f64..1.0,   // r
                1.0f64..9.0,    // d
                0.0f64..5.0,    // eps
                0.0f64..3.0,    // leader extra decel
            )
                .prop_map(|(r, d, eps, extra)| (super::ego(r, d, eps), d + extra))
        }

        proptest! {
            #[test]
            fn safe_speed_monotone_in_gap((p, d_l) in params(),
                                          gap in 0.0f64..150.0,
                                          bump in 0.01f64..50.0,
                                          v in 0.0f64..40.0,
                                          v_l in 0.0f64..40.0) {
                let a = max_safe_speed(gap, v, v_l, &p, d_l, DEFAULT_SPEED_CAP).unwrap();
                let b = max_safe_speed(gap + bump, v, v_l, &p, d_l, DEFAULT_SPEED_CAP).unwrap();
                prop_assume!(!a.already_unsafe && !b.already_unsafe);
                prop_assert!(b.speed >= a.speed - 1e-12);
            }

            #[test]
            fn safe_speed_monotone_in_leader_speed((p, d_l) in params(),
                                                   gap in 0.0f64..150.0,
                                                   v in 0.0f64..40.0,
                                                   v_l in 0.0f64..40.0,
                                                   bump in 0.01f64..20.0) {
                let a = max_safe_speed(gap, v, v_l, &p, d_l, DEFAULT_SPEED_CAP).unwrap();
                let b = max_safe_speed(gap, v, v_l + bump, &p, d_l, DEFAULT_SPEED_CAP).unwrap();
                prop_assume!(!a.already_unsafe && !b.already_unsafe);
                prop_assert!(b.speed >= a.speed - 1e-12);
            }

            #[test]
            fn safe_speed_antitone_in_min_gap_and_reaction((p, d_l) in params(),
                                                           gap in 0.0f64..150.0,
                                                           v in 0.0f64..40.0,
                                                           v_l in 0.0f64..40.0,
                                                           deps in 0.01f64..3.0,
                                                           dr in 0.01f64..0.5) {
                let a = max_safe_speed(gap, v, v_l, &p, d_l, DEFAULT_SPEED_CAP).unwrap();

                let mut wider = p;
                wider.min_stopped_gap += deps;
                let b = max_safe_speed(gap, v, v_l, &wider, d_l, DEFAULT_SPEED_CAP).unwrap();

                let mut slower = p;
                slower.reaction_time += dr;
                let c = max_safe_speed(gap, v, v_l, &slower, d_l, DEFAULT_SPEED_CAP).unwrap();

                prop_assume!(!a.already_unsafe && !b.already_unsafe && !c.already_unsafe);
                prop_assert!(b.speed <= a.speed + 1e-12);
                prop_assert!(c.speed <= a.speed + 1e-12);
            }
        }
    }
}
