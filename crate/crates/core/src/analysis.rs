//! Long-run behaviour of a follower that always drives at its maximal safe
//! speed behind a constant-speed leader.
//!
//! The follower's motion is a two-dimensional discrete-time map in
//! (gap, speed). This module provides the map itself, its closed-form
//! equilibrium, the Jacobian spectrum at the equilibrium with a stability
//! classification, and the induced steady-state gap prediction for platoons.

use alloc::vec::Vec;

use crate::kernel::{max_safe_speed, SafetyError, VehicleParams, DEFAULT_SPEED_CAP};
use crate::math;

/// Complex number as an explicit pair; the 2×2 case needs no matrix library.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn norm(&self) -> f64 {
        math::sqrt(self.re * self.re + self.im * self.im)
    }
}

/// Follower-behind-constant-speed-leader system parameters.
#[derive(Clone, Copy, Debug)]
pub struct FollowerSystem {
    /// Leader speed w (m/s), held constant.
    pub leader_speed: f64,
    pub ego: VehicleParams,
    /// Leader's maximal deceleration (m/s²); must be ≥ the ego's.
    pub leader_decel: f64,
}

/// State of the map: bumper gap and follower speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FollowerState {
    pub gap: f64,
    pub speed: f64,
}

/// One application of the map, with the unsafe flag surfaced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: FollowerState,
    pub already_unsafe: bool,
}

/// Optional caps that realize the bounded-acceleration / speed-limit
/// variants of the map, plus the simulator's integration convention. All
/// off by default, which gives the unmodified map.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepOptions {
    /// Clamp the speed update by the ego's acceleration box, applied the way
    /// the simulator's driver does.
    pub bound_accel: bool,
    /// Track min(safe speed, limit) instead of the raw safe speed.
    pub speed_limit: Option<f64>,
    /// Keep speeds nonnegative.
    pub clamp_speed_nonneg: bool,
    /// Advance the gap with the next-step speed (the microsimulator's
    /// displacement convention) instead of the current speed.
    pub gap_uses_next_speed: bool,
}

impl StepOptions {
    /// The configuration that reproduces the microsimulator's bookkeeping
    /// exactly, for cross-validation against simulated traces.
    pub fn like_sim(speed_limit: Option<f64>) -> Self {
        Self {
            bound_accel: true,
            speed_limit,
            clamp_speed_nonneg: true,
            gap_uses_next_speed: true,
        }
    }
}

/// Stability classification of the equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    AsymptoticallyStable,
    Marginal,
    Unstable,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "asymptotically_stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }
}

/// Tolerance band around spectral radius 1 separating marginal from
/// stable/unstable.
pub const STABILITY_TOLERANCE: f64 = 1e-12;

/// Equilibrium plus its linearization summary.
#[derive(Clone, Copy, Debug)]
pub struct EquilibriumReport {
    pub gap: f64,
    pub speed: f64,
    pub eigenvalues: (Complex, Complex),
    pub spectral_radius: f64,
    pub classification: Stability,
}

impl FollowerSystem {
    /// Closed-form equilibrium: gap w·r + (d_L − d_E)·w²/(2·d_L·d_E) + ε at
    /// speed w.
    pub fn equilibrium(&self) -> FollowerState {
        let w = self.leader_speed;
        let d_e = self.ego.max_decel;
        let d_l = self.leader_decel;
        FollowerState {
            gap: w * self.ego.reaction_time + (d_l - d_e) / (2.0 * d_l * d_e) * w * w
                + self.ego.min_stopped_gap,
            speed: w,
        }
    }

    /// Deviation of a state from the equilibrium, (δg, δv). The speed update
    /// can be written around these as
    /// `v' = −r·d/2 + sqrt((w + r·d/2)² + 2·d·δg − d·r·δv)`,
    /// which makes the fixed point transparent: both deviations vanish there
    /// and the square root collapses to w + r·d/2.
    pub fn deviations(&self, state: FollowerState) -> (f64, f64) {
        let eq = self.equilibrium();
        (state.gap - eq.gap, state.speed - eq.speed)
    }

    /// One step of the unmodified map.
    pub fn step(&self, state: FollowerState) -> Result<StepOutcome, SafetyError> {
        self.step_with(state, &StepOptions::default())
    }

    /// One step with the given caps/bookkeeping options.
    pub fn step_with(
        &self,
        state: FollowerState,
        opts: &StepOptions,
    ) -> Result<StepOutcome, SafetyError> {
        let r = self.ego.reaction_time;
        let w = self.leader_speed;
        let safe = max_safe_speed(
            state.gap,
            state.speed,
            w,
            &self.ego,
            self.leader_decel,
            DEFAULT_SPEED_CAP,
        )?;

        let mut next_speed = safe.speed;
        if let Some(limit) = opts.speed_limit {
            next_speed = next_speed.min(limit);
        }
        if opts.bound_accel {
            // Mirror the simulator's driver arithmetic step for step.
            let accel =
                ((next_speed - state.speed) / r).clamp(-self.ego.max_decel, self.ego.max_accel);
            next_speed = state.speed + accel * r;
        }
        if opts.clamp_speed_nonneg {
            next_speed = next_speed.max(0.0);
        }

        let gap_speed = if opts.gap_uses_next_speed {
            next_speed
        } else {
            state.speed
        };
        Ok(StepOutcome {
            state: FollowerState {
                gap: state.gap - r * (gap_speed - w),
                speed: next_speed,
            },
            already_unsafe: safe.already_unsafe,
        })
    }

    /// The map's Jacobian at the equilibrium, explicit 2×2 row-major.
    pub fn jacobian_at_equilibrium(&self) -> [[f64; 2]; 2] {
        let w = self.leader_speed;
        let d = self.ego.max_decel;
        let r = self.ego.reaction_time;
        let denom = 2.0 * w + d * r;
        [[1.0, -r], [2.0 * d / denom, -d * r / denom]]
    }

    /// Closed-form eigenvalues of the Jacobian at the equilibrium:
    /// (w ± sqrt(w² − 2·w·d·r − d²·r²)) / (2·w + d·r).
    pub fn eigenvalues(&self) -> (Complex, Complex) {
        let w = self.leader_speed;
        let d = self.ego.max_decel;
        let r = self.ego.reaction_time;
        let denom = 2.0 * w + d * r;
        let disc = w * w - 2.0 * w * d * r - d * d * r * r;
        if disc >= 0.0 {
            let root = math::sqrt(disc);
            (
                Complex {
                    re: (w + root) / denom,
                    im: 0.0,
                },
                Complex {
                    re: (w - root) / denom,
                    im: 0.0,
                },
            )
        } else {
            let root = math::sqrt(-disc);
            (
                Complex {
                    re: w / denom,
                    im: root / denom,
                },
                Complex {
                    re: w / denom,
                    im: -root / denom,
                },
            )
        }
    }

    /// Full equilibrium report with stability classification.
    pub fn classify(&self) -> EquilibriumReport {
        let eq = self.equilibrium();
        let (l1, l2) = self.eigenvalues();
        let radius = l1.norm().max(l2.norm());
        let classification = if radius < 1.0 - STABILITY_TOLERANCE {
            Stability::AsymptoticallyStable
        } else if radius <= 1.0 + STABILITY_TOLERANCE {
            Stability::Marginal
        } else {
            Stability::Unstable
        };
        EquilibriumReport {
            gap: eq.gap,
            speed: eq.speed,
            eigenvalues: (l1, l2),
            spectral_radius: radius,
            classification,
        }
    }
}

/// Eigenvalues of an arbitrary 2×2 matrix via its characteristic polynomial;
/// the numeric check route for the closed form.
pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> (Complex, Complex) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let root = math::sqrt(disc);
        (
            Complex {
                re: 0.5 * (tr + root),
                im: 0.0,
            },
            Complex {
                re: 0.5 * (tr - root),
                im: 0.0,
            },
        )
    } else {
        let root = math::sqrt(-disc);
        (
            Complex {
                re: 0.5 * tr,
                im: 0.5 * root,
            },
            Complex {
                re: 0.5 * tr,
                im: -0.5 * root,
            },
        )
    }
}

/// Predicted steady-state bumper gaps of a platoon behind a constant-speed
/// leader: one gap per follower, each from the equilibrium formula with that
/// pair's parameters. `leader_decel` is the deceleration capability of the
/// platoon head; each later pair uses the preceding follower's.
pub fn platoon_prediction(
    platoon_speed: f64,
    leader_decel: f64,
    followers: &[VehicleParams],
) -> Result<Vec<f64>, SafetyError> {
    let mut gaps = Vec::with_capacity(followers.len());
    let mut ahead_decel = leader_decel;
    for follower in followers {
        if follower.max_decel > ahead_decel {
            return Err(SafetyError::DefensivePrinciple {
                ego_decel: follower.max_decel,
                leader_decel: ahead_decel,
            });
        }
        let sys = FollowerSystem {
            leader_speed: platoon_speed,
            ego: *follower,
            leader_decel: ahead_decel,
        };
        gaps.push(sys.equilibrium().gap);
        ahead_decel = follower.max_decel;
    }
    Ok(gaps)
}
