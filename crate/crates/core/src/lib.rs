//! Safety-constrained driving kernel and deterministic multi-lane traffic
//! microsimulation.
//!
//! The crate is split along functional lines:
//!
//! - [`kernel`] — closed-form safety envelope: safe gaps, maximal safe
//!   speeds, acceleration bounds, lane-change feasibility, target speeds.
//! - [`reward`] — the four driving reward terms and their weighted sum.
//! - [`action`] — projection of raw policy outputs onto the constraint set
//!   (the safety filter).
//! - [`analysis`] — the two-vehicle follower map, its equilibrium, Jacobian
//!   spectrum and platoon gap predictions.
//! - [`sim`] — discrete-time multi-lane microsimulator with scenario
//!   generators, crash detection and episode metrics.
//! - [`controllers`] — deterministic policies behind a common interface.
//!
//! Everything is `no_std` + `alloc`; file and terminal IO live in the
//! companion CLI crate. All quantities are SI (metres, seconds).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod action;
pub mod analysis;
pub mod controllers;
pub mod kernel;
pub mod reward;
pub mod rng;
pub mod route;
pub mod sim;

mod math;

pub use action::{Action, LaneChange, RawPolicyOutput};
pub use kernel::{NeighborContext, SafetyError, Side, SpeedTriple, VehicleParams};
