//! Command implementations behind the `safelane` binary, exposed as a
//! library so integration tests can drive them directly.

pub mod commands;
pub mod config;
pub mod output;

use anyhow::{bail, Result};
use safelane_core::controllers::{ComfortGreedy, GippsGreedy, Policy};
use safelane_core::sim::{RouteChoice, ScenarioKind};

/// Built-in controller selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    GippsGreedy,
    ComfortGreedy,
}

impl ControllerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gipps_greedy" => Ok(Self::GippsGreedy),
            "comfort_greedy" => Ok(Self::ComfortGreedy),
            other => bail!("unknown controller {other:?}; expected gipps_greedy or comfort_greedy"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GippsGreedy => "gipps_greedy",
            Self::ComfortGreedy => "comfort_greedy",
        }
    }

    pub fn build(&self) -> Box<dyn Policy> {
        match self {
            Self::GippsGreedy => Box::new(GippsGreedy::default()),
            Self::ComfortGreedy => Box::new(ComfortGreedy::default()),
        }
    }
}

/// Scenario selection by name plus knobs, as exposed on the command line.
#[derive(Clone, Debug)]
pub struct ScenarioSelect {
    pub name: String,
    /// Head-to-head spacing for the bypass fleet (m).
    pub spacing: f64,
    /// off_ramp | mainline | random
    pub route: String,
    pub offramp_probability: f64,
    pub platoon_speed: f64,
    pub platoon_followers: usize,
    pub platoon_min_gap: f64,
    pub platoon_decels: Option<Vec<f64>>,
}

impl Default for ScenarioSelect {
    fn default() -> Self {
        Self {
            name: String::new(),
            spacing: 20.0,
            route: "random".into(),
            offramp_probability: 0.5,
            platoon_speed: 25.0,
            platoon_followers: 3,
            platoon_min_gap: 4.0,
            platoon_decels: None,
        }
    }
}

impl ScenarioSelect {
    pub fn to_kind(&self) -> Result<ScenarioKind> {
        let route = match self.route.as_str() {
            "off_ramp" => RouteChoice::OffRamp,
            "mainline" => RouteChoice::Mainline,
            "random" => RouteChoice::Random {
                offramp_probability: self.offramp_probability,
            },
            other => bail!("unknown route choice {other:?}"),
        };
        Ok(match self.name.as_str() {
            "loop_normal" => ScenarioKind::LoopNormal,
            "loop_congested" => ScenarioKind::LoopCongested,
            "loop_emergency" => ScenarioKind::LoopEmergency,
            "freeway_bypass" => ScenarioKind::FreewayBypass {
                spacing: self.spacing,
                route,
            },
            "freeway_emergency" => ScenarioKind::FreewayEmergency,
            "freeway_merge" => ScenarioKind::FreewayMerge,
            "platoon" => ScenarioKind::Platoon {
                leader_speed: self.platoon_speed,
                followers: self.platoon_followers,
                min_stopped_gap: self.platoon_min_gap,
                decels: self.platoon_decels.clone(),
            },
            other => bail!(
                "unknown scenario {other:?}; expected one of loop_normal, loop_congested, \
                 loop_emergency, freeway_bypass, freeway_emergency, freeway_merge, platoon"
            ),
        })
    }
}
