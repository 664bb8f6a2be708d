//! TOML scenario configuration.
//!
//! The file format mirrors the in-memory scenario description: a network
//! table, an ego table, optional vehicle/route/braking-zone arrays, and an
//! optional inflow table. See `configs/` for examples and the README for the
//! full schema.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use safelane_core::kernel::VehicleParams;
use safelane_core::route::RouteSpec;
use safelane_core::sim::{
    BrakingZone, InflowSpec, NetworkSpec, ObservationConfig, ScenarioConfig, Spawn,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    step_len: Option<f64>,
    horizon: usize,
    seed: Option<u64>,
    network: NetworkTable,
    ego: EgoTable,
    #[serde(default)]
    route: Vec<RouteTable>,
    #[serde(default)]
    vehicle: Vec<VehicleTable>,
    #[serde(default)]
    braking_zone: Vec<ZoneTable>,
    inflow: Option<InflowTable>,
    speed_cap: Option<f64>,
    lane_width: Option<f64>,
    merge_lane: Option<(usize, usize)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkTable {
    kind: String,
    sections: Option<usize>,
    section_length: Option<f64>,
    lanes: Option<usize>,
    lengths: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsTable {
    max_accel: Option<f64>,
    max_decel: Option<f64>,
    reaction_time: Option<f64>,
    min_stopped_gap: Option<f64>,
    length: Option<f64>,
}

impl ParamsTable {
    fn resolve(&self) -> VehicleParams {
        let d = VehicleParams::default();
        VehicleParams {
            max_accel: self.max_accel.unwrap_or(d.max_accel),
            max_decel: self.max_decel.unwrap_or(d.max_decel),
            reaction_time: self.reaction_time.unwrap_or(d.reaction_time),
            min_stopped_gap: self.min_stopped_gap.unwrap_or(d.min_stopped_gap),
            length: self.length.unwrap_or(d.length),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EgoTable {
    section: usize,
    lane: usize,
    pos: f64,
    speed: f64,
    speed_limit: f64,
    route: Option<usize>,
    params: Option<ParamsTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleTable {
    section: usize,
    lane: usize,
    pos: f64,
    speed: f64,
    speed_limit: f64,
    params: Option<ParamsTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteTable {
    start_section: usize,
    lanes: Vec<Vec<bool>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneTable {
    first_section: usize,
    last_section: usize,
    decel: f64,
    floor_speed: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InflowTable {
    section: usize,
    lanes: Vec<usize>,
    spacing: f64,
    speed_limit: f64,
    params: Option<ParamsTable>,
}

/// Load and validate a scenario configuration file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let file: FileConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;

    let network = match file.network.kind.as_str() {
        "ring" => NetworkSpec::Ring {
            section_length: file
                .network
                .section_length
                .context("network.section_length is required for kind = \"ring\"")?,
            sections: file
                .network
                .sections
                .context("network.sections is required for kind = \"ring\"")?,
            lanes: file
                .network
                .lanes
                .context("network.lanes is required for kind = \"ring\"")?,
        },
        "straight" => NetworkSpec::Straight {
            section_length: file
                .network
                .section_length
                .context("network.section_length is required for kind = \"straight\"")?,
            sections: file
                .network
                .sections
                .context("network.sections is required for kind = \"straight\"")?,
            lanes: file
                .network
                .lanes
                .context("network.lanes is required for kind = \"straight\"")?,
        },
        "freeway" => {
            let lengths = file
                .network
                .lengths
                .unwrap_or_else(|| safelane_core::sim::network::DEFAULT_FREEWAY_LENGTHS.to_vec());
            if lengths.len() != 5 {
                bail!("network.lengths must hold exactly 5 section lengths");
            }
            let mut arr = [0.0; 5];
            arr.copy_from_slice(&lengths);
            NetworkSpec::Freeway { lengths: arr }
        }
        other => bail!("network.kind must be \"ring\", \"straight\" or \"freeway\", got {other:?}"),
    };

    let mut routes: Vec<RouteSpec> = file
        .route
        .iter()
        .map(|r| RouteSpec {
            start_section: r.start_section,
            lanes: r.lanes.clone(),
        })
        .collect();
    if routes.is_empty() {
        // Default: everything on-route.
        let net = network.build();
        routes.push(RouteSpec {
            start_section: 0,
            lanes: net
                .sections()
                .iter()
                .map(|s| vec![true; s.lanes])
                .collect(),
        });
    }

    let ego_params = file
        .ego
        .params
        .as_ref()
        .map(ParamsTable::resolve)
        .unwrap_or_default();
    let config = ScenarioConfig {
        network,
        routes,
        step_len: file.step_len.unwrap_or(ego_params.reaction_time),
        horizon: file.horizon,
        seed: file.seed.unwrap_or(0),
        ego: Spawn {
            section: file.ego.section,
            lane: file.ego.lane,
            pos: file.ego.pos,
            speed: file.ego.speed,
            speed_limit: file.ego.speed_limit,
            params: ego_params,
        },
        ego_route: file.ego.route.unwrap_or(0),
        vehicles: file
            .vehicle
            .iter()
            .map(|v| Spawn {
                section: v.section,
                lane: v.lane,
                pos: v.pos,
                speed: v.speed,
                speed_limit: v.speed_limit,
                params: v.params.as_ref().map(ParamsTable::resolve).unwrap_or_default(),
            })
            .collect(),
        inflow: file.inflow.map(|i| InflowSpec {
            section: i.section,
            lanes: i.lanes,
            spacing: i.spacing,
            speed_limit: i.speed_limit,
            params: i.params.as_ref().map(ParamsTable::resolve).unwrap_or_default(),
        }),
        events: file
            .braking_zone
            .iter()
            .map(|z| BrakingZone {
                first_section: z.first_section,
                last_section: z.last_section,
                decel: z.decel,
                floor_speed: z.floor_speed,
            })
            .collect(),
        merge_lane: file.merge_lane,
        speed_cap: file.speed_cap.unwrap_or(safelane_core::kernel::DEFAULT_SPEED_CAP),
        lane_width: file.lane_width.unwrap_or(3.2),
        observation: ObservationConfig::default(),
    };
    config
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid scenario in {}: {e}", path.display()))?;
    Ok(config)
}
