//! Declarative scenario descriptions and the built-in scenario generators.
//!
//! `make_scenario` resolves a scenario kind and a seed into an explicit,
//! fully deterministic configuration: vehicle placements and initial speeds
//! are fixed here; only inflow arrivals draw randomness during the episode,
//! from a stream derived from the same seed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::VehicleParams;
use crate::math;
use crate::rng::SplitMix64;
use crate::route::RouteSpec;
use crate::sim::network::{NetworkSpec, DEFAULT_FREEWAY_LENGTHS};

/// Scenario families with their knobs.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioKind {
    /// Ring road, ego among free-flowing slower traffic.
    LoopNormal,
    /// Ring road with twice the traffic.
    LoopCongested,
    /// Ring road with an emergency-braking zone in a seed-chosen section.
    LoopEmergency,
    /// Freeway with a zig-zag fleet ahead of the ego; `spacing` is the
    /// head-to-head distance between consecutive fleet vehicles.
    FreewayBypass { spacing: f64, route: RouteChoice },
    /// Freeway with an unbypassable wall of traffic that brakes to a stop.
    FreewayEmergency,
    /// Ego starts on the merge lane and must join the mainline stream.
    FreewayMerge,
    /// Constant-speed leader with followers on a single lane.
    Platoon {
        leader_speed: f64,
        followers: usize,
        min_stopped_gap: f64,
        /// Per-vehicle deceleration capabilities, leader first; must be
        /// nonincreasing. Homogeneous defaults when absent.
        decels: Option<Vec<f64>>,
    },
}

/// Route assignment for freeway scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RouteChoice {
    /// Off-ramp with the given probability, mainline otherwise.
    Random { offramp_probability: f64 },
    Mainline,
    OffRamp,
}

/// One pre-placed vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct Spawn {
    pub section: usize,
    pub lane: usize,
    pub pos: f64,
    pub speed: f64,
    pub speed_limit: f64,
    pub params: VehicleParams,
}

/// Continuous injection of uncontrolled traffic at a section start.
#[derive(Clone, Debug, PartialEq)]
pub struct InflowSpec {
    pub section: usize,
    /// Lanes used in rotation.
    pub lanes: Vec<usize>,
    /// Head-to-head distance between consecutive injections (m).
    pub spacing: f64,
    pub speed_limit: f64,
    pub params: VehicleParams,
}

/// Scripted emergency braking: uncontrolled vehicles inside the section span
/// brake at `decel` down to `floor_speed` and hold it while inside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrakingZone {
    pub first_section: usize,
    pub last_section: usize,
    pub decel: f64,
    pub floor_speed: f64,
}

impl BrakingZone {
    pub fn covers(&self, section: usize) -> bool {
        section >= self.first_section && section <= self.last_section
    }
}

/// Observation-vector shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationConfig {
    /// Scan radius for the observation (m).
    pub radius: f64,
    /// Vehicles reported per lane ahead of the ego.
    pub n_front: usize,
    /// Vehicles reported per lane behind the ego.
    pub n_back: usize,
    /// Width of the on-route boolean map.
    pub max_lanes: usize,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self {
            radius: 100.0,
            n_front: 2,
            n_back: 2,
            max_lanes: 4,
        }
    }
}

/// Complete, deterministic episode description.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub network: NetworkSpec,
    pub routes: Vec<RouteSpec>,
    /// Control period Δt (s); must equal the ego's reaction time.
    pub step_len: f64,
    pub horizon: usize,
    pub seed: u64,
    pub ego: Spawn,
    /// Index into `routes` for the ego.
    pub ego_route: usize,
    pub vehicles: Vec<Spawn>,
    pub inflow: Option<InflowSpec>,
    pub events: Vec<BrakingZone>,
    /// (section, lane) the ego must leave before the horizon, when present.
    pub merge_lane: Option<(usize, usize)>,
    /// Safe-speed ceiling for empty lanes.
    pub speed_cap: f64,
    pub lane_width: f64,
    pub observation: ObservationConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        use alloc::format;
        if !(self.step_len > 0.0) {
            return Err("step_len must be > 0".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be > 0".into());
        }
        self.ego.params.validate().map_err(String::from)?;
        if (self.ego.params.reaction_time - self.step_len).abs() > 1e-12 {
            return Err(format!(
                "step_len {} must equal the ego reaction time {}",
                self.step_len, self.ego.params.reaction_time
            ));
        }
        if self.ego_route >= self.routes.len() {
            return Err(format!("ego_route {} out of range", self.ego_route));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            v.params.validate().map_err(|e| format!("vehicle {i}: {e}"))?;
        }
        for z in &self.events {
            if z.first_section > z.last_section {
                return Err("braking zone: first_section > last_section".into());
            }
            if !(z.decel > 0.0) {
                return Err("braking zone: decel must be > 0".into());
            }
            for (i, v) in self.vehicles.iter().enumerate() {
                if z.decel > v.params.max_decel + 1e-12 {
                    return Err(format!(
                        "braking zone decel {} exceeds vehicle {i} max_decel {}",
                        z.decel, v.params.max_decel
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Largest speed `v` a vehicle can hold steadily (same speed this step and
/// next) behind a leader at `v_leader` with the given gap. Used to cap spawn
/// and injection speeds so episodes start inside the safe set.
pub(crate) fn steady_safe_speed(
    gap: f64,
    v_leader: f64,
    params: &VehicleParams,
    leader_decel: f64,
) -> f64 {
    if gap.is_infinite() {
        return f64::INFINITY;
    }
    let d = params.max_decel;
    let r = params.reaction_time;
    let c = params.min_stopped_gap - v_leader * v_leader / (2.0 * leader_decel) - gap;
    let disc = r * d * (r * d) - 2.0 * d * c;
    if disc <= 0.0 {
        return 0.0;
    }
    (-r * d + math::sqrt(disc)).max(0.0)
}

fn loop_scenario(count: usize, zone: bool, seed: u64) -> ScenarioConfig {
    let mut rng = SplitMix64::new(seed ^ 0x100C_51C0);
    const SECTIONS: usize = 4;
    const SECTION_LEN: f64 = 250.0;
    const LANES: usize = 3;
    const CIRCUMFERENCE: f64 = SECTIONS as f64 * SECTION_LEN;
    let human_limit = 17.0;
    let ego_limit = 34.0;
    let params = VehicleParams::default();

    // Place vehicles with rejection sampling per lane, then cap speeds so no
    // vehicle starts beyond its steady safe speed behind its leader.
    let mut placed: Vec<(usize, f64)> = Vec::new(); // (lane, chain position)
    let mut draws: Vec<f64> = Vec::new();
    let min_spacing = params.length + 7.0;
    for _ in 0..count {
        for attempt in 0..200 {
            let lane = rng.below(LANES);
            let pos = rng.uniform(0.0, CIRCUMFERENCE);
            let clear = placed.iter().all(|&(l, p)| {
                if l != lane {
                    return true;
                }
                let mut d = math::abs(p - pos);
                d = d.min(CIRCUMFERENCE - d);
                d >= min_spacing
            });
            if clear || attempt == 199 {
                placed.push((lane, pos));
                draws.push(rng.uniform(0.5, 1.0) * human_limit);
                break;
            }
        }
    }

    // Ego on a seed-chosen lane in the widest clear stretch of that lane.
    let ego_lane = rng.below(LANES);
    let mut on_lane: Vec<f64> = placed
        .iter()
        .filter(|&&(l, _)| l == ego_lane)
        .map(|&(_, p)| p)
        .collect();
    on_lane.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ego_chain_pos = if on_lane.is_empty() {
        rng.uniform(0.0, CIRCUMFERENCE)
    } else {
        let mut best = (0.0, 0.0);
        for i in 0..on_lane.len() {
            let a = on_lane[i];
            let b = on_lane[(i + 1) % on_lane.len()];
            let width = if i + 1 == on_lane.len() {
                b + CIRCUMFERENCE - a
            } else {
                b - a
            };
            if width > best.0 {
                best = (width, a + width * 0.5);
            }
        }
        best.1 % CIRCUMFERENCE
    };

    let network = NetworkSpec::Ring {
        section_length: SECTION_LEN,
        sections: SECTIONS,
        lanes: LANES,
    };
    let net = network.build();

    let mut vehicles: Vec<Spawn> = placed
        .iter()
        .zip(draws.iter())
        .map(|(&(lane, chain), &speed)| {
            let (section, pos) = net.locate(chain);
            Spawn {
                section,
                lane,
                pos,
                speed,
                speed_limit: human_limit,
                params,
            }
        })
        .collect();
    cap_spawn_speeds(&mut vehicles, &net);

    let (ego_section, ego_pos) = net.locate(ego_chain_pos);
    let mut ego = Spawn {
        section: ego_section,
        lane: ego_lane,
        pos: ego_pos,
        speed: rng.uniform(0.4, 0.7) * ego_limit,
        speed_limit: ego_limit,
        params,
    };
    cap_spawn_speed_against(&mut ego, &vehicles, &net);

    let events = if zone {
        let zone_section = rng.below(SECTIONS);
        vec![BrakingZone {
            first_section: zone_section,
            last_section: zone_section,
            decel: params.max_decel,
            floor_speed: 3.0,
        }]
    } else {
        Vec::new()
    };

    ScenarioConfig {
        network,
        routes: vec![RouteSpec::all_lanes(SECTIONS, LANES)],
        step_len: params.reaction_time,
        horizon: 5000,
        seed,
        ego,
        ego_route: 0,
        vehicles,
        inflow: None,
        events,
        merge_lane: None,
        speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

/// Cap every spawn speed at its steady safe speed behind the nearest leader
/// on its lane. A few sweeps reach a fixed point: capping a leader can only
/// lower a follower's bound.
fn cap_spawn_speeds(vehicles: &mut [Spawn], net: &crate::sim::network::RoadNetwork) {
    for _ in 0..5 {
        let snapshot: Vec<Spawn> = vehicles.to_vec();
        for v in vehicles.iter_mut() {
            if let Some((gap, leader_speed, leader_decel)) = nearest_leader(v, &snapshot, net) {
                let bound = steady_safe_speed(gap, leader_speed, &v.params, leader_decel);
                v.speed = v.speed.min(bound);
            }
        }
    }
}

fn cap_spawn_speed_against(
    ego: &mut Spawn,
    others: &[Spawn],
    net: &crate::sim::network::RoadNetwork,
) {
    if let Some((gap, leader_speed, leader_decel)) = nearest_leader(ego, others, net) {
        let bound = steady_safe_speed(gap, leader_speed, &ego.params, leader_decel);
        ego.speed = ego.speed.min(bound);
    }
}

/// Nearest same-lane leader by chain distance among spawns, honoring ring
/// wrap. Spawn-time approximation: lanes are compared by index only, which
/// matches every generated layout (placements never straddle boundaries
/// where lane indices shift).
fn nearest_leader(
    v: &Spawn,
    others: &[Spawn],
    net: &crate::sim::network::RoadNetwork,
) -> Option<(f64, f64, f64)> {
    let total = net.total_length();
    let chain = |s: &Spawn| net.offset(s.section) + s.pos;
    let my = chain(v);
    let mut best: Option<(f64, &Spawn)> = None;
    for o in others {
        if o.lane != v.lane || (o.section == v.section && (o.pos - v.pos).abs() < 1e-12) {
            continue;
        }
        let mut d = chain(o) - my;
        if net.is_ring() {
            if d <= 0.0 {
                d += total;
            }
        } else if d <= 0.0 {
            continue;
        }
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, o));
        }
    }
    best.map(|(d, o)| (d - o.params.length, o.speed, o.params.max_decel))
}

fn freeway_bypass(spacing: f64, route: RouteChoice, seed: u64) -> ScenarioConfig {
    let mut rng = SplitMix64::new(seed ^ 0x00B1_0A55);
    let network = NetworkSpec::Freeway {
        lengths: DEFAULT_FREEWAY_LENGTHS,
    };
    let human_limit = 15.0;
    let ego_limit = 25.0;
    let params = VehicleParams::default();

    // Zig-zag fleet over the three mainline lanes of the approach section.
    let pattern = [0usize, 1, 2, 1];
    let phase = rng.below(pattern.len());
    let count = 16usize;
    let head = 420.0;
    let mut vehicles = Vec::with_capacity(count);
    for k in 0..count {
        vehicles.push(Spawn {
            section: 0,
            lane: pattern[(k + phase) % pattern.len()],
            pos: head - k as f64 * spacing,
            speed: human_limit,
            speed_limit: human_limit,
            params,
        });
    }
    let tail = head - (count - 1) as f64 * spacing;

    let ego = Spawn {
        section: 0,
        lane: rng.below(3),
        pos: (tail - rng.uniform(30.0, 60.0)).max(5.0),
        speed: 12.0,
        speed_limit: ego_limit,
        params,
    };

    let take_offramp = match route {
        RouteChoice::Mainline => false,
        RouteChoice::OffRamp => true,
        RouteChoice::Random {
            offramp_probability,
        } => rng.chance(offramp_probability),
    };
    let routes = vec![mainline_route(), offramp_route()];

    ScenarioConfig {
        network,
        routes,
        step_len: params.reaction_time,
        horizon: 6000,
        seed,
        ego,
        ego_route: usize::from(take_offramp),
        vehicles,
        inflow: None,
        events: Vec::new(),
        merge_lane: None,
        speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

fn freeway_emergency(seed: u64) -> ScenarioConfig {
    let mut rng = SplitMix64::new(seed ^ 0xE8E8);
    let network = NetworkSpec::Freeway {
        lengths: DEFAULT_FREEWAY_LENGTHS,
    };
    let human_limit = 15.0;
    let params = VehicleParams::default();

    // Rows across every mainline lane of the exit section: nothing to bypass.
    let rows = 4usize;
    let row_spacing = 12.0;
    let head = 80.0 + rng.uniform(0.0, 40.0);
    let mut vehicles = Vec::new();
    for row in 0..rows {
        for lane in 1..4 {
            vehicles.push(Spawn {
                section: 1,
                lane,
                pos: head - row as f64 * row_spacing,
                speed: human_limit,
                speed_limit: human_limit,
                params,
            });
        }
    }

    let ego = Spawn {
        section: 0,
        lane: rng.below(3),
        pos: 380.0 + rng.uniform(0.0, 40.0),
        speed: 15.0,
        speed_limit: 25.0,
        params,
    };

    ScenarioConfig {
        network,
        routes: vec![mainline_route(), offramp_route()],
        step_len: params.reaction_time,
        horizon: 6000,
        seed,
        ego,
        ego_route: 0,
        vehicles,
        inflow: None,
        events: vec![BrakingZone {
            first_section: 2,
            last_section: 2,
            decel: params.max_decel,
            floor_speed: 0.0,
        }],
        merge_lane: None,
        speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

fn freeway_merge(seed: u64) -> ScenarioConfig {
    let mut rng = SplitMix64::new(seed ^ 0x3E63E6);
    let lengths = [300.0, 400.0, 200.0, 300.0, 200.0];
    let network = NetworkSpec::Freeway { lengths };
    let net = network.build();
    let human_limit = 15.0;
    let params = VehicleParams::default();
    // Consecutive injections rotate across the three mainline lanes, 3H
    // apart head to head. Denser streams leave no admissible slot at any
    // ego speed under the deterministic drivers, which would make the
    // scenario test nothing but the wall at the lane drop.
    let spacing = 15.0;

    // Pre-fill the mainline from the inflow point to the network end with
    // the same rotating pattern the inflow continues, random speeds capped
    // front to back so the stream starts safe.
    let start = net.offset(2);
    let end = net.total_length();
    let mut vehicles: Vec<Spawn> = Vec::new();
    let mut k = 0usize;
    loop {
        let chain = end - 10.0 - k as f64 * spacing;
        if chain < start + 5.0 {
            break;
        }
        let (section, pos) = net.locate(chain);
        // Mainline lane indices differ between 3- and 4-lane sections.
        let lane3 = k % 3;
        let lane = if net.section(section).lanes == 4 {
            lane3 + 1
        } else {
            lane3
        };
        vehicles.push(Spawn {
            section,
            lane,
            pos,
            speed: rng.uniform(0.5, 1.0) * human_limit,
            speed_limit: human_limit,
            params,
        });
        k += 1;
    }
    cap_spawn_speeds(&mut vehicles, &net);

    let ego = Spawn {
        section: 3,
        lane: 0,
        pos: 20.0 + rng.uniform(0.0, 30.0),
        speed: 10.0,
        speed_limit: 25.0,
        params,
    };

    ScenarioConfig {
        network,
        routes: vec![merge_route()],
        step_len: params.reaction_time,
        horizon: 6000,
        seed,
        ego,
        ego_route: 0,
        vehicles,
        inflow: Some(InflowSpec {
            section: 2,
            lanes: vec![0, 1, 2],
            spacing,
            speed_limit: human_limit,
            params,
        }),
        events: Vec::new(),
        merge_lane: Some((3, 0)),
        speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

fn platoon(
    leader_speed: f64,
    followers: usize,
    min_stopped_gap: f64,
    decels: Option<Vec<f64>>,
    seed: u64,
) -> ScenarioConfig {
    // An open straight keeps the chain of leaders acyclic: a ring would
    // wrap the head onto the tail, which breaks the nonincreasing
    // deceleration order a heterogeneous platoon needs.
    const SECTIONS: usize = 4;
    const SECTION_LEN: f64 = 5000.0;
    let network = NetworkSpec::Straight {
        section_length: SECTION_LEN,
        sections: SECTIONS,
        lanes: 1,
    };
    let net = network.build();

    let decels = decels.unwrap_or_else(|| vec![3.0; followers + 1]);
    assert_eq!(decels.len(), followers + 1, "one decel per vehicle, leader first");

    let base = VehicleParams {
        min_stopped_gap,
        ..VehicleParams::default()
    };

    // The controlled vehicle is the platoon head, driven at constant speed;
    // followers are uncontrolled safe-speed trackers with no speed limit.
    let head_chain = 100.0 + followers as f64 * (base.length + 20.0);
    let (section, pos) = net.locate(head_chain);
    let ego = Spawn {
        section,
        lane: 0,
        pos,
        speed: leader_speed,
        speed_limit: leader_speed,
        params: VehicleParams {
            max_decel: decels[0],
            ..base
        },
    };

    let mut vehicles = Vec::with_capacity(followers);
    let mut chain = head_chain;
    for i in 0..followers {
        chain -= base.length + 20.0;
        let (section, pos) = net.locate(chain);
        vehicles.push(Spawn {
            section,
            lane: 0,
            pos,
            speed: leader_speed * 0.8,
            speed_limit: f64::INFINITY,
            params: VehicleParams {
                max_decel: decels[i + 1],
                ..base
            },
        });
    }

    ScenarioConfig {
        network,
        routes: vec![RouteSpec::all_lanes(SECTIONS, 1)],
        step_len: base.reaction_time,
        horizon: 3000,
        seed,
        ego,
        ego_route: 0,
        vehicles,
        inflow: None,
        events: Vec::new(),
        merge_lane: None,
        speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

/// Route that stays on the freeway mainline end to end.
pub fn mainline_route() -> RouteSpec {
    RouteSpec {
        start_section: 0,
        lanes: vec![
            vec![true, true, true],
            vec![false, true, true, true],
            vec![true, true, true],
            vec![false, true, true, true],
            vec![true, true, true],
        ],
    }
}

/// Route that leaves through the off-ramp at the end of the exit section.
pub fn offramp_route() -> RouteSpec {
    RouteSpec {
        start_section: 0,
        lanes: vec![vec![true, true, true], vec![true, false, false, false]],
    }
}

/// Route for a vehicle entering on the merge lane and continuing to the end.
pub fn merge_route() -> RouteSpec {
    RouteSpec {
        start_section: 3,
        lanes: vec![vec![false, true, true, true], vec![true, true, true]],
    }
}

/// Resolve a scenario kind and seed into a concrete configuration.
pub fn make_scenario(kind: &ScenarioKind, seed: u64) -> ScenarioConfig {
    match kind {
        ScenarioKind::LoopNormal => loop_scenario(25, false, seed),
        ScenarioKind::LoopCongested => loop_scenario(50, false, seed),
        ScenarioKind::LoopEmergency => loop_scenario(25, true, seed),
        ScenarioKind::FreewayBypass { spacing, route } => freeway_bypass(*spacing, *route, seed),
        ScenarioKind::FreewayEmergency => freeway_emergency(seed),
        ScenarioKind::FreewayMerge => freeway_merge(seed),
        ScenarioKind::Platoon {
            leader_speed,
            followers,
            min_stopped_gap,
            decels,
        } => platoon(*leader_speed, *followers, *min_stopped_gap, decels.clone(), seed),
    }
}
