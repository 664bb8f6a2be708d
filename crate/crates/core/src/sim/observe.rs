//! Fixed-length numeric observation of the world around one vehicle, the
//! input surface for external (e.g. learned) policies.
//!
//! Layout, all `f64`:
//!
//! ```text
//! [ pos_in_section, speed, prev_accel, section_index, lane_index, lateral_speed,
//!   on_route_flag × max_lanes,
//!   3 lanes (left, current, right) ×
//!     (n_front ahead slots, nearest first; then n_back behind slots) ×
//!       (presence, signed longitudinal distance, speed, accel) ]
//! ```
//!
//! Absent lanes and unfilled slots are zero padded with presence 0. Only
//! vehicles within the scan radius appear.

use alloc::vec::Vec;

use crate::sim::network::LaneLink;
use crate::sim::scenario::ObservationConfig;
use crate::sim::world::World;

/// Observation vector length for a configuration.
pub fn observation_len(cfg: &ObservationConfig) -> usize {
    6 + cfg.max_lanes + 3 * (cfg.n_front + cfg.n_back) * 4
}

/// Build the observation for a vehicle. Panics if the vehicle is gone.
pub fn build_observation(world: &World, id: u32, cfg: &ObservationConfig) -> Vec<f64> {
    let v = world.vehicle(id).expect("observed vehicle not in world");
    let mut out = Vec::with_capacity(observation_len(cfg));
    out.push(v.pos);
    out.push(v.speed);
    out.push(v.prev_accel);
    out.push(v.section as f64);
    out.push(v.lane as f64);
    out.push(v.lat_speed);

    let route = v.route.map(|r| &world.routes()[r]);
    for lane in 0..cfg.max_lanes {
        let flag = route
            .and_then(|r| r.is_on_route(v.section, lane).ok())
            .unwrap_or(false);
        out.push(if flag { 1.0 } else { 0.0 });
    }

    let lanes_here = world.network().section(v.section).lanes;
    let candidates = [
        (v.lane + 1 < lanes_here).then(|| v.lane + 1), // left
        Some(v.lane),                                  // current
        v.lane.checked_sub(1),                         // right
    ];
    for lane in candidates {
        match lane {
            None => {
                for _ in 0..(cfg.n_front + cfg.n_back) * 4 {
                    out.push(0.0);
                }
            }
            Some(lane) => {
                let ahead = collect_ahead(world, v.section, lane, v.pos, id, cfg);
                push_slots(world, &mut out, &ahead, cfg.n_front, 1.0);
                let behind = collect_behind(world, v.section, lane, v.pos, id, cfg);
                push_slots(world, &mut out, &behind, cfg.n_back, -1.0);
            }
        }
    }
    debug_assert_eq!(out.len(), observation_len(cfg));
    out
}

fn push_slots(world: &World, out: &mut Vec<f64>, found: &[(u32, f64)], slots: usize, sign: f64) {
    for i in 0..slots {
        match found.get(i) {
            Some(&(id, dist)) => {
                let n = world.vehicle(id).expect("scanned vehicle not in world");
                out.push(1.0);
                out.push(sign * dist);
                out.push(n.speed);
                out.push(n.prev_accel);
            }
            None => {
                out.push(0.0);
                out.push(0.0);
                out.push(0.0);
                out.push(0.0);
            }
        }
    }
}

fn collect_ahead(
    world: &World,
    section: usize,
    lane: usize,
    pos: f64,
    exclude: u32,
    cfg: &ObservationConfig,
) -> Vec<(u32, f64)> {
    let mut found = Vec::new();
    let net = world.network();
    let mut cur = (section, lane);
    let mut base = -pos;
    let total = net.total_length();
    'outer: loop {
        for &(p, vid) in world.bucket(cur.0, cur.1) {
            if vid == exclude {
                continue;
            }
            let dist = base + p;
            if dist <= 0.0 {
                continue;
            }
            if dist > cfg.radius || found.len() >= cfg.n_front {
                break 'outer;
            }
            found.push((vid, dist));
        }
        base += net.section(cur.0).length;
        if base > cfg.radius || base >= total || found.len() >= cfg.n_front {
            break;
        }
        match net.link(cur.0, cur.1) {
            LaneLink::To(l2) => match net.next_section(cur.0) {
                Some(s2) => cur = (s2, l2),
                None => break,
            },
            _ => break,
        }
    }
    found
}

fn collect_behind(
    world: &World,
    section: usize,
    lane: usize,
    pos: f64,
    exclude: u32,
    cfg: &ObservationConfig,
) -> Vec<(u32, f64)> {
    let mut found = Vec::new();
    let net = world.network();
    let mut cur = (section, lane);
    let mut base = pos;
    let total = net.total_length();
    'outer: loop {
        for &(p, vid) in world.bucket(cur.0, cur.1).iter().rev() {
            if vid == exclude {
                continue;
            }
            let dist = base - p;
            if dist <= 0.0 {
                continue;
            }
            if dist > cfg.radius || found.len() >= cfg.n_back {
                break 'outer;
            }
            found.push((vid, dist));
        }
        if base > cfg.radius || base >= total || found.len() >= cfg.n_back {
            break;
        }
        match net.feeder(cur.0, cur.1) {
            Some(feeder_lane) => match net.prev_section(cur.0) {
                Some(s2) => {
                    cur = (s2, feeder_lane);
                    base += net.section(s2).length;
                }
                None => break,
            },
            None => break,
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::VehicleParams;
    use crate::route::RouteSpec;
    use crate::sim::network::NetworkSpec;
    use crate::sim::scenario::{ScenarioConfig, Spawn};
    use alloc::vec;

    fn config_with_vehicles(vehicles: Vec<Spawn>) -> ScenarioConfig {
        let params = VehicleParams::default();
        ScenarioConfig {
            network: NetworkSpec::Ring {
                section_length: 500.0,
                sections: 4,
                lanes: 3,
            },
            routes: vec![RouteSpec::all_lanes(4, 3)],
            step_len: 0.1,
            horizon: 100,
            seed: 0,
            ego: Spawn {
                section: 0,
                lane: 1,
                pos: 100.0,
                speed: 10.0,
                speed_limit: 34.0,
                params,
            },
            ego_route: 0,
            vehicles,
            inflow: None,
            events: Vec::new(),
            merge_lane: None,
            speed_cap: crate::kernel::DEFAULT_SPEED_CAP,
            lane_width: 3.2,
            observation: crate::sim::scenario::ObservationConfig::default(),
        }
    }

    #[test]
    fn empty_road_is_ego_block_plus_zero_slots() {
        let config = config_with_vehicles(Vec::new());
        let world = World::new(&config).unwrap();
        let cfg = config.observation;
        let obs = build_observation(&world, world.ego_id(), &cfg);
        assert_eq!(obs.len(), observation_len(&cfg));
        assert_eq!(obs[0], 100.0);
        assert_eq!(obs[1], 10.0);
        assert_eq!(obs[4], 1.0);
        // Route map: ring route covers lanes 0..3, pad lane 3 off.
        assert_eq!(&obs[6..10], &[1.0, 1.0, 1.0, 0.0]);
        // All neighbor slots empty.
        for chunk in obs[10..].chunks(4) {
            assert_eq!(chunk, &[0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn length_is_constant_across_steps() {
        let params = VehicleParams::default();
        let config = config_with_vehicles(vec![Spawn {
            section: 0,
            lane: 1,
            pos: 160.0,
            speed: 10.0,
            speed_limit: 17.0,
            params,
        }]);
        let mut world = World::new(&config).unwrap();
        let cfg = config.observation;
        let len0 = build_observation(&world, world.ego_id(), &cfg).len();
        for _ in 0..20 {
            let mut actions = alloc::collections::BTreeMap::new();
            actions.insert(world.ego_id(), world.uncontrolled_action(world.ego_id()));
            world.step(&actions).unwrap();
            assert_eq!(build_observation(&world, world.ego_id(), &cfg).len(), len0);
        }
    }

    #[test]
    fn scan_radius_filters_far_vehicles() {
        let params = VehicleParams::default();
        // Leaders 10 m and 40 m ahead on the ego lane; radius 30 keeps one.
        let config = config_with_vehicles(vec![
            Spawn {
                section: 0,
                lane: 1,
                pos: 110.0,
                speed: 10.0,
                speed_limit: 17.0,
                params,
            },
            Spawn {
                section: 0,
                lane: 1,
                pos: 140.0,
                speed: 10.0,
                speed_limit: 17.0,
                params,
            },
        ]);
        let world = World::new(&config).unwrap();
        let cfg = ObservationConfig {
            radius: 30.0,
            ..ObservationConfig::default()
        };
        let obs = build_observation(&world, world.ego_id(), &cfg);
        // Current lane block follows the left block.
        let lane_block = (cfg.n_front + cfg.n_back) * 4;
        let cur = 6 + cfg.max_lanes + lane_block;
        assert_eq!(obs[cur], 1.0); // first front slot populated
        assert_eq!(obs[cur + 1], 10.0);
        assert_eq!(obs[cur + 4], 0.0); // second slot empty: 40 m > radius
    }
}
