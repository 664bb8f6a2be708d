//! Mutable simulation state and the per-step update.
//!
//! One world instance is single threaded. Every step, actions for the
//! controlled vehicles come from outside while uncontrolled vehicles drive
//! themselves; all decisions are taken against the pre-step snapshot, then
//! applied in ascending vehicle-id order. Positions advance with the
//! next-step speed (`pos' = pos + v'·Δt`), the single integration convention
//! used throughout.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::action::{Action, LaneChange};
use crate::kernel::{
    safe_speed_for_slot, LaneNeighbors, NeighborContext, NeighborVehicle, Slot, VehicleParams,
};
use crate::rng::SplitMix64;
use crate::route::RouteSpec;
use crate::sim::network::{LaneLink, RoadNetwork};
use crate::sim::scenario::{ScenarioConfig, Spawn};

/// Driver class of a vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverKind {
    /// Receives its action from outside each step.
    Controlled,
    /// Safe-speed tracker driven by the world itself.
    Uncontrolled,
}

/// Full kinematic state of one vehicle. `pos` is the front-bumper position
/// from the start of its section.
#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: u32,
    pub section: usize,
    pub lane: usize,
    pub pos: f64,
    pub speed: f64,
    pub prev_accel: f64,
    /// Nonzero only on the step a lane change is performed.
    pub lat_speed: f64,
    pub params: VehicleParams,
    pub speed_limit: f64,
    pub route: Option<usize>,
    pub kind: DriverKind,
}

/// First detected bumper overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrashEvent {
    pub step: u64,
    pub rear: u32,
    pub front: u32,
}

/// Ego bookkeeping across section boundaries.
#[derive(Clone, Copy, Debug, Default)]
pub struct EgoStatus {
    pub route_miss: bool,
    pub exited: bool,
    /// Exit through an on-route boundary without a prior miss.
    pub clean_finish: bool,
    pub exit_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    InvalidConfig(String),
    MissingAction(u32),
    UnexpectedAction(u32),
    Halted,
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::InvalidConfig(msg) => write!(f, "invalid scenario config: {msg}"),
            SimError::MissingAction(id) => write!(f, "no action supplied for vehicle {id}"),
            SimError::UnexpectedAction(id) => {
                write!(f, "action supplied for unknown or uncontrolled vehicle {id}")
            }
            SimError::Halted => write!(f, "world is halted after a crash"),
        }
    }
}

impl core::error::Error for SimError {}

/// Result of a forward scan along the lane's successor chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ahead {
    /// Nearest vehicle ahead; `dist` is front bumper to front bumper.
    Vehicle { id: u32, dist: f64 },
    /// The lane ends (merge-lane drop) after `dist` metres with nothing in
    /// between.
    Wall { dist: f64 },
    Clear,
}

/// Result of a backward scan along the lane's feeder chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Behind {
    Vehicle { id: u32, dist: f64 },
    Clear,
}

struct InflowState {
    spec: crate::sim::scenario::InflowSpec,
    lane_cursor: usize,
    last_injected: Option<u32>,
    rng: SplitMix64,
}

pub struct World {
    network: RoadNetwork,
    routes: Vec<RouteSpec>,
    step_len: f64,
    speed_cap: f64,
    lane_width: f64,
    vehicles: BTreeMap<u32, Vehicle>,
    /// Per (section, lane): (pos, id) ascending. Rebuilt after every step.
    buckets: Vec<Vec<Vec<(f64, u32)>>>,
    events: Vec<crate::sim::scenario::BrakingZone>,
    inflow: Option<InflowState>,
    next_id: u32,
    step_count: u64,
    crash: Option<CrashEvent>,
    ego_id: u32,
    ego_status: EgoStatus,
}

impl World {
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate().map_err(SimError::InvalidConfig)?;
        let network = config.network.build();

        let mut world = World {
            buckets: network
                .sections()
                .iter()
                .map(|s| alloc::vec![Vec::new(); s.lanes])
                .collect(),
            network,
            routes: config.routes.clone(),
            step_len: config.step_len,
            speed_cap: config.speed_cap,
            lane_width: config.lane_width,
            vehicles: BTreeMap::new(),
            events: config.events.clone(),
            inflow: config.inflow.clone().map(|spec| InflowState {
                spec,
                lane_cursor: 0,
                last_injected: None,
                rng: SplitMix64::new(config.seed ^ 0x1F10_77AA),
            }),
            next_id: 0,
            step_count: 0,
            crash: None,
            ego_id: 0,
            ego_status: EgoStatus::default(),
        };

        for spawn in &config.vehicles {
            world
                .spawn(spawn, DriverKind::Uncontrolled, None)
                .map_err(SimError::InvalidConfig)?;
        }
        let ego_id = world
            .spawn(&config.ego, DriverKind::Controlled, Some(config.ego_route))
            .map_err(SimError::InvalidConfig)?;
        world.ego_id = ego_id;
        world.rebuild_buckets();

        // Reject initial overlaps outright.
        if let Some(c) = world.detect_crash() {
            return Err(SimError::InvalidConfig(alloc::format!(
                "initial overlap between vehicles {} and {}",
                c.rear,
                c.front
            )));
        }
        Ok(world)
    }

    fn spawn(
        &mut self,
        s: &Spawn,
        kind: DriverKind,
        route: Option<usize>,
    ) -> Result<u32, String> {
        if s.section >= self.network.section_count() {
            return Err(alloc::format!("spawn section {} out of range", s.section));
        }
        let sec = self.network.section(s.section);
        if s.lane >= sec.lanes {
            return Err(alloc::format!(
                "spawn lane {} out of range for section {}",
                s.lane,
                s.section
            ));
        }
        if !(0.0..=sec.length).contains(&s.pos) {
            return Err(alloc::format!("spawn position {} outside section", s.pos));
        }
        if s.speed < 0.0 {
            return Err("spawn speed must be >= 0".into());
        }
        let id = self.next_id;
        self.next_id += 1;
        self.vehicles.insert(
            id,
            Vehicle {
                id,
                section: s.section,
                lane: s.lane,
                pos: s.pos,
                speed: s.speed,
                prev_accel: 0.0,
                lat_speed: 0.0,
                params: s.params,
                speed_limit: s.speed_limit,
                route,
                kind,
            },
        );
        Ok(id)
    }

    pub fn step_len(&self) -> f64 {
        self.step_len
    }

    pub fn speed_cap(&self) -> f64 {
        self.speed_cap
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn crash(&self) -> Option<&CrashEvent> {
        self.crash.as_ref()
    }

    pub fn ego_id(&self) -> u32 {
        self.ego_id
    }

    pub fn ego_status(&self) -> &EgoStatus {
        &self.ego_status
    }

    pub fn ego(&self) -> Option<&Vehicle> {
        self.vehicles.get(&self.ego_id)
    }

    pub fn vehicle(&self, id: u32) -> Option<&Vehicle> {
        self.vehicles.get(&id)
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.values()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn routes(&self) -> &[RouteSpec] {
        &self.routes
    }

    /// Sorted (position, id) pairs currently on one lane of one section.
    pub fn bucket(&self, section: usize, lane: usize) -> &[(f64, u32)] {
        &self.buckets[section][lane]
    }

    fn rebuild_buckets(&mut self) {
        for section in &mut self.buckets {
            for lane in section.iter_mut() {
                lane.clear();
            }
        }
        for v in self.vehicles.values() {
            self.buckets[v.section][v.lane].push((v.pos, v.id));
        }
        for section in &mut self.buckets {
            for lane in section.iter_mut() {
                lane.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }
    }

    /// Nearest vehicle or lane terminus ahead of `(section, lane, pos)`
    /// along the successor chain, within `radius`.
    ///
    /// `inclusive` counts a vehicle exactly alongside (same position) as
    /// ahead, which is wanted for adjacent-lane leaders and crash checks but
    /// not for the own-lane leader.
    pub fn scan_ahead(
        &self,
        section: usize,
        lane: usize,
        pos: f64,
        exclude: Option<u32>,
        radius: f64,
        inclusive: bool,
    ) -> Ahead {
        let bucket = &self.buckets[section][lane];
        let idx = bucket.partition_point(|&(p, _)| p < pos);
        for &(p, id) in &bucket[idx..] {
            if Some(id) == exclude || (!inclusive && p == pos) {
                continue;
            }
            let dist = p - pos;
            return if dist <= radius {
                Ahead::Vehicle { id, dist }
            } else {
                Ahead::Clear
            };
        }

        let total = self.network.total_length();
        let mut cur_sec = section;
        let mut cur_lane = lane;
        let mut base = self.network.section(section).length - pos;
        loop {
            if base > radius || base >= total {
                return Ahead::Clear;
            }
            match self.network.link(cur_sec, cur_lane) {
                LaneLink::Drop => return Ahead::Wall { dist: base },
                LaneLink::Exit => return Ahead::Clear,
                LaneLink::To(next_lane) => {
                    let Some(next_sec) = self.network.next_section(cur_sec) else {
                        return Ahead::Clear;
                    };
                    cur_sec = next_sec;
                    cur_lane = next_lane;
                    for &(p, id) in &self.buckets[cur_sec][cur_lane] {
                        if Some(id) == exclude {
                            continue;
                        }
                        let dist = base + p;
                        return if dist <= radius {
                            Ahead::Vehicle { id, dist }
                        } else {
                            Ahead::Clear
                        };
                    }
                    base += self.network.section(cur_sec).length;
                }
            }
        }
    }

    /// Nearest vehicle behind `(section, lane, pos)` along the feeder chain.
    pub fn scan_behind(
        &self,
        section: usize,
        lane: usize,
        pos: f64,
        exclude: Option<u32>,
        radius: f64,
    ) -> Behind {
        let bucket = &self.buckets[section][lane];
        let idx = bucket.partition_point(|&(p, _)| p < pos);
        for &(p, id) in bucket[..idx].iter().rev() {
            if Some(id) == exclude {
                continue;
            }
            let dist = pos - p;
            return if dist <= radius {
                Behind::Vehicle { id, dist }
            } else {
                Behind::Clear
            };
        }

        let total = self.network.total_length();
        let mut cur_sec = section;
        let mut cur_lane = lane;
        let mut base = pos;
        loop {
            if base > radius || base >= total {
                return Behind::Clear;
            }
            let Some(feeder_lane) = self.network.feeder(cur_sec, cur_lane) else {
                return Behind::Clear;
            };
            let Some(prev_sec) = self.network.prev_section(cur_sec) else {
                return Behind::Clear;
            };
            cur_sec = prev_sec;
            cur_lane = feeder_lane;
            let len = self.network.section(cur_sec).length;
            for &(p, id) in self.buckets[cur_sec][cur_lane].iter().rev() {
                if Some(id) == exclude {
                    continue;
                }
                let dist = base + (len - p);
                return if dist <= radius {
                    Behind::Vehicle { id, dist }
                } else {
                    Behind::Clear
                };
            }
            base += len;
        }
    }

    fn leader_slot(&self, v: &Vehicle, section: usize, lane: usize, radius: f64, inclusive: bool) -> Slot {
        match self.scan_ahead(section, lane, v.pos, Some(v.id), radius, inclusive) {
            Ahead::Clear => Slot::Empty,
            Ahead::Wall { dist } => Slot::Occupied(NeighborVehicle {
                gap: dist,
                speed: 0.0,
                max_decel: f64::INFINITY,
                reaction_time: 0.0,
            }),
            Ahead::Vehicle { id, dist } => {
                let leader = &self.vehicles[&id];
                Slot::Occupied(NeighborVehicle {
                    gap: dist - leader.params.length,
                    speed: leader.speed,
                    max_decel: leader.params.max_decel,
                    reaction_time: leader.params.reaction_time,
                })
            }
        }
    }

    fn follower_slot(&self, v: &Vehicle, section: usize, lane: usize, radius: f64) -> Slot {
        match self.scan_behind(section, lane, v.pos, Some(v.id), radius) {
            Behind::Clear => Slot::Empty,
            Behind::Vehicle { id, dist } => {
                let follower = &self.vehicles[&id];
                Slot::Occupied(NeighborVehicle {
                    gap: dist - v.params.length,
                    speed: follower.speed,
                    max_decel: follower.params.max_decel,
                    reaction_time: follower.params.reaction_time,
                })
            }
        }
    }

    /// Six-neighbor view around a vehicle, with bumper-to-bumper gaps.
    pub fn build_context(&self, id: u32, radius: f64) -> NeighborContext {
        let v = &self.vehicles[&id];
        let lanes_here = self.network.section(v.section).lanes;
        let lane_view = |lane: usize, own: bool| LaneNeighbors {
            leader: self.leader_slot(v, v.section, lane, radius, !own),
            follower: self.follower_slot(v, v.section, lane, radius),
        };
        NeighborContext {
            current: lane_view(v.lane, true),
            left: (v.lane + 1 < lanes_here).then(|| lane_view(v.lane + 1, false)),
            right: (v.lane > 0).then(|| lane_view(v.lane - 1, false)),
        }
    }

    fn braking_zone(&self, section: usize) -> Option<&crate::sim::scenario::BrakingZone> {
        self.events.iter().find(|z| z.covers(section))
    }

    /// Built-in driver for uncontrolled vehicles: track the lesser of the
    /// safe speed and the speed limit, never change lanes, and obey scripted
    /// braking zones.
    pub fn uncontrolled_action(&self, id: u32) -> Action {
        let v = &self.vehicles[&id];
        let p = &v.params;
        let slot = self.leader_slot(v, v.section, v.lane, f64::INFINITY, false);
        let safe = safe_speed_for_slot(&slot, v.speed, p, self.speed_cap)
            .map(|s| s.speed)
            .unwrap_or(0.0);

        let accel = if let Some(zone) = self.braking_zone(v.section) {
            let script =
                ((zone.floor_speed - v.speed) / p.reaction_time).clamp(-zone.decel, p.max_accel);
            let safety = ((safe - v.speed) / p.reaction_time).clamp(-p.max_decel, p.max_accel);
            script.min(safety)
        } else {
            let target = safe.min(v.speed_limit);
            ((target - v.speed) / p.reaction_time).clamp(-p.max_decel, p.max_accel)
        };
        Action {
            accel,
            lane_change: LaneChange::Stay,
        }
    }

    /// Advance the world one step. `actions` must hold exactly one action
    /// per controlled vehicle.
    pub fn step(&mut self, actions: &BTreeMap<u32, Action>) -> Result<(), SimError> {
        if self.crash.is_some() {
            return Err(SimError::Halted);
        }
        for id in actions.keys() {
            match self.vehicles.get(id) {
                Some(v) if v.kind == DriverKind::Controlled => {}
                _ => return Err(SimError::UnexpectedAction(*id)),
            }
        }

        // Decide everything against the pre-step snapshot.
        let mut decided: Vec<(u32, Action)> = Vec::with_capacity(self.vehicles.len());
        for v in self.vehicles.values() {
            let action = match v.kind {
                DriverKind::Controlled => *actions
                    .get(&v.id)
                    .ok_or(SimError::MissingAction(v.id))?,
                DriverKind::Uncontrolled => self.uncontrolled_action(v.id),
            };
            decided.push((v.id, action));
        }

        // Apply in id order.
        let dt = self.step_len;
        let mut exited: Vec<u32> = Vec::new();
        for (id, action) in decided {
            let ego_route = self.vehicles[&id].route.map(|r| &self.routes[r]);
            let is_ego = id == self.ego_id;
            let mut status = self.ego_status;
            let v = self.vehicles.get_mut(&id).expect("vehicle vanished");

            let new_speed = (v.speed + action.accel * dt).max(0.0);
            match action.lane_change {
                LaneChange::Stay => v.lat_speed = 0.0,
                LaneChange::Left => {
                    debug_assert!(v.lane + 1 < self.network.section(v.section).lanes);
                    v.lane += 1;
                    v.lat_speed = self.lane_width / dt;
                }
                LaneChange::Right => {
                    debug_assert!(v.lane > 0);
                    v.lane -= 1;
                    v.lat_speed = -self.lane_width / dt;
                }
            }
            v.speed = new_speed;
            v.prev_accel = action.accel;
            v.pos += new_speed * dt;

            // Section transitions, possibly several for short sections.
            loop {
                let len = self.network.section(v.section).length;
                if v.pos < len {
                    break;
                }
                match self.network.link(v.section, v.lane) {
                    LaneLink::To(next_lane) => {
                        let next_sec = self
                            .network
                            .next_section(v.section)
                            .expect("To-link without next section");
                        if is_ego {
                            if let Some(route) = ego_route {
                                if !route.covers(next_sec) && !status.exited {
                                    status.route_miss = true;
                                }
                            }
                        }
                        v.pos -= len;
                        v.section = next_sec;
                        v.lane = next_lane;
                    }
                    LaneLink::Exit => {
                        if is_ego {
                            status.exited = true;
                            status.exit_step = Some(self.step_count);
                            let on_route = ego_route
                                .map(|route| {
                                    route.covers(v.section)
                                        && route.is_on_route(v.section, v.lane).unwrap_or(false)
                                })
                                .unwrap_or(true);
                            if on_route && !status.route_miss {
                                status.clean_finish = true;
                            } else {
                                status.route_miss = true;
                            }
                        }
                        exited.push(id);
                        break;
                    }
                    LaneLink::Drop => {
                        // Vehicles brake for the wall well before the lane
                        // end; stop defensively if one noses past.
                        v.pos = len - 1e-9;
                        v.speed = 0.0;
                        break;
                    }
                }
            }
            if is_ego {
                self.ego_status = status;
            }
        }

        for id in exited {
            self.vehicles.remove(&id);
        }
        self.rebuild_buckets();
        self.inject_inflow();
        if let Some(crash) = self.detect_crash() {
            self.crash = Some(crash);
        }
        self.step_count += 1;
        Ok(())
    }

    fn inject_inflow(&mut self) {
        let Some(state) = &mut self.inflow else {
            return;
        };
        // Wait until the previous injection has cleared the spacing.
        if let Some(last) = state.last_injected {
            match self.vehicles.get(&last) {
                Some(v) => {
                    let travelled = self.network.offset(v.section) + v.pos
                        - self.network.offset(state.spec.section);
                    if travelled < state.spec.spacing {
                        return;
                    }
                }
                None => {} // exited; slot free
            }
        }

        let lane = state.spec.lanes[state.lane_cursor % state.spec.lanes.len()];
        let draw = state.rng.uniform(0.5, 1.0) * state.spec.speed_limit;
        let params = state.spec.params;
        let section = state.spec.section;
        let spec_limit = state.spec.speed_limit;

        // Safety guard: never inject into an unsafe state.
        let speed = match self.scan_ahead(section, lane, 0.0, None, f64::INFINITY, true) {
            Ahead::Clear => draw,
            Ahead::Wall { dist } => {
                let bound =
                    crate::sim::scenario::steady_safe_speed(dist, 0.0, &params, f64::INFINITY);
                draw.min(bound)
            }
            Ahead::Vehicle { id, dist } => {
                let leader = &self.vehicles[&id];
                let gap = dist - leader.params.length;
                if gap < params.min_stopped_gap + 0.5 {
                    return; // too tight; retry next step
                }
                let bound = crate::sim::scenario::steady_safe_speed(
                    gap,
                    leader.speed,
                    &params,
                    leader.params.max_decel,
                );
                draw.min(bound)
            }
        };

        let id = self.next_id;
        self.next_id += 1;
        self.vehicles.insert(
            id,
            Vehicle {
                id,
                section,
                lane,
                pos: 0.0,
                speed,
                prev_accel: 0.0,
                lat_speed: 0.0,
                params,
                speed_limit: spec_limit,
                route: None,
                kind: DriverKind::Uncontrolled,
            },
        );
        let bucket = &mut self.buckets[section][lane];
        let idx = bucket.partition_point(|&(p, _)| p < 0.0);
        bucket.insert(idx, (0.0, id));

        let state = self.inflow.as_mut().unwrap();
        state.last_injected = Some(id);
        state.lane_cursor += 1;
    }

    fn detect_crash(&self) -> Option<CrashEvent> {
        let mut first: Option<CrashEvent> = None;
        let mut consider = |rear: u32, front: u32| {
            let event = CrashEvent {
                step: self.step_count,
                rear,
                front,
            };
            if first.map_or(true, |f| (event.rear, event.front) < (f.rear, f.front)) {
                first = Some(event);
            }
        };
        for (section, lanes) in self.buckets.iter().enumerate() {
            for (lane, bucket) in lanes.iter().enumerate() {
                for pair in bucket.windows(2) {
                    let (p1, id1) = pair[0];
                    let (p2, id2) = pair[1];
                    let front_len = self.vehicles[&id2].params.length;
                    if p2 - front_len - p1 <= 0.0 {
                        consider(id1, id2);
                    }
                }
                if let Some(&(p_last, id_last)) = bucket.last() {
                    if let Ahead::Vehicle { id, dist } =
                        self.scan_ahead(section, lane, p_last, Some(id_last), 40.0, true)
                    {
                        let front_len = self.vehicles[&id].params.length;
                        if dist - front_len <= 0.0 {
                            consider(id_last, id);
                        }
                    }
                }
            }
        }
        first
    }

    /// Distance from a vehicle's front bumper to the end of its section.
    pub fn dist_to_section_end(&self, v: &Vehicle) -> f64 {
        self.network.section(v.section).length - v.pos
    }

    /// Whether crossing the next boundary on the vehicle's current lane
    /// would leave the given route: an exit from an off-route lane, a
    /// continuation into a section the route does not cover, or a lane drop.
    pub fn crossing_loses_route(&self, v: &Vehicle, route: &RouteSpec) -> bool {
        match self.network.link(v.section, v.lane) {
            LaneLink::Drop => true,
            LaneLink::Exit => !route
                .is_on_route(v.section, v.lane)
                .unwrap_or(false),
            LaneLink::To(_) => match self.network.next_section(v.section) {
                Some(next) => route.covers(v.section) && !route.covers(next),
                None => false,
            },
        }
    }
}
