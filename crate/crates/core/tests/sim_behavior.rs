//! Cross-module behaviour of the simulator: agreement with the analytic
//! follower map, platoon steady state, worst-case braking closure, and
//! determinism.

use std::collections::BTreeMap;

use safelane_core::action::{Action, LaneChange};
use safelane_core::analysis::{FollowerState, FollowerSystem, StepOptions};
use safelane_core::controllers::{ComfortGreedy, ConstantSpeed, GippsGreedy};
use safelane_core::kernel::{max_safe_speed, required_safe_gap, VehicleParams, DEFAULT_SPEED_CAP};
use safelane_core::rng::SplitMix64;
use safelane_core::route::RouteSpec;
use safelane_core::sim::{
    make_scenario, run_episode, NetworkSpec, ObservationConfig, ScenarioConfig, ScenarioKind,
    Spawn, World,
};

fn follower_pair_config(gap0: f64, v0: f64, w: f64) -> ScenarioConfig {
    let params = VehicleParams {
        min_stopped_gap: 4.0,
        ..VehicleParams::default()
    };
    ScenarioConfig {
        network: NetworkSpec::Ring {
            section_length: 500.0,
            sections: 4,
            lanes: 1,
        },
        routes: vec![RouteSpec::all_lanes(4, 1)],
        step_len: 0.1,
        horizon: 20_000,
        seed: 0,
        // The controlled vehicle is the constant-speed leader.
        ego: Spawn {
            section: 2,
            lane: 0,
            pos: 0.0,
            speed: w,
            speed_limit: w,
            params,
        },
        ego_route: 0,
        vehicles: vec![Spawn {
            section: 1,
            lane: 0,
            pos: 500.0 - gap0 - params.length,
            speed: v0,
            speed_limit: f64::INFINITY,
            params,
        }],
        inflow: None,
        events: Vec::new(),
        merge_lane: None,
        speed_cap: DEFAULT_SPEED_CAP,
        lane_width: 3.2,
        observation: ObservationConfig::default(),
    }
}

/// The single-lane two-vehicle world reproduces the capped follower map
/// state for state.
#[test]
fn world_matches_follower_map_over_ten_thousand_steps() {
    let w = 25.0;
    let config = follower_pair_config(20.0, 20.0, w);
    let mut world = World::new(&config).unwrap();
    let follower_id = 0;

    let sys = FollowerSystem {
        leader_speed: w,
        ego: config.vehicles[0].params,
        leader_decel: config.ego.params.max_decel,
    };
    let opts = StepOptions::like_sim(Some(f64::INFINITY));
    let mut state = FollowerState {
        gap: 20.0,
        speed: 20.0,
    };

    let mut actions = BTreeMap::new();
    for step in 0..10_000 {
        state = sys.step_with(state, &opts).unwrap().state;

        actions.clear();
        actions.insert(
            world.ego_id(),
            Action {
                accel: 0.0,
                lane_change: LaneChange::Stay,
            },
        );
        world.step(&actions).unwrap();

        let follower = world.vehicle(follower_id).unwrap();
        let ctx = world.build_context(follower_id, f64::INFINITY);
        let gap = ctx.current.leader.gap();
        assert!(
            (gap - state.gap).abs() < 1e-9,
            "step {step}: sim gap {gap} vs map {}",
            state.gap
        );
        assert!(
            (follower.speed - state.speed).abs() < 1e-9,
            "step {step}: sim speed {} vs map {}",
            follower.speed,
            state.speed
        );
    }
    assert!(world.crash().is_none());
}

/// Platoon followers settle onto the predicted steady-state gaps.
#[test]
fn platoon_gaps_match_prediction_within_one_percent() {
    let kind = ScenarioKind::Platoon {
        leader_speed: 25.0,
        followers: 3,
        min_stopped_gap: 4.0,
        decels: None,
    };
    let config = make_scenario(&kind, 11);
    let mut world = World::new(&config).unwrap();
    let mut policy = ConstantSpeed { target: 25.0 };

    let mut actions = BTreeMap::new();
    for _ in 0..2500 {
        let ego = world.ego().unwrap();
        let view_speed = ego.speed;
        let _ = view_speed;
        let ego_id = world.ego_id();
        let view = safelane_core::controllers::DecisionView {
            neighbors: world.build_context(ego_id, f64::INFINITY),
            speed: world.ego().unwrap().speed,
            prev_accel: world.ego().unwrap().prev_accel,
            params: world.ego().unwrap().params,
            speed_limit: world.ego().unwrap().speed_limit,
            speed_cap: world.speed_cap(),
            route: &world.routes()[0],
            section: world.ego().unwrap().section,
            lane: world.ego().unwrap().lane,
            dist_to_section_end: 0.0,
            off_route_dead_end: false,
            observation: None,
        };
        use safelane_core::controllers::{Policy, PolicyDecision};
        let action = match policy.decide(&view) {
            PolicyDecision::Direct(a) => a,
            PolicyDecision::Raw(_) => unreachable!(),
        };
        actions.clear();
        actions.insert(ego_id, action);
        world.step(&actions).unwrap();
    }
    assert!(world.crash().is_none());

    // Follower ids 0..3 sit behind the ego head in spawn order.
    for id in 0..3u32 {
        let ctx = world.build_context(id, f64::INFINITY);
        let gap = ctx.current.leader.gap();
        let rel = (gap - 6.5).abs() / 6.5;
        assert!(rel < 0.01, "follower {id} gap {gap}");
        let v = world.vehicle(id).unwrap().speed;
        assert!((v - 25.0).abs() < 0.01, "follower {id} speed {v}");
    }
}

/// Worst-case braking: an ego that always drives at the safe speed keeps at
/// least the stopped margin when its leader slams the brakes.
///
/// The episode is integrated with the displacement bookkeeping of the
/// safe-gap derivation itself (per-step trapezoid for both vehicles), under
/// which driving at the safe speed preserves the gap inequality step by
/// step and the stopped state lands exactly on the margin.
#[test]
fn braking_closure_keeps_stopped_margin() {
    let mut rng = SplitMix64::new(0xB4A6E);
    for case in 0..300 {
        let r = rng.uniform(0.05, 0.5);
        let d_e = rng.uniform(1.5, 6.0);
        let d_l = d_e + rng.uniform(0.0, 2.0);
        let eps = rng.uniform(0.5, 4.0);
        let ego = VehicleParams {
            max_accel: 2.5,
            max_decel: d_e,
            reaction_time: r,
            min_stopped_gap: eps,
            length: 5.0,
        };
        let mut v_ego = rng.uniform(0.0, 35.0);
        let mut v_leader = rng.uniform(0.0, 35.0);
        // A fast leader can make the required gap negative; starts must
        // still be physically disjoint.
        let mut gap = required_safe_gap(v_ego, v_ego, v_leader, &ego, d_l)
            .unwrap()
            .max(0.0)
            * (1.0 + rng.next_f64())
            + rng.uniform(0.5, 5.0);
        let brake_at = rng.below(40) as u64;

        let mut step = 0u64;
        loop {
            // Ego drives exactly at its maximal safe next-step speed. A
            // vehicle whose speed would go negative within the step instead
            // comes to rest braking at its maximal rate, sweeping v²/(2d),
            // which is precisely what the gap inequality budgets for it.
            let safe = max_safe_speed(gap, v_ego, v_leader, &ego, d_l, 1e9).unwrap();
            // The flag means "brake maximally"; in these kinematics that is
            // the same rest-within-the-step branch as a negative root.
            let (v_next, ego_move) = if safe.already_unsafe || safe.speed < 0.0 {
                (0.0, v_ego * v_ego / (2.0 * d_e))
            } else {
                (safe.speed, (v_ego + safe.speed) * 0.5 * r)
            };
            let (leader_next, leader_move) = if step < brake_at {
                (v_leader, v_leader * r)
            } else if v_leader - d_l * r > 0.0 {
                let next = v_leader - d_l * r;
                (next, (v_leader + next) * 0.5 * r)
            } else {
                (0.0, v_leader * v_leader / (2.0 * d_l))
            };
            gap += leader_move - ego_move;
            v_ego = v_next;
            v_leader = leader_next;
            step += 1;
            if step > brake_at && v_leader == 0.0 && v_ego <= 1e-12 {
                break;
            }
            assert!(step < 100_000, "case {case} did not settle");
        }
        assert!(
            gap >= eps - 1e-6,
            "case {case}: stopped gap {gap} below margin {eps}"
        );
    }
}

/// Same-lane vehicles keep their cyclic order: without lane changes nobody
/// can pass anybody, and a violation would have to cross a crash first.
#[test]
fn same_lane_order_is_stable_on_the_ring() {
    let config = make_scenario(&ScenarioKind::LoopCongested, 2);
    let mut world = World::new(&config).unwrap();
    let ego_id = world.ego_id();
    let lanes = 3usize;

    let order_of = |world: &World, lane: usize| -> Vec<u32> {
        let net = world.network();
        let mut ids: Vec<(f64, u32)> = world
            .vehicles()
            .filter(|v| v.lane == lane && v.id != ego_id)
            .map(|v| (net.offset(v.section) + v.pos, v.id))
            .collect();
        ids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ids: Vec<u32> = ids.into_iter().map(|(_, id)| id).collect();
        // Normalize the cyclic sequence: rotate the smallest id to front.
        if let Some(min_pos) = ids.iter().enumerate().min_by_key(|(_, id)| **id).map(|(i, _)| i) {
            ids.rotate_left(min_pos);
        }
        ids
    };

    let mut previous: Vec<Vec<u32>> = (0..lanes).map(|l| order_of(&world, l)).collect();
    let mut actions = BTreeMap::new();
    for _ in 0..1000 {
        actions.clear();
        actions.insert(ego_id, world.uncontrolled_action(ego_id));
        world.step(&actions).unwrap();
        assert!(world.crash().is_none());
        for (lane, prev) in previous.iter_mut().enumerate() {
            let now = order_of(&world, lane);
            assert_eq!(*prev, now, "lane {lane} order changed");
            *prev = now;
        }
    }
}

/// The closure claim is controller-independent: even an adversarial policy
/// that floors the throttle and rolls random lane intents every step stays
/// crash-free behind the filter.
#[test]
fn adversarial_raw_policy_never_crashes() {
    use safelane_core::action::RawPolicyOutput;
    use safelane_core::controllers::{DecisionView, Policy, PolicyDecision};

    struct FullThrottleRandomLanes {
        rng: SplitMix64,
    }

    impl Policy for FullThrottleRandomLanes {
        fn decide(&mut self, _view: &DecisionView) -> PolicyDecision {
            PolicyDecision::Raw(RawPolicyOutput {
                x: 3.0,
                y: self.rng.uniform(-3.0, 3.0),
            })
        }
    }

    let random = safelane_core::sim::RouteChoice::Random {
        offramp_probability: 0.5,
    };
    let kinds = [
        ScenarioKind::LoopNormal,
        ScenarioKind::LoopCongested,
        ScenarioKind::LoopEmergency,
        ScenarioKind::FreewayBypass {
            spacing: 5.0,
            route: random,
        },
        ScenarioKind::FreewayBypass {
            spacing: 20.0,
            route: random,
        },
        ScenarioKind::FreewayEmergency,
        ScenarioKind::FreewayMerge,
    ];
    for kind in &kinds {
        for seed in 0..5u64 {
            let config = make_scenario(kind, seed);
            let mut policy = FullThrottleRandomLanes {
                rng: SplitMix64::new(seed ^ 0xADE5),
            };
            let report = run_episode(&config, &mut policy, false).unwrap();
            assert!(
                !report.metrics.crash,
                "{kind:?} seed {seed} crashed under the adversarial policy"
            );
        }
    }
}

/// Identical config and controller give bit-identical metrics.
#[test]
fn episodes_are_deterministic() {
    let kind = ScenarioKind::LoopNormal;
    let config = make_scenario(&kind, 7);
    let mut a = ComfortGreedy::default();
    let mut b = ComfortGreedy::default();
    let mut short = config.clone();
    short.horizon = 600;
    let ra = run_episode(&short, &mut a, false).unwrap();
    let rb = run_episode(&short, &mut b, false).unwrap();
    assert_eq!(ra.metrics, rb.metrics);
}

/// A lone ego on an empty ring accelerates to the speed limit and cruises.
#[test]
fn empty_road_reaches_the_limit() {
    let mut config = follower_pair_config(20.0, 20.0, 25.0);
    config.vehicles.clear();
    config.ego.speed = 0.0;
    config.ego.speed_limit = 34.0;
    config.horizon = 2000;
    let mut policy = GippsGreedy::default();
    let report = run_episode(&config, &mut policy, false).unwrap();
    assert!(!report.metrics.crash);
    let final_stretch = report.metrics.mean_speed;
    assert!(final_stretch > 25.0, "mean speed {final_stretch}");
}

/// Scripted braking zones: full braking down to the floor speed, then hold.
#[test]
fn braking_zone_driver_brakes_to_floor_and_holds() {
    let params = VehicleParams::default();
    let mut config = follower_pair_config(200.0, 10.0, 25.0);
    config.vehicles[0].speed = 10.0;
    config.vehicles[0].speed_limit = 17.0;
    config.events = vec![safelane_core::sim::BrakingZone {
        first_section: 1,
        last_section: 1,
        decel: 3.0,
        floor_speed: 3.0,
    }];
    let world = World::new(&config).unwrap();
    // Vehicle 0 sits in section 1: full scripted braking.
    let act = world.uncontrolled_action(0);
    assert!((act.accel - (-3.0)).abs() < 1e-12, "got {}", act.accel);

    // At the floor it holds.
    let mut at_floor = config.clone();
    at_floor.vehicles[0].speed = 3.0;
    let world = World::new(&at_floor).unwrap();
    let act = world.uncontrolled_action(0);
    assert!(act.accel.abs() < 1e-12, "got {}", act.accel);
    let _ = params;
}

/// Ring scenarios put 25 slower vehicles around a faster controlled one.
#[test]
fn loop_normal_roster_and_limits() {
    let config = make_scenario(&ScenarioKind::LoopNormal, 4);
    assert_eq!(config.vehicles.len(), 25);
    assert!(config.vehicles.iter().all(|v| v.speed_limit == 17.0));
    assert_eq!(config.ego.speed_limit, 34.0);
}

/// The harshest stop-and-wait scenario keeps a clearly positive standoff:
/// the discrete braking transient eats some of the stopped margin but never
/// approaches an overlap.
#[test]
fn emergency_wall_keeps_positive_standoff() {
    for seed in 0..5u64 {
        let config = make_scenario(&ScenarioKind::FreewayEmergency, seed);
        let mut policy = ComfortGreedy::default();
        let report = run_episode(&config, &mut policy, false).unwrap();
        assert!(!report.metrics.crash);
        assert!(
            report.metrics.min_front_gap > 1.0,
            "min gap {}",
            report.metrics.min_front_gap
        );
    }
}

/// Scenario generation is deterministic per seed and differs across seeds.
#[test]
fn scenarios_are_seed_deterministic() {
    let a = make_scenario(&ScenarioKind::LoopCongested, 5);
    let b = make_scenario(&ScenarioKind::LoopCongested, 5);
    assert_eq!(a.vehicles, b.vehicles);
    assert_eq!(a.ego, b.ego);
    let c = make_scenario(&ScenarioKind::LoopCongested, 6);
    assert_ne!(a.vehicles, c.vehicles);
}

/// The bypass fleet honors the requested head-to-head spacing.
#[test]
fn bypass_fleet_spacing() {
    let kind = ScenarioKind::FreewayBypass {
        spacing: 20.0,
        route: safelane_core::sim::RouteChoice::OffRamp,
    };
    let config = make_scenario(&kind, 3);
    for pair in config.vehicles.windows(2) {
        let head = pair[0].pos;
        let next = pair[1].pos;
        assert!((head - next - 20.0).abs() < 1e-9);
        assert_ne!(pair[0].lane, pair[1].lane, "consecutive vehicles alternate lanes");
    }
}
