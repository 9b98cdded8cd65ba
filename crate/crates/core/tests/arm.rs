use std::f64::consts::FRAC_PI_2;

use bramble::arm::*;
use bramble::geometry::{Point3, Pose2};
use bramble::world::{Flower, FlowerSpec, FlowerState, GridCellRef, PlantRow, Side, World, WorldConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

// --- Kinematics ----------------------------------------------------------

#[test]
fn fk_examples() {
    let arm = ArmSpec::default();
    let t = fk(&arm, &JointConfig::planar(0.0, 0.0, 0.0));
    assert!(close(t.x, 0.71) && close(t.z, 0.0) && close(t.phi, 0.0));
    let t = fk(&arm, &JointConfig::planar(FRAC_PI_2, 0.0, 0.0));
    assert!(close(t.x, 0.0) && close(t.z, 0.71) && close(t.phi, FRAC_PI_2));
    let t = fk(&arm, &JointConfig::planar(FRAC_PI_2, -FRAC_PI_2, 0.0));
    assert!(close(t.x, 0.43) && close(t.z, 0.28) && close(t.phi, 0.0));
}

#[test]
fn ik_examples() {
    let arm = ArmSpec::default();
    let params = IkParams::default();
    let q = ik(&arm, &IkTarget::pose(0.71, 0.0, 0.0), &JointConfig::default(), &params).unwrap();
    assert!(q.distance(&JointConfig::default()) < 1e-3, "{q:?}");
    assert_eq!(
        ik(&arm, &IkTarget::position(0.9, 0.0), &JointConfig::default(), &params),
        Err(ArmError::Unreachable {
            distance: 0.9,
            reach: arm.reach()
        })
    );
}

fn random_config(arm: &ArmSpec, rng: &mut ChaCha8Rng) -> JointConfig {
    JointConfig::from_array(std::array::from_fn(|i| {
        rng.random_range(arm.limits[i].0..arm.limits[i].1)
    }))
}

#[test]
fn ik_round_trips_random_reachable_targets() {
    let arm = ArmSpec::default();
    let params = IkParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let t = fk(&arm, &random_config(&arm, &mut rng));
        let q = ik(&arm, &IkTarget::position(t.x, t.z), &JointConfig::default(), &params).unwrap();
        assert!(arm.within_limits(&q));
        let back = fk(&arm, &q);
        assert!((back.x - t.x).hypot(back.z - t.z) < 1e-4);
    }
}

#[test]
fn ik_honours_orientation_when_asked() {
    let arm = ArmSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let t = fk(&arm, &random_config(&arm, &mut rng));
        if let Ok(q) = ik(
            &arm,
            &IkTarget::pose(t.x, t.z, t.phi),
            &JointConfig::default(),
            &IkParams::default(),
        ) {
            let back = fk(&arm, &q);
            assert!((back.x - t.x).hypot(back.z - t.z) < 1e-4);
            assert!(bramble::geometry::wrap_angle(back.phi - t.phi).abs() < 1e-4);
        }
    }
}

#[test]
fn ik_point_places_the_tip_in_the_world() {
    let arm = ArmSpec::default();
    let robot = Pose2::new(3.0, 1.0, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut solved = 0;
    for _ in 0..300 {
        let truth = tip_position(&arm, &robot, &random_config(&arm, &mut rng));
        match ik_point(&arm, &robot, &truth, &JointConfig::default(), &IkParams::default()) {
            Ok(q) => {
                assert!((tip_position(&arm, &robot, &q) - truth).norm() < 1e-4);
                solved += 1;
            }
            // Targets right above the shoulder may need a yaw past the limits.
            Err(ArmError::YawLimit(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(solved > 280);
}

// --- Survey --------------------------------------------------------------

fn survey_world() -> World {
    let mut cfg = WorldConfig::empty_room(6.0, 4.0, 1);
    cfg.rows = vec![PlantRow::along_x(1, 1.0, 2.0)];
    let at = |id, arclength, height, ready_time| FlowerSpec {
        id,
        row: 1,
        side: Side::Left,
        arclength,
        height,
        depth: 0.0,
        ready_time,
        wilt_time: 1e6,
    };
    // Cell 2 spans [1.376, 2.064] along the row.
    cfg.flowers = vec![
        at(1, 1.6, 0.6, 0.0),
        at(2, 1.8, 0.5, 0.0),
        at(3, 1.72, 1.45, 0.0),
        at(4, 1.9, 0.6, 1e5),
    ];
    let mut world = World::build(cfg).unwrap();
    world.idle(0.1).unwrap();
    world
}

#[test]
fn survey_examples() {
    let world = survey_world();
    let arm = ArmSpec::default();
    let cell = GridCellRef::new(1, Side::Left, 2);
    let parked = world.parking_pose(&cell).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let exact = survey_workspace(&world, &parked, &cell, &arm, 0.0, &mut rng);
    let ids: Vec<u32> = exact.iter().map(|t| t.flower_id).collect();
    // Flower 3 is ~0.9 m from the shoulder, flower 4 is still a bud.
    assert_eq!(ids, vec![1, 2]);
    let far = world.flower(3).unwrap();
    assert!((far.position - arm.shoulder(&parked)).norm() > arm.reach());
    for t in &exact {
        assert_eq!(t.position, world.flower(t.flower_id).unwrap().position);
    }

    let empty = GridCellRef::new(1, Side::Right, 0);
    let parked_empty = world.parking_pose(&empty).unwrap();
    assert!(survey_workspace(&world, &parked_empty, &empty, &arm, 0.01, &mut rng).is_empty());

    let a = survey_workspace(&world, &parked, &cell, &arm, 0.01, &mut ChaCha8Rng::seed_from_u64(9));
    let b = survey_workspace(&world, &parked, &cell, &arm, 0.01, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a, b);
    assert_ne!(a[0].position, exact[0].position);
}

// --- Sequencing ----------------------------------------------------------

fn along_q1(values: &[f64]) -> Vec<JointConfig> {
    values.iter().map(|&v| JointConfig::planar(v, 0.0, 0.0)).collect()
}

/// Minimum tour cost over every permutation, enumerated by Heap's algorithm.
fn heap_oracle(start: &JointConfig, configs: &[JointConfig]) -> f64 {
    let n = configs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |p: &[usize]| {
        let mut at = *start;
        let mut total = 0.0;
        for &i in p {
            let d: f64 = at
                .to_array()
                .iter()
                .zip(configs[i].to_array())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += d.sqrt();
            at = configs[i];
        }
        total
    };
    let mut best = cost(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

#[test]
fn exact_sequence_examples() {
    let start = JointConfig::default();
    let (order, cost) = exact_order(&start, &along_q1(&[0.4])).unwrap();
    assert_eq!((order, cost), (vec![0], 0.4));

    // Nearest-first goes 1 → 3 → −1.5 (7.5); the optimum starts at −1.5 (6.0).
    let configs = along_q1(&[1.0, -1.5, 3.0]);
    let (order, cost) = exact_order(&start, &configs).unwrap();
    assert_eq!(order, vec![1, 0, 2]);
    assert!((cost - 6.0).abs() < 1e-12);
    assert!((heap_oracle(&start, &configs) - cost).abs() < 1e-12);
    let (_, greedy) = nearest_neighbor_order(&start, &configs);
    assert!((greedy - 7.5).abs() < 1e-12);

    let ten = along_q1(&[0.1; 10]);
    assert_eq!(
        exact_order(&start, &ten),
        Err(ArmError::TooManyTargets { n: 10, max: 9 })
    );
}

#[test]
fn nearest_neighbor_can_lose_to_the_optimum() {
    let start = JointConfig::default();
    let configs = along_q1(&[1.0, -1.5, 3.0, 4.0]);
    let (nn_order, nn) = nearest_neighbor_order(&start, &configs);
    let (_, exact) = exact_order(&start, &configs).unwrap();
    assert_eq!(nn_order, vec![0, 2, 3, 1]);
    assert!((nn - 9.5).abs() < 1e-12);
    assert!((exact - 7.0).abs() < 1e-12);
    assert!((heap_oracle(&start, &configs) - exact).abs() < 1e-12);
    let one = along_q1(&[0.7]);
    assert_eq!(nearest_neighbor_order(&start, &one), exact_order(&start, &one).unwrap());
}

/// Random reachable flower targets in front of a parked base.
fn random_targets(arm: &ArmSpec, robot: &Pose2, n: usize, rng: &mut ChaCha8Rng) -> Vec<FlowerTarget> {
    let s = arm.shoulder(robot);
    (0..n as u32)
        .map(|id| {
            let (lateral, forward, up) = (
                rng.random_range(-0.35..0.35),
                rng.random_range(0.2..0.45),
                rng.random_range(-0.3..0.3),
            );
            let (c, sn) = (robot.theta.cos(), robot.theta.sin());
            FlowerTarget {
                flower_id: id,
                position: Point3::new(
                    s.x + forward * c - lateral * sn,
                    s.y + forward * sn + lateral * c,
                    s.z + up,
                ),
                sigma: 0.0,
            }
        })
        .collect()
}

#[test]
fn sequencing_matches_oracle_and_bounds_heuristic() {
    let arm = ArmSpec::default();
    let robot = Pose2::new(2.0, 1.0, FRAC_PI_2);
    let start = JointConfig::default();
    let params = IkParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 1.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let targets = random_targets(&arm, &robot, n, &mut rng);
        let exact = plan_sequence_exact(&arm, &robot, &targets, &start, &params).unwrap();
        let nn = plan_sequence_nn(&arm, &robot, &targets, &start, &params).unwrap();
        let oracle = heap_oracle(&start, &exact.configs);
        assert!((exact.cost - oracle).abs() < 1e-9, "{} vs {oracle}", exact.cost);
        assert!((sequence_cost(&start, &exact.configs, &exact.order) - exact.cost).abs() < 1e-9);
        let mut sorted = nn.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        assert!(nn.cost >= exact.cost - 1e-12);
        let ratio = nn.cost / exact.cost.max(1e-12);
        worst = worst.max(ratio);
        assert!(ratio <= 2.0, "ratio {ratio}");
    }
    println!("worst nn/exact ratio {worst:.3}");
    let too_many = random_targets(&arm, &robot, 10, &mut rng);
    assert!(matches!(
        plan_sequence_exact(&arm, &robot, &too_many, &start, &params),
        Err(ArmError::TooManyTargets { .. })
    ));
}

// --- Servo ---------------------------------------------------------------

fn noiseless(alpha: f64) -> ServoParams {
    ServoParams {
        alpha,
        sigma0: 0.0,
        sigma_endo: 0.0,
        ..ServoParams::default()
    }
}

#[test]
fn servo_full_step_converges_at_once() {
    let params = noiseless(1.0);
    let flower = Point3::new(0.3, 0.1, 0.6);
    let state = ServoState::new(Point3::new(0.0, 0.0, 0.6), flower, &params);
    let next = servo_step(&state, &flower, &params, &mut ChaCha8Rng::seed_from_u64(0));
    assert!(next.converged);
    assert_eq!(next.regime, ServoRegime::Endoscope);
}

#[test]
fn servo_half_steps_take_seven_iterations_from_forty_centimetres() {
    let params = noiseless(0.5);
    let flower = Point3::new(0.4, 0.0, 0.0);
    let mut state = ServoState::new(Point3::origin(), flower, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut d = 0.4;
    for step in 1..=7 {
        state = servo_step(&state, &flower, &params, &mut rng);
        d *= 0.5;
        assert!(((flower - state.tip).norm() - d).abs() < 1e-12);
        assert_eq!(state.converged, step == 7, "step {step}");
    }
}

#[test]
fn servo_switches_to_the_endoscope_inside_eighteen_centimetres() {
    let params = noiseless(0.5);
    let flower = Point3::new(0.20, 0.0, 0.0);
    let state = ServoState::new(Point3::origin(), flower, &params);
    assert_eq!(state.regime, ServoRegime::DepthCamera);
    let next = servo_step(&state, &flower, &params, &mut ChaCha8Rng::seed_from_u64(0));
    assert!((flower - next.tip).norm() < 0.18);
    assert_eq!(next.regime, ServoRegime::Endoscope);
}

#[test]
fn servo_converges_within_the_geometric_bound() {
    let params = ServoParams::default();
    assert!(params.sigma0 * ArmSpec::default().reach() < params.alpha * params.tolerance);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let trials = 1000;
    let mut ok = 0;
    for _ in 0..trials {
        let d0 = rng.random_range(0.05..0.7);
        let dir = nalgebra::Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let flower = Point3::new(0.5, 0.2, 0.6);
        let mut state = ServoState::new(flower - dir * d0, flower, &params);
        let bound = ((d0 / params.tolerance).ln() / (1.0 / (1.0 - params.alpha)).ln()).ceil() as usize + 5;
        for _ in 0..bound {
            state = servo_step(&state, &flower, &params, &mut rng);
            if state.converged {
                ok += 1;
                break;
            }
        }
    }
    assert!(ok as f64 >= 0.99 * trials as f64, "{ok}/{trials}");
}

// --- Pollination ---------------------------------------------------------

fn ready_flower() -> Flower {
    let mut f = Flower::new(
        7,
        Point3::new(1.0, 1.0, 0.6),
        GridCellRef::new(1, Side::Left, 0),
        0.0,
        100.0,
    );
    f.advance(1.0);
    f
}

#[test]
fn pollination_examples() {
    let params = PollinationParams::default();
    let mut effector = EndEffectorState::default();
    let mut f = ready_flower();
    assert!(pollinate(&mut effector, &mut f, 3, &params, 2.0).unwrap());
    assert_eq!(f.state(), FlowerState::Pollinated);
    assert!((f.pistil_coverage() - 0.9).abs() < 1e-12);
    assert_eq!(f.pollinated_at, Some(2.0));
    assert_eq!(effector.extensions, [0.0; 3]);

    let mut f = ready_flower();
    let mut effector = EndEffectorState::default();
    assert!(!pollinate(&mut effector, &mut f, 2, &params, 2.0).unwrap());
    assert_eq!(f.state(), FlowerState::Ready);
    assert!((effector.coverage_of(7) - 0.6).abs() < 1e-12);

    let mut wilted = ready_flower();
    wilted.advance(200.0);
    let before = wilted.pistil_coverage();
    assert_eq!(
        pollinate(&mut effector, &mut wilted, 3, &params, 200.0),
        Err(ArmError::NotReady {
            flower: 7,
            state: FlowerState::Wilted
        })
    );
    assert_eq!(wilted.pistil_coverage(), before);
}

proptest! {
    #[test]
    fn coverage_is_monotone_and_capped(
        batches in proptest::collection::vec((0u32..4, 0.0f64..0.7), 1..10),
    ) {
        let mut f = ready_flower();
        let mut effector = EndEffectorState::default();
        let mut last = 0.0;
        for (strokes, delta) in batches {
            let params = PollinationParams { stroke_coverage: delta, ..PollinationParams::default() };
            let _ = pollinate(&mut effector, &mut f, strokes, &params, 1.0);
            let c = f.pistil_coverage();
            prop_assert!(c >= last && c <= 1.0);
            last = c;
        }
    }
}
