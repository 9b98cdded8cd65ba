use bramble::geometry::wrap_angle;
use bramble::mission::*;
use bramble::world::{FlowerSpec, FlowerState, GridCellRef, PlantRow, Side, World, WorldConfig};

use MissionPhase::*;

fn three_rows(seed: u64) -> WorldConfig {
    let mut cfg = WorldConfig::empty_room(6.0, 6.4, seed);
    cfg.rows = (0..3)
        .map(|i| PlantRow::along_x(i + 1, 1.2, 1.6 + 1.6 * i as f64))
        .collect();
    cfg
}

/// Three rows, 30 flowers. Every fifth flower stays a bud all session;
/// the rest open at staggered times during inspection.
fn staggered(seed: u64) -> WorldConfig {
    let mut cfg = three_rows(seed);
    let mut id = 0;
    for row in 1..=3 {
        for side in [Side::Left, Side::Right] {
            for k in 0..5 {
                id += 1;
                cfg.flowers.push(FlowerSpec {
                    id,
                    row,
                    side,
                    arclength: 0.344 + 0.688 * k as f64 + 0.05 * (id % 3) as f64,
                    height: 0.35 + 0.1 * (id % 6) as f64,
                    depth: 0.0,
                    ready_time: if id % 5 == 0 { 1e5 } else { (id * 7 % 60) as f64 },
                    wilt_time: 1e6,
                });
            }
        }
    }
    cfg
}

/// One row with a single flower in cell 2 of its left face.
fn one_flower(ready_time: f64, wilt_time: f64) -> WorldConfig {
    let mut cfg = WorldConfig::empty_room(6.0, 4.0, 3);
    cfg.rows = vec![PlantRow::along_x(1, 1.2, 2.0)];
    cfg.flowers = vec![FlowerSpec {
        id: 1,
        row: 1,
        side: Side::Left,
        arclength: 1.72,
        height: 0.55,
        depth: 0.0,
        ready_time,
        wilt_time,
    }];
    cfg
}

fn run(cfg: WorldConfig, seed: u64) -> (Mission, World, RunOutcome) {
    let mut world = World::build(cfg).unwrap();
    let mut mission = Mission::new(&world, MissionConfig::default(), seed).unwrap();
    let outcome = mission.run(&mut world).unwrap();
    (mission, world, outcome)
}

#[test]
fn empty_world_inspects_then_finishes() {
    let (mission, world, outcome) = run(three_rows(1), 1);
    assert_eq!(outcome, RunOutcome::Done);
    assert_eq!(mission.phases(), vec![Init, Inspect, SelectCell, Done]);
    let graph = mission.roadmap().unwrap();
    assert_eq!(graph.required.len(), 6);
    let covered = mission.inspection_route().unwrap().covered();
    assert!(graph.required_edges().iter().all(|e| covered.contains(e)));
    let s = mission.summary(&world);
    assert_eq!((s.pollinated, s.attempted, s.ready_total, s.rate), (0, 0, 0, 1.0));
    assert_eq!(s.collisions, 0);
}

#[test]
fn single_ready_flower_gets_one_drive_and_one_attempt() {
    let (mission, world, outcome) = run(one_flower(0.0, 1e6), 2);
    assert_eq!(outcome, RunOutcome::Done);
    assert_eq!(
        mission.phases(),
        vec![
            Init,
            Inspect,
            SelectCell,
            Drive,
            WorkspaceSurvey,
            PollinateSequence,
            SelectCell,
            Done
        ]
    );
    let cell = GridCellRef::new(1, Side::Left, 2);
    let db = mission.database();
    assert_eq!(db.attempts.len(), 1);
    assert_eq!(db.attempts[0].cell, cell);
    assert_eq!(db.attempts[0].outcome, AttemptOutcome::Pollinated);
    assert_eq!(world.flower(1).unwrap().state(), FlowerState::Pollinated);

    // Parked where the drive ended: within tolerance plus estimate error.
    let parking = world.parking_pose(&cell).unwrap();
    let survey_start = mission
        .transitions()
        .iter()
        .find(|(_, p)| *p == WorkspaceSurvey)
        .unwrap()
        .0;
    let parked = mission
        .trajectory()
        .iter()
        .find(|s| s.t >= survey_start - 1e-9)
        .unwrap();
    assert!(
        (parked.truth.position() - parking.position()).norm() < 0.08,
        "{parked:?}"
    );
    assert!(wrap_angle(parked.truth.theta - parking.theta).abs() < 8f64.to_radians());
}

#[test]
fn cell_that_wilts_before_arrival_is_left_without_attempts() {
    // A first run fixes when inspection ends; the runs agree up to the wilt.
    let (probe, _, _) = run(one_flower(0.0, 1e6), 2);
    let inspected = probe.transitions().iter().find(|(_, p)| *p == SelectCell).unwrap().0;
    let (mission, world, outcome) = run(one_flower(0.0, inspected + 1.0), 2);
    assert_eq!(outcome, RunOutcome::Done);
    assert_eq!(
        mission.phases(),
        vec![Init, Inspect, SelectCell, Drive, WorkspaceSurvey, SelectCell, Done]
    );
    assert!(mission.database().attempts.is_empty());
    assert_eq!(world.flower(1).unwrap().state(), FlowerState::Wilted);
    let s = mission.summary(&world);
    assert_eq!((s.pollinated, s.ready_total), (0, 1));
}

#[test]
fn staggered_three_row_session() {
    let (mission, world, outcome) = run(staggered(7), 7);
    assert_eq!(outcome, RunOutcome::Done);
    assert!(is_valid_trace(&mission.phases()));
    let s = mission.summary(&world);
    assert_eq!(s.ready_total, 24);
    assert!(s.rate >= 0.95, "{s:?}");
    assert_eq!(s.collisions, 0);
    assert!(s.pose_rmse_m < 0.05, "{s:?}");

    let db = mission.database();
    // No double pollination, and every pollination has its attempt.
    for (&id, &t) in &db.pollinated {
        let attempts: Vec<_> = db.attempts_on(id).collect();
        let hit = attempts
            .iter()
            .position(|a| a.outcome == AttemptOutcome::Pollinated)
            .unwrap();
        assert_eq!(hit, attempts.len() - 1, "flower {id} attempted after pollination");
        assert_eq!(attempts[hit].time, t);
    }
    let times: Vec<f64> = db.attempts.iter().map(|a| a.time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));

    let m = mission.metrics();
    assert!(m.pollinated <= m.attempted);
    let total: f64 = m.phase_durations.values().sum();
    assert!((total - m.sim_time_s).abs() < 1e-6, "{total} vs {}", m.sim_time_s);
}

#[test]
fn replay_is_bit_exact() {
    let (a, wa, _) = run(staggered(11), 11);
    let (b, wb, _) = run(staggered(11), 11);
    let json = |m: &Mission, w: &World| {
        serde_json::to_string(&(m.trajectory(), m.database(), m.metrics(), m.summary(w))).unwrap()
    };
    assert_eq!(json(&a, &wa), json(&b, &wb));
    assert_eq!(a.summary(&wa).csv_row(), b.summary(&wb).csv_row());
}

#[test]
fn distance_metric_matches_trajectory() {
    let cfg = one_flower(0.0, 1e6);
    let start = cfg.robot.start.position();
    let (mission, _, _) = run(cfg, 4);
    let mut prev = start;
    let mut total = 0.0;
    for s in mission.trajectory() {
        total += (s.truth.position() - prev).norm();
        prev = s.truth.position();
    }
    assert!((total - mission.metrics().distance_m).abs() < 1e-6);
}

#[test]
fn phase_automaton() {
    assert!(is_valid_trace(&[Init, Inspect, SelectCell, Done]));
    assert!(is_valid_trace(&[
        Init,
        Inspect,
        SelectCell,
        Drive,
        WorkspaceSurvey,
        PollinateSequence,
        SelectCell,
        Drive,
        SelectCell,
        Done
    ]));
    assert!(!is_valid_trace(&[Inspect, SelectCell, Done]));
    assert!(!is_valid_trace(&[Init, SelectCell]));
    assert!(!is_valid_trace(&[Init, Inspect, SelectCell, WorkspaceSurvey]));
    assert!(!is_valid_trace(&[Init, Inspect, SelectCell, Drive, PollinateSequence]));
    assert!(!Done.can_transition_to(Init));
}

#[test]
fn summary_conventions() {
    assert_eq!(pollination_rate(0, 0), 1.0);
    assert_eq!(pollination_rate(9, 10), 0.9);
    assert_eq!(
        Summary::CSV_HEADER,
        "distance_m,sim_time_s,pollinated,attempted,ready_total,rate,collisions,pose_rmse_m"
    );
}

#[test]
fn bad_inputs_are_rejected() {
    let world = World::build(one_flower(0.0, 1e6)).unwrap();
    let mut cfg = MissionConfig::default();
    cfg.mission.dt = 0.0;
    assert!(matches!(
        Mission::new(&world, cfg, 0),
        Err(MissionError::InvalidConfig(_))
    ));
    let mut cfg = MissionConfig::default();
    cfg.planning.cost.c_f = -1.0;
    assert!(matches!(
        Mission::new(&world, cfg, 0),
        Err(MissionError::InvalidConfig(_))
    ));

    let mut world = world;
    let mut mission = Mission::new(&world, MissionConfig::default(), 0).unwrap();
    assert!(mission.tick(&mut world, 0.0).is_err());
    assert_eq!(world.time(), 0.0);
}

#[test]
fn max_time_stops_the_run() {
    let mut world = World::build(staggered(3)).unwrap();
    let mut cfg = MissionConfig::default();
    cfg.mission.max_time = 30.0;
    let mut mission = Mission::new(&world, cfg, 3).unwrap();
    assert_eq!(mission.run(&mut world).unwrap(), RunOutcome::TimedOut);
    assert!((world.time() - 30.0).abs() < 1e-6);
    assert_eq!(mission.phase(), Inspect);
}
