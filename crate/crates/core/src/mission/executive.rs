//! The session state machine.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{
    exact_order, ik_point, nearest_neighbor_order, pollinate, servo_step, survey_workspace, tip_position,
    EndEffectorState, FlowerTarget, JointConfig, ServoState, MAX_EXACT_TARGETS,
};
use crate::geometry::{wrap_angle, Point2, Pose2};
use crate::planning::{
    build_voronoi, dijkstra_path, next_pollination_cell, plan_inspection, CandidateCell, DwaPlanner, InspectionRoute,
    PlanningError, VelocityCommand, VoronoiGraph,
};
use crate::slam::{inflate, room_grid, Cell, OccupancyGrid, PoseGraphEstimator};
use crate::vision::bearing_to_cell;
use crate::world::{
    scan_to_points, simulate_cluster_detections, simulate_odometry, simulate_scan, GridCellRef, RobotState, World,
};

use super::config::MissionConfig;
use super::database::{AttemptOutcome, FlowerAttempt, FlowerDatabase, SkippedCell};
use super::metrics::{summarize, Metrics, Summary};
use super::MissionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MissionPhase {
    Init,
    Inspect,
    SelectCell,
    Drive,
    WorkspaceSurvey,
    PollinateSequence,
    Done,
}

impl MissionPhase {
    /// Legal phase changes. Besides the main loop, a failed drive and an
    /// empty survey both fall back to cell selection.
    pub fn can_transition_to(self, next: MissionPhase) -> bool {
        use MissionPhase::*;
        matches!(
            (self, next),
            (Init, Inspect)
                | (Inspect, SelectCell)
                | (SelectCell, Drive)
                | (SelectCell, Done)
                | (Drive, WorkspaceSurvey)
                | (Drive, SelectCell)
                | (WorkspaceSurvey, PollinateSequence)
                | (WorkspaceSurvey, SelectCell)
                | (PollinateSequence, SelectCell)
        )
    }
}

/// True when `phases` starts at `Init` and only takes legal steps.
pub fn is_valid_trace(phases: &[MissionPhase]) -> bool {
    phases.first().is_none_or(|p| *p == MissionPhase::Init) && phases.windows(2).all(|w| w[0].can_transition_to(w[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub truth: Pose2,
    pub estimate: Pose2,
    pub phase: MissionPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    Done,
    /// `max_time` elapsed first.
    TimedOut,
}

/// Arm pose between flowers: folded up and back over the base.
pub const STOWED: JointConfig = JointConfig {
    yaw: 0.0,
    q1: 1.2,
    q2: -2.4,
    q3: 1.2,
};

#[derive(Debug, Clone)]
struct PathFollow {
    path: Vec<Point2>,
    progress: usize,
    /// Parking pose at the end of a drive; `None` while inspecting.
    goal: Option<Pose2>,
    best: f64,
    last_progress: f64,
}

#[derive(Debug, Clone)]
enum ArmStage {
    Move { remaining: f64, standoff: JointConfig },
    Servo { state: ServoState, steps: usize },
    Brush { strokes: u32, remaining: f64 },
}

#[derive(Debug, Clone)]
struct ArmRun {
    queue: VecDeque<(FlowerTarget, JointConfig)>,
    stage: Option<ArmStage>,
    pollinated: u32,
}

#[derive(Debug, Clone)]
enum Activity {
    Idle,
    Follow(PathFollow),
    Approach {
        target: Pose2,
        settled: bool,
        last_progress: f64,
        best: f64,
    },
    Survey {
        remaining: f64,
    },
    Arm(ArmRun),
}

#[derive(Debug, Clone)]
struct Streams {
    odometry: ChaCha8Rng,
    scan: ChaCha8Rng,
    camera: ChaCha8Rng,
    survey: ChaCha8Rng,
    servo: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            odometry: stream(1),
            scan: stream(2),
            camera: stream(3),
            survey: stream(4),
            servo: stream(5),
        }
    }
}

/// Maps built once the start pose is known.
#[derive(Debug, Clone)]
struct Maps {
    grid: OccupancyGrid,
    inflated: OccupancyGrid,
    /// `inflated` plus the path margin.
    guarded: OccupancyGrid,
    roadmap: VoronoiGraph,
    route: InspectionRoute,
    dwa: DwaPlanner,
}

#[derive(Debug, Clone)]
pub struct Mission {
    config: MissionConfig,
    phase: MissionPhase,
    transitions: Vec<(f64, MissionPhase)>,
    estimator: PoseGraphEstimator,
    maps: Option<Maps>,
    db: FlowerDatabase,
    metrics: Metrics,
    trajectory: Vec<TrajectorySample>,
    rng: Streams,
    activity: Activity,
    last_cmd: VelocityCommand,
    next_frame: f64,
    cell: Option<GridCellRef>,
    failures: u32,
    arm_q: JointConfig,
    effector: EndEffectorState,
}

impl Mission {
    pub fn new(world: &World, config: MissionConfig, seed: u64) -> Result<Self, MissionError> {
        config.validate()?;
        let prior = world.prior_map(config.slam.prior_spacing);
        let estimator = PoseGraphEstimator::new(&prior, config.slam);
        Ok(Self {
            config,
            phase: MissionPhase::Init,
            transitions: vec![(world.time(), MissionPhase::Init)],
            estimator,
            maps: None,
            db: FlowerDatabase::default(),
            metrics: Metrics::default(),
            trajectory: Vec::new(),
            rng: Streams::new(seed),
            activity: Activity::Idle,
            last_cmd: VelocityCommand::default(),
            next_frame: 0.0,
            cell: None,
            failures: 0,
            arm_q: STOWED,
            effector: EndEffectorState::default(),
        })
    }

    pub fn config(&self) -> &MissionConfig {
        &self.config
    }

    pub fn phase(&self) -> MissionPhase {
        self.phase
    }

    /// Phase changes with the simulation time they happened at.
    pub fn transitions(&self) -> &[(f64, MissionPhase)] {
        &self.transitions
    }

    pub fn phases(&self) -> Vec<MissionPhase> {
        self.transitions.iter().map(|(_, p)| *p).collect()
    }

    pub fn trajectory(&self) -> &[TrajectorySample] {
        &self.trajectory
    }

    pub fn database(&self) -> &FlowerDatabase {
        &self.db
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn estimator(&self) -> &PoseGraphEstimator {
        &self.estimator
    }

    /// Occupancy grid from the prior map, once initialized.
    pub fn grid(&self) -> Option<&OccupancyGrid> {
        self.maps.as_ref().map(|m| &m.grid)
    }

    /// Inflated grid the drive planners work on.
    pub fn drive_grid(&self) -> Option<&OccupancyGrid> {
        self.maps.as_ref().map(|m| &m.inflated)
    }

    pub fn roadmap(&self) -> Option<&VoronoiGraph> {
        self.maps.as_ref().map(|m| &m.roadmap)
    }

    pub fn inspection_route(&self) -> Option<&InspectionRoute> {
        self.maps.as_ref().map(|m| &m.route)
    }

    pub fn summary(&self, world: &World) -> Summary {
        summarize(&self.metrics, &self.db, world)
    }

    /// Ticks until `Done` or until `max_time` of simulated time has passed.
    pub fn run(&mut self, world: &mut World) -> Result<RunOutcome, MissionError> {
        let dt = self.config.mission.dt;
        while self.phase != MissionPhase::Done {
            if world.time() + 1e-9 >= self.config.mission.max_time {
                return Ok(RunOutcome::TimedOut);
            }
            self.tick(world, dt)?;
        }
        Ok(RunOutcome::Done)
    }

    /// One control period: command the base, advance the world, update the
    /// estimate and the maps, then run the current phase's logic.
    pub fn tick(&mut self, world: &mut World, dt: f64) -> Result<MissionPhase, MissionError> {
        if !(dt > 0.0) {
            return Err(MissionError::InvalidConfig(format!(
                "tick dt must be positive, got {dt}"
            )));
        }
        if self.phase == MissionPhase::Done {
            return Ok(self.phase);
        }
        let phase = self.phase;
        let cmd = match phase {
            MissionPhase::Inspect | MissionPhase::Drive => self.drive_command(world.time()),
            _ => VelocityCommand::default(),
        };
        let prev = world.robot().pose;
        world.step(cmd.v, cmd.omega, dt)?;
        let now = world.robot().pose;
        self.last_cmd = cmd;

        // Encoders read nothing while the wheels are still.
        let moving = cmd.v != 0.0 || cmd.omega != 0.0;
        if self.estimator.is_initialized() && moving {
            let odom = simulate_odometry(&prev, &now, &world.config().odom_noise, &mut self.rng.odometry);
            self.estimator.predict(&odom);
            if self.estimator.keyframe_due() {
                let spec = world.config().scan_spec;
                let ranges = simulate_scan(world, &now, &spec, &mut self.rng.scan);
                self.estimator.add_keyframe(&scan_to_points(&spec, &ranges))?;
            }
        }

        let t = world.time();
        let estimate = if self.estimator.is_initialized() {
            self.estimator.pose()
        } else {
            now
        };
        self.metrics.distance_m += (now.position() - prev.position()).norm();
        self.metrics.sim_time_s = t;
        self.metrics.collisions = world.collisions();
        *self.metrics.phase_durations.entry(phase).or_insert(0.0) += dt;
        if self.estimator.is_initialized() {
            self.metrics.pose_sq_error_sum += (estimate.position() - now.position()).norm_squared();
            self.metrics.pose_samples += 1;
        }
        self.trajectory.push(TrajectorySample {
            t,
            truth: now,
            estimate,
            phase,
        });

        match phase {
            MissionPhase::Init => self.init_step(world)?,
            MissionPhase::Inspect => self.inspect_step(world)?,
            MissionPhase::SelectCell => self.select_step(world)?,
            MissionPhase::Drive => self.drive_step(world)?,
            MissionPhase::WorkspaceSurvey => self.survey_step(world, dt)?,
            MissionPhase::PollinateSequence => self.arm_step(world, dt)?,
            MissionPhase::Done => {}
        }
        self.metrics.pollinated = self.db.pollinated.len();
        self.metrics.attempted = self.db.attempts.len();
        Ok(self.phase)
    }

    fn enter(&mut self, next: MissionPhase, time: f64) {
        debug_assert!(self.phase.can_transition_to(next), "{:?} -> {next:?}", self.phase);
        self.phase = next;
        self.transitions.push((time, next));
    }

    // --- Init ------------------------------------------------------------

    fn init_step(&mut self, world: &World) -> Result<(), MissionError> {
        let spec = world.config().scan_spec;
        let ranges = simulate_scan(world, &world.robot().pose, &spec, &mut self.rng.scan);
        match self.estimator.initialize_from_scan(&scan_to_points(&spec, &ranges)) {
            Ok(pose) => {
                self.failures = 0;
                self.build_maps(world, &pose)?;
                self.db.cells.begin_pass();
                self.next_frame = world.time();
                self.enter(MissionPhase::Inspect, world.time());
                self.start_inspection(world)
            }
            Err(e) if self.failures == 0 => {
                let _ = e;
                self.failures = 1;
                Ok(())
            }
            Err(e) => Err(MissionError::Localization(e)),
        }
    }

    fn build_maps(&mut self, world: &World, start: &Pose2) -> Result<(), MissionError> {
        let cfg = world.config();
        let p = &self.config.planning;
        let prior = world.prior_map(self.config.slam.prior_spacing);
        let grid = room_grid(
            &prior,
            cfg.room_width,
            cfg.room_length,
            p.grid_resolution,
            &start.position(),
        )?;
        let inflated = inflate(&grid, cfg.robot.radius + p.inflation_margin)?;
        let guarded = inflate(&grid, cfg.robot.radius + p.inflation_margin + p.path_margin)?;
        let roadmap = build_voronoi(&grid, world.rows(), &p.voronoi)?;
        let route = match roadmap.nearest_node(&start.position()) {
            Some(node) => plan_inspection(&roadmap, node)?,
            None => InspectionRoute {
                nodes: Vec::new(),
                steps: Vec::new(),
                length: 0.0,
            },
        };
        let dwa = DwaPlanner::new(inflated.clone(), p.dwa)?;
        self.maps = Some(Maps {
            grid,
            inflated,
            guarded,
            roadmap,
            route,
            dwa,
        });
        Ok(())
    }

    fn maps(&self) -> &Maps {
        self.maps.as_ref().expect("maps are built when Init completes")
    }

    // --- Inspect ---------------------------------------------------------

    fn start_inspection(&mut self, world: &World) -> Result<(), MissionError> {
        let maps = self.maps();
        if maps.route.steps.is_empty() {
            self.activity = Activity::Idle;
            self.enter(MissionPhase::SelectCell, world.time());
            return Ok(());
        }
        let route = resample(&maps.route.polyline(&maps.roadmap), 0.1);
        let est = self.estimator.pose();
        match self.grid_path(&est.position(), &route[0]) {
            Ok(mut path) => {
                path.extend(route.into_iter().skip(1));
                self.activity = Activity::Follow(PathFollow::new(path, None, world.time()));
            }
            Err(_) => {
                self.activity = Activity::Follow(PathFollow::new(route, None, world.time()));
            }
        }
        Ok(())
    }

    fn inspect_step(&mut self, world: &World) -> Result<(), MissionError> {
        let t = world.time();
        if t + 1e-9 >= self.next_frame {
            self.camera_frame(world)?;
            self.next_frame += self.config.vision.frame_period;
        }
        let est = self.estimator.pose();
        let Activity::Follow(follow) = &self.activity else {
            return Ok(());
        };
        if follow.finished(&est.position()) {
            self.activity = Activity::Idle;
            self.enter(MissionPhase::SelectCell, t);
        } else if t - follow.last_progress > self.config.planning.stuck_timeout {
            if self.failures == 0 {
                self.failures = 1;
                let rest: Vec<Point2> = follow.path[follow.progress..].to_vec();
                let path = match self.grid_path(&est.position(), &rest[rest.len().min(10) - 1]) {
                    Ok(mut p) => {
                        p.extend(rest.into_iter().skip(10));
                        p
                    }
                    Err(_) => rest,
                };
                self.activity = Activity::Follow(PathFollow::new(path, None, t));
            } else {
                self.failures = 0;
                self.activity = Activity::Idle;
                self.enter(MissionPhase::SelectCell, t);
            }
        }
        Ok(())
    }

    fn camera_frame(&mut self, world: &World) -> Result<(), MissionError> {
        let est = self.estimator.pose();
        let events = simulate_cluster_detections(
            world,
            &world.robot().pose,
            &world.config().camera_spec,
            &mut self.rng.camera,
        );
        let mut counts: BTreeMap<GridCellRef, u32> = BTreeMap::new();
        for e in events {
            if let Some(cell) = bearing_to_cell(&est, &e.bearing, world.rows(), self.config.vision.max_range)? {
                *counts.entry(cell).or_insert(0) += 1;
            }
        }
        for (cell, n) in counts {
            self.db.cells.update(cell, n, world.time())?;
        }
        Ok(())
    }

    // --- SelectCell and Drive --------------------------------------------

    fn select_step(&mut self, world: &World) -> Result<(), MissionError> {
        let t = world.time();
        let candidates: Vec<CandidateCell> = self
            .db
            .cells
            .iter()
            .filter(|(_, rec)| rec.count > 0)
            .filter_map(|(cell, rec)| {
                world.parking_pose(cell).ok().map(|parking| CandidateCell {
                    cell: *cell,
                    parking,
                    n_f: rec.count,
                })
            })
            .collect();
        let est = self.estimator.pose();
        match next_pollination_cell(&est, &candidates, &self.config.planning.cost) {
            Ok(choice) => match self.grid_path(&est.position(), &choice.parking.position()) {
                Ok(path) => {
                    self.failures = 0;
                    self.cell = Some(choice.cell);
                    self.activity = Activity::Follow(PathFollow::new(path, Some(choice.parking), t));
                    self.enter(MissionPhase::Drive, t);
                }
                Err(e) if self.failures == 0 => {
                    let _ = e;
                    self.failures = 1;
                }
                Err(e) => {
                    self.failures = 0;
                    self.skip_cell(choice.cell, t, e.to_string());
                }
            },
            Err(PlanningError::NoCandidates) => {
                self.activity = Activity::Idle;
                self.enter(MissionPhase::Done, t);
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    fn skip_cell(&mut self, cell: GridCellRef, time: f64, reason: String) {
        self.db.cells.mark_visited(&cell, 0);
        self.db.skipped.push(SkippedCell { cell, time, reason });
    }

    fn drive_step(&mut self, world: &World) -> Result<(), MissionError> {
        let t = world.time();
        let est = self.estimator.pose();
        let p = self.config.planning;
        match &mut self.activity {
            Activity::Follow(follow) => {
                let goal = follow.goal.expect("drives have a parking goal");
                if (goal.position() - est.position()).norm() < p.approach_radius {
                    self.activity = Activity::Approach {
                        target: goal,
                        settled: false,
                        last_progress: t,
                        best: f64::INFINITY,
                    };
                } else if t - follow.last_progress > p.stuck_timeout {
                    self.drive_failed(t, "no progress along the path".into())?;
                }
            }
            Activity::Approach {
                target, last_progress, ..
            } => {
                let dp = (target.position() - est.position()).norm();
                let dh = wrap_angle(target.theta - est.theta).abs();
                if dp < p.arrival_position && dh < p.arrival_heading {
                    self.activity = Activity::Survey {
                        remaining: self.config.arm.survey_duration,
                    };
                    self.enter(MissionPhase::WorkspaceSurvey, t);
                } else if t - *last_progress > p.stuck_timeout {
                    self.drive_failed(t, "final approach did not settle".into())?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// First failure replans from the current estimate; the second skips
    /// the cell.
    fn drive_failed(&mut self, t: f64, reason: String) -> Result<(), MissionError> {
        let cell = self.cell.expect("driving toward a cell");
        if self.failures == 0 {
            self.failures = 1;
            let goal = match &self.activity {
                Activity::Follow(f) => f.goal.expect("drives have a parking goal"),
                Activity::Approach { target, .. } => *target,
                _ => unreachable!("drive activity"),
            };
            let est = self.estimator.pose();
            if let Ok(path) = self.grid_path(&est.position(), &goal.position()) {
                self.activity = Activity::Follow(PathFollow::new(path, Some(goal), t));
                return Ok(());
            }
        }
        self.failures = 0;
        self.activity = Activity::Idle;
        self.skip_cell(cell, t, reason);
        self.enter(MissionPhase::SelectCell, t);
        Ok(())
    }

    fn drive_command(&mut self, time: f64) -> VelocityCommand {
        let est = self.estimator.pose();
        let p = self.config.planning;
        let state = RobotState {
            pose: est,
            v: self.last_cmd.v,
            omega: self.last_cmd.omega,
            time,
        };
        match &mut self.activity {
            Activity::Follow(follow) => {
                let maps = self.maps.as_ref().expect("maps are built when Init completes");
                let carrot = follow.advance(&est.position(), p.lookahead, time, &maps.inflated);
                maps.dwa.step(&state, &carrot)
            }
            Activity::Approach {
                target,
                settled,
                last_progress,
                best,
            } => {
                let err =
                    (target.position() - est.position()).norm() + 0.2 * wrap_angle(target.theta - est.theta).abs();
                if err < *best - 0.005 {
                    *best = err;
                    *last_progress = time;
                }
                approach_command(&est, target, settled, &p, &self.config.planning.dwa)
            }
            _ => VelocityCommand::default(),
        }
    }

    /// Cell path between two points as cell centers, on the guarded grid if
    /// possible and the inflated one otherwise. Endpoints inside the blocked
    /// band snap to the nearest free cell.
    fn grid_path(&self, from: &Point2, to: &Point2) -> Result<Vec<Point2>, PlanningError> {
        let maps = self.maps();
        let on = |grid: &OccupancyGrid| -> Result<Vec<Point2>, PlanningError> {
            let snap = |p: &Point2| -> Result<Cell, PlanningError> {
                let c = grid.cell_of(p).ok_or(PlanningError::NoPath)?;
                nearest_free(grid, c, 12).ok_or(PlanningError::BlockedEndpoint(c))
            };
            let cells = dijkstra_path(grid, snap(from)?, snap(to)?)?;
            let mut pts: Vec<Point2> = cells.into_iter().map(|c| grid.center(c)).collect();
            pts.push(*to);
            Ok(pts)
        };
        on(&maps.guarded).or_else(|_| on(&maps.inflated))
    }

    // --- Arm -------------------------------------------------------------

    fn survey_step(&mut self, world: &World, dt: f64) -> Result<(), MissionError> {
        let t = world.time();
        let Activity::Survey { remaining } = &mut self.activity else {
            return Ok(());
        };
        *remaining -= dt;
        if *remaining > 1e-9 {
            return Ok(());
        }
        let cell = self.cell.expect("surveying a cell");
        let arm = self.config.arm;
        let base = world.robot().pose;
        let targets: Vec<FlowerTarget> =
            survey_workspace(world, &base, &cell, &arm.spec, arm.sigma_far, &mut self.rng.survey)
                .into_iter()
                .filter(|t| !self.db.is_pollinated(t.flower_id))
                .collect();
        let mut reachable = Vec::new();
        for target in targets {
            match ik_point(&arm.spec, &base, &target.position, &self.arm_q, &arm.ik) {
                Ok(q) => reachable.push((target, q)),
                Err(_) => self.db.unreachable.push(target.flower_id),
            }
        }
        if reachable.is_empty() {
            self.db.cells.mark_visited(&cell, 0);
            self.activity = Activity::Idle;
            self.enter(MissionPhase::SelectCell, t);
            return Ok(());
        }
        let configs: Vec<JointConfig> = reachable.iter().map(|(_, q)| *q).collect();
        let order = if configs.len() <= MAX_EXACT_TARGETS {
            exact_order(&self.arm_q, &configs)?.0
        } else {
            nearest_neighbor_order(&self.arm_q, &configs).0
        };
        let queue = order.into_iter().map(|i| reachable[i]).collect();
        self.activity = Activity::Arm(ArmRun {
            queue,
            stage: None,
            pollinated: 0,
        });
        self.enter(MissionPhase::PollinateSequence, t);
        Ok(())
    }

    fn arm_step(&mut self, world: &mut World, dt: f64) -> Result<(), MissionError> {
        let t = world.time();
        let arm = self.config.arm;
        let base = world.robot().pose;
        let cell = self.cell.expect("pollinating a cell");
        let Activity::Arm(run) = &mut self.activity else {
            return Ok(());
        };
        let Some(&(target, q_target)) = run.queue.front() else {
            let pollinated = run.pollinated;
            self.db.cells.mark_visited(&cell, pollinated);
            self.activity = Activity::Idle;
            self.arm_q = STOWED;
            self.enter(MissionPhase::SelectCell, t);
            return Ok(());
        };
        let mut outcome = None;
        let stage = match run.stage.take() {
            None => {
                // Stop short of the surveyed position so the servo closes the gap.
                let s = arm.spec.shoulder(&base);
                let back = (target.position - s).normalize() * arm.standoff;
                let standoff =
                    ik_point(&arm.spec, &base, &(target.position - back), &q_target, &arm.ik).unwrap_or(q_target);
                let remaining = self.arm_q.distance(&standoff) / arm.joint_speed;
                ArmStage::Move { remaining, standoff }
            }
            Some(ArmStage::Move { remaining, standoff }) => {
                let remaining = remaining - dt;
                if remaining > 1e-9 {
                    ArmStage::Move { remaining, standoff }
                } else {
                    self.arm_q = standoff;
                    let tip = tip_position(&arm.spec, &base, &standoff);
                    ArmStage::Servo {
                        state: ServoState::new(tip, target.position, &arm.servo),
                        steps: 0,
                    }
                }
            }
            Some(ArmStage::Servo { state, steps }) => {
                let truth = world.flower(target.flower_id).expect("surveyed flower exists").position;
                let next = servo_step(&state, &truth, &arm.servo, &mut self.rng.servo);
                if next.converged {
                    self.arm_q = q_target;
                    ArmStage::Brush {
                        strokes: 0,
                        remaining: arm.stroke_duration,
                    }
                } else if steps + 1 >= arm.max_servo_steps {
                    outcome = Some(AttemptOutcome::ServoFailed);
                    ArmStage::Servo {
                        state: next,
                        steps: steps + 1,
                    }
                } else {
                    ArmStage::Servo {
                        state: next,
                        steps: steps + 1,
                    }
                }
            }
            Some(ArmStage::Brush { strokes, remaining }) => {
                let remaining = remaining - dt;
                if remaining > 1e-9 {
                    ArmStage::Brush { strokes, remaining }
                } else {
                    let flower = world.flower_mut(target.flower_id).expect("surveyed flower exists");
                    match pollinate(&mut self.effector, flower, 1, &arm.pollination, t) {
                        Ok(true) => outcome = Some(AttemptOutcome::Pollinated),
                        Ok(false) if strokes + 1 >= arm.pollination.strokes => {
                            outcome = Some(AttemptOutcome::Insufficient)
                        }
                        Ok(false) => {}
                        Err(_) => outcome = Some(AttemptOutcome::NotReady),
                    }
                    ArmStage::Brush {
                        strokes: strokes + 1,
                        remaining: arm.stroke_duration,
                    }
                }
            }
        };
        let Activity::Arm(run) = &mut self.activity else {
            unreachable!("arm activity");
        };
        match outcome {
            Some(outcome) => {
                if outcome == AttemptOutcome::Pollinated {
                    run.pollinated += 1;
                }
                run.queue.pop_front();
                run.stage = None;
                self.db.record(FlowerAttempt {
                    flower_id: target.flower_id,
                    cell,
                    time: t,
                    outcome,
                });
            }
            None => run.stage = Some(stage),
        }
        Ok(())
    }
}

impl PathFollow {
    fn new(path: Vec<Point2>, goal: Option<Pose2>, time: f64) -> Self {
        Self {
            path,
            progress: 0,
            goal,
            best: f64::INFINITY,
            last_progress: time,
        }
    }

    /// Moves the progress index past points already reached and returns the
    /// lookahead point: the farthest path point within `lookahead` that is in
    /// line of sight, so the carrot never sits around a corner.
    fn advance(&mut self, at: &Point2, lookahead: f64, time: f64, grid: &OccupancyGrid) -> Point2 {
        const REACHED: f64 = 0.3;
        let last = self.path.len() - 1;
        while self.progress < last && (self.path[self.progress] - at).norm() < REACHED {
            self.progress += 1;
        }
        let remaining = (last - self.progress) as f64 + (self.path[self.progress] - at).norm();
        if remaining < self.best - 0.05 {
            self.best = remaining;
            self.last_progress = time;
        }
        let mut j = self.progress;
        while j < last && (self.path[j + 1] - at).norm() < lookahead && visible(grid, at, &self.path[j + 1]) {
            j += 1;
        }
        self.path[j]
    }

    fn finished(&self, at: &Point2) -> bool {
        let last = self.path.len() - 1;
        self.progress == last && (self.path[last] - at).norm() < 0.15
    }
}

/// Final approach to a parking pose: turn toward it, drive in, then turn to
/// the parking heading.
fn approach_command(
    est: &Pose2,
    target: &Pose2,
    settled: &mut bool,
    p: &super::config::PlanningParams,
    dwa: &crate::planning::DwaParams,
) -> VelocityCommand {
    let d = target.position() - est.position();
    let dist = d.norm();
    if *settled && dist > p.arrival_position {
        *settled = false;
    }
    if !*settled && dist < 0.6 * p.arrival_position {
        *settled = true;
    }
    let clamp = |w: f64, max: f64| w.clamp(-max, max);
    if !*settled {
        let bearing = wrap_angle(d.y.atan2(d.x) - est.theta);
        if bearing.abs() > 0.3 {
            VelocityCommand {
                v: 0.0,
                omega: clamp(1.5 * bearing, dwa.omega_max),
            }
        } else {
            VelocityCommand {
                v: (0.8 * dist).min(0.25) * bearing.cos(),
                omega: clamp(2.0 * bearing, dwa.omega_max),
            }
        }
    } else {
        let err = wrap_angle(target.theta - est.theta);
        let w = clamp(1.5 * err, 0.8);
        let w = if w.abs() < 0.05 { 0.05 * err.signum() } else { w };
        VelocityCommand { v: 0.0, omega: w }
    }
}

fn nearest_free(grid: &OccupancyGrid, start: Cell, max_ring: i64) -> Option<Cell> {
    if grid.is_free(start) {
        return Some(start);
    }
    let (x0, y0) = (start.0 as i64, start.1 as i64);
    for r in 1..=max_ring {
        let mut best: Option<(i64, Cell)> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r || !grid.in_bounds(x0 + dx, y0 + dy) {
                    continue;
                }
                let c = ((x0 + dx) as usize, (y0 + dy) as usize);
                let d2 = dx * dx + dy * dy;
                if grid.is_free(c) && best.is_none_or(|(b, _)| d2 < b) {
                    best = Some((d2, c));
                }
            }
        }
        if let Some((_, c)) = best {
            return Some(c);
        }
    }
    None
}

/// True when the straight segment between two points crosses only free
/// cells, sampled at a quarter cell.
fn visible(grid: &OccupancyGrid, a: &Point2, b: &Point2) -> bool {
    let n = ((b - a).norm() / (0.25 * grid.resolution())).ceil() as usize;
    (0..=n).all(|k| {
        let p = a + (b - a) * (k as f64 / n.max(1) as f64);
        grid.cell_of(&p).is_some_and(|c| grid.is_free(c))
    })
}

/// Points along `line` spaced at most `spacing` apart, endpoints kept.
fn resample(line: &[Point2], spacing: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    for w in line.windows(2) {
        let seg = w[1] - w[0];
        let n = ((seg.norm() / spacing).ceil() as usize).max(1);
        for k in 0..n {
            out.push(w[0] + seg * (k as f64 / n as f64));
        }
    }
    if let Some(last) = line.last() {
        out.push(*last);
    }
    out
}
