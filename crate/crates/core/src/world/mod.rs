//! Ground-truth greenhouse: room and row geometry, robot motion, flower
//! phenology and the simulated sensor channels.

mod config;
mod flower;
mod sensors;

use std::collections::BTreeMap;

use nalgebra::Vector2;
use thiserror::Error;

use crate::geometry::{point_in_convex_polygon, polygon_edges, Point2, Point3, Pose2, Segment};

pub use config::{
    CameraSpec, Doorway, FlowerSpec, OdometryNoise, PlantRow, RobotSpec, ScanSpec, Wall, WorldConfig,
    DEFAULT_CELLS_PER_SIDE, DEFAULT_PARKING_OFFSET, DEFAULT_ROW_LENGTH,
};
pub use flower::{Flower, FlowerState, GridCellRef, Side};
pub use sensors::{scan_to_points, simulate_cluster_detections, simulate_odometry, simulate_scan, DetectionEvent};

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid flower: {0}")]
    InvalidFlower(String),
    #[error("arclength {arclength} outside row of length {length}")]
    OutOfRow { arclength: f64, length: f64 },
    #[error("unknown row {0}")]
    UnknownRow(u32),
    #[error("unknown grid cell {0}")]
    UnknownCell(GridCellRef),
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
}

/// Kinematic state of the drive base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose2,
    pub v: f64,
    pub omega: f64,
    pub time: f64,
}

/// Precomputed geometry of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGeometry {
    pub id: u32,
    pub start: Point2,
    pub end: Point2,
    pub direction: Vector2<f64>,
    /// Unit normal pointing out of the left face.
    pub normal: Vector2<f64>,
    pub length: f64,
    pub half_width: f64,
    pub cells_per_side: usize,
}

impl RowGeometry {
    fn from_row(row: &PlantRow) -> Self {
        let start = Point2::new(row.start[0], row.start[1]);
        let end = Point2::new(row.end[0], row.end[1]);
        let length = (end - start).norm();
        let direction = if length > 0.0 {
            (end - start) / length
        } else {
            Vector2::x()
        };
        Self {
            id: row.id,
            start,
            end,
            direction,
            normal: Vector2::new(-direction.y, direction.x),
            length,
            half_width: row.half_width,
            cells_per_side: row.cells_per_side,
        }
    }

    pub fn cell_length(&self) -> f64 {
        self.length / self.cells_per_side as f64
    }

    /// Point on the centerline at `arclength`.
    pub fn centerline_point(&self, arclength: f64) -> Point2 {
        self.start + self.direction * arclength
    }

    /// Outward unit normal of one face.
    pub fn face_normal(&self, side: Side) -> Vector2<f64> {
        self.normal * side.sign()
    }

    pub fn face_point(&self, side: Side, arclength: f64) -> Point2 {
        self.centerline_point(arclength) + self.face_normal(side) * self.half_width
    }

    pub fn face(&self, side: Side) -> Segment {
        Segment::new(self.face_point(side, 0.0), self.face_point(side, self.length))
    }

    /// Corners in counter-clockwise order.
    pub fn polygon(&self) -> [Point2; 4] {
        let n = self.normal * self.half_width;
        [self.start - n, self.end - n, self.end + n, self.start + n]
    }

    pub fn edges(&self) -> Vec<Segment> {
        polygon_edges(&self.polygon())
    }

    pub fn contains(&self, p: &Point2) -> bool {
        point_in_convex_polygon(p, &self.polygon())
    }

    /// Arclength of the projection of `p` on the centerline (unclamped).
    pub fn project(&self, p: &Point2) -> f64 {
        (p - self.start).dot(&self.direction)
    }

    /// Signed distance of `p` from the centerline, positive on the left.
    pub fn lateral_offset(&self, p: &Point2) -> f64 {
        (p - self.start).dot(&self.normal)
    }

    pub fn grid_cell_of(&self, arclength: f64) -> Result<usize, WorldError> {
        if !(0.0..=self.length).contains(&arclength) {
            return Err(WorldError::OutOfRow {
                arclength,
                length: self.length,
            });
        }
        let index = (arclength / self.cell_length()).floor() as usize;
        Ok(index.min(self.cells_per_side - 1))
    }

    /// Arclength interval `[lo, hi]` covered by a cell.
    pub fn cell_span(&self, index: usize) -> (f64, f64) {
        let l = self.cell_length();
        (index as f64 * l, (index + 1) as f64 * l)
    }
}

/// Index of the grid cell containing `arclength` on a row side.
///
/// The far boundary is owned by the last cell.
pub fn grid_cell_of(row: &PlantRow, _side: Side, arclength: f64) -> Result<usize, WorldError> {
    RowGeometry::from_row(row).grid_cell_of(arclength)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub cell: GridCellRef,
    pub parking: Pose2,
    /// Midpoint of the cell on the row face.
    pub face_midpoint: Point2,
    /// Indices into `World::flowers`.
    pub flowers: Vec<usize>,
}

/// Outcome of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    pub collided: bool,
}

/// The simulated greenhouse.
#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    rows: Vec<RowGeometry>,
    walls: Vec<Segment>,
    obstacles: Vec<Segment>,
    cells: BTreeMap<GridCellRef, CellInfo>,
    flowers: Vec<Flower>,
    robot: RobotState,
    collisions: usize,
}

impl World {
    /// Validates the configuration and precomputes cells, parking poses and
    /// the flower index.
    pub fn build(config: WorldConfig) -> Result<World, WorldError> {
        validate_room(&config)?;
        let rows: Vec<RowGeometry> = config.rows.iter().map(RowGeometry::from_row).collect();
        validate_rows(&config, &rows)?;

        let walls = wall_segments(&config);
        let mut obstacles = walls.clone();
        for row in &rows {
            obstacles.extend(row.edges());
        }

        let mut cells = BTreeMap::new();
        for row in &rows {
            for side in Side::BOTH {
                for index in 0..row.cells_per_side {
                    let cell = GridCellRef::new(row.id, side, index);
                    let (lo, hi) = row.cell_span(index);
                    let mid = 0.5 * (lo + hi);
                    cells.insert(
                        cell,
                        CellInfo {
                            cell,
                            parking: parking_pose_for(row, side, index, config.parking_offset),
                            face_midpoint: row.face_point(side, mid),
                            flowers: Vec::new(),
                        },
                    );
                }
            }
        }

        let mut flowers = Vec::with_capacity(config.flowers.len());
        let mut seen = std::collections::BTreeSet::new();
        for spec in &config.flowers {
            if !seen.insert(spec.id) {
                return Err(WorldError::InvalidFlower(format!("duplicate flower id {}", spec.id)));
            }
            let row = rows.iter().find(|r| r.id == spec.row).ok_or_else(|| {
                WorldError::InvalidFlower(format!("flower {} references unknown row {}", spec.id, spec.row))
            })?;
            if !(spec.ready_time < spec.wilt_time) {
                return Err(WorldError::InvalidFlower(format!(
                    "flower {}: ready_time must precede wilt_time",
                    spec.id
                )));
            }
            if !(spec.height >= 0.0) || !(0.0..=row.half_width).contains(&spec.depth) {
                return Err(WorldError::InvalidFlower(format!(
                    "flower {}: height must be >= 0 and depth within the row",
                    spec.id
                )));
            }
            let index = row.grid_cell_of(spec.arclength).map_err(|_| {
                WorldError::InvalidFlower(format!(
                    "flower {}: arclength {} outside row {}",
                    spec.id, spec.arclength, row.id
                ))
            })?;
            let cell = GridCellRef::new(row.id, spec.side, index);
            let p2 = row.centerline_point(spec.arclength) + row.face_normal(spec.side) * (row.half_width - spec.depth);
            let mut flower = Flower::new(
                spec.id,
                Point3::new(p2.x, p2.y, spec.height),
                cell,
                spec.ready_time,
                spec.wilt_time,
            );
            flower.advance(0.0);
            cells
                .get_mut(&cell)
                .expect("cell exists for every row side")
                .flowers
                .push(flowers.len());
            flowers.push(flower);
        }

        let robot = RobotState {
            pose: config.robot.start,
            v: 0.0,
            omega: 0.0,
            time: 0.0,
        };
        let mut world = World {
            config,
            rows,
            walls,
            obstacles,
            cells,
            flowers,
            robot,
            collisions: 0,
        };
        if world.in_collision(&world.robot.pose) {
            return Err(WorldError::Geometry("robot start pose overlaps an obstacle".into()));
        }
        world.collisions = 0;
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn rows(&self) -> &[RowGeometry] {
        &self.rows
    }

    pub fn row(&self, id: u32) -> Option<&RowGeometry> {
        self.rows.iter().find(|r| r.id == id)
    }

    pub fn walls(&self) -> &[Segment] {
        &self.walls
    }

    /// Walls plus every row rectangle edge.
    pub fn obstacles(&self) -> &[Segment] {
        &self.obstacles
    }

    /// Points sampled along every obstacle segment at `spacing`: the prior
    /// map the robot is assumed to know before the session.
    pub fn prior_map(&self, spacing: f64) -> Vec<Point2> {
        crate::geometry::sample_segments(&self.obstacles, spacing)
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellInfo> {
        self.cells.values()
    }

    pub fn cell(&self, cell: &GridCellRef) -> Option<&CellInfo> {
        self.cells.get(cell)
    }

    pub fn flowers(&self) -> &[Flower] {
        &self.flowers
    }

    pub fn flower(&self, id: u32) -> Option<&Flower> {
        self.flowers.iter().find(|f| f.id == id)
    }

    pub(crate) fn flower_mut(&mut self, id: u32) -> Option<&mut Flower> {
        self.flowers.iter_mut().find(|f| f.id == id)
    }

    /// Flowers currently in a cell, in configuration order.
    pub fn flowers_in_cell(&self, cell: &GridCellRef) -> impl Iterator<Item = &Flower> {
        self.cells
            .get(cell)
            .map(|c| c.flowers.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.flowers[i])
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn time(&self) -> f64 {
        self.robot.time
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn parking_pose(&self, cell: &GridCellRef) -> Result<Pose2, WorldError> {
        self.cells
            .get(cell)
            .map(|c| c.parking)
            .ok_or(WorldError::UnknownCell(*cell))
    }

    /// True when a robot disc at `pose` touches a wall or a row.
    pub fn in_collision(&self, pose: &Pose2) -> bool {
        let p = pose.position();
        let r = self.config.robot.radius;
        self.obstacles.iter().any(|s| s.distance_to_point(&p) < r) || self.rows.iter().any(|row| row.contains(&p))
    }

    /// Integrates the unicycle model for `dt` seconds and advances phenology.
    /// Commands are clamped to the velocity limits; collisions are flagged
    /// but never stop the simulation.
    pub fn step(&mut self, v_cmd: f64, omega_cmd: f64, dt: f64) -> Result<StepReport, WorldError> {
        if !(dt > 0.0) {
            return Err(WorldError::InvalidTimeStep(dt));
        }
        let spec = &self.config.robot;
        let v = v_cmd.clamp(-spec.v_max, spec.v_max);
        let omega = omega_cmd.clamp(-spec.omega_max, spec.omega_max);
        self.robot.pose = integrate_unicycle(&self.robot.pose, v, omega, dt);
        self.robot.v = v;
        self.robot.omega = omega;
        self.robot.time += dt;
        let time = self.robot.time;
        for flower in &mut self.flowers {
            flower.advance(time);
        }
        let collided = self.in_collision(&self.robot.pose);
        if collided {
            self.collisions += 1;
        }
        Ok(StepReport { collided })
    }

    /// Advances time without moving the base.
    pub fn idle(&mut self, dt: f64) -> Result<StepReport, WorldError> {
        self.step(0.0, 0.0, dt)
    }
}

/// Exact arc integration of the unicycle model (straight line for |ω| ≤ 1e-9).
pub fn integrate_unicycle(pose: &Pose2, v: f64, omega: f64, dt: f64) -> Pose2 {
    let th = pose.theta;
    if omega.abs() <= 1e-9 {
        Pose2::new(pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin(), th + omega * dt)
    } else {
        let th1 = th + omega * dt;
        let r = v / omega;
        Pose2::new(
            pose.x + r * (th1.sin() - th.sin()),
            pose.y + r * (th.cos() - th1.cos()),
            th1,
        )
    }
}

fn parking_pose_for(row: &RowGeometry, side: Side, index: usize, offset: f64) -> Pose2 {
    let (lo, hi) = row.cell_span(index);
    let n = row.face_normal(side);
    let p = row.centerline_point(0.5 * (lo + hi)) + n * offset;
    Pose2::new(p.x, p.y, (-n.y).atan2(-n.x))
}

fn validate_room(config: &WorldConfig) -> Result<(), WorldError> {
    if !(config.room_width > 0.0 && config.room_length > 0.0)
        || !config.room_width.is_finite()
        || !config.room_length.is_finite()
    {
        return Err(WorldError::Geometry("room dimensions must be positive".into()));
    }
    let r = &config.robot;
    if !(r.radius > 0.0 && r.v_max > 0.0 && r.omega_max > 0.0) {
        return Err(WorldError::Geometry(
            "robot radius and velocity limits must be positive".into(),
        ));
    }
    if !(config.parking_offset > 0.0) {
        return Err(WorldError::Geometry("parking offset must be positive".into()));
    }
    for d in &config.doorways {
        let span = match d.wall {
            Wall::South | Wall::North => config.room_width,
            Wall::West | Wall::East => config.room_length,
        };
        if !(0.0 <= d.from && d.from < d.to && d.to <= span) {
            return Err(WorldError::Geometry(format!(
                "doorway on {:?} wall outside [0, {span}]",
                d.wall
            )));
        }
    }
    Ok(())
}

fn validate_rows(config: &WorldConfig, rows: &[RowGeometry]) -> Result<(), WorldError> {
    let mut ids = std::collections::BTreeSet::new();
    for row in rows {
        if !ids.insert(row.id) {
            return Err(WorldError::Geometry(format!("duplicate row id {}", row.id)));
        }
        if !(row.length > 0.0 && row.half_width > 0.0) || row.cells_per_side == 0 {
            return Err(WorldError::Geometry(format!(
                "row {} needs positive length, half width and cell count",
                row.id
            )));
        }
        for c in row.polygon() {
            let inside = c.x > 0.0 && c.x < config.room_width && c.y > 0.0 && c.y < config.room_length;
            if !inside {
                return Err(WorldError::Geometry(format!("row {} extends outside the room", row.id)));
            }
        }
    }
    let diameter = 2.0 * config.robot.radius;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let overlap = a.polygon().iter().any(|p| b.contains(p)) || b.polygon().iter().any(|p| a.contains(p));
            let gap = a
                .edges()
                .iter()
                .flat_map(|ea| b.edges().into_iter().map(move |eb| ea.distance_to_segment(&eb)))
                .fold(f64::INFINITY, f64::min);
            if overlap || gap < diameter {
                return Err(WorldError::Geometry(format!(
                    "rows {} and {} leave a corridor of {gap:.3} m, narrower than the robot diameter {diameter:.3} m",
                    a.id, b.id
                )));
            }
        }
    }
    Ok(())
}

fn wall_segments(config: &WorldConfig) -> Vec<Segment> {
    let w = config.room_width;
    let l = config.room_length;
    let walls = [
        (Wall::South, Point2::new(0.0, 0.0), Point2::new(w, 0.0)),
        (Wall::East, Point2::new(w, 0.0), Point2::new(w, l)),
        (Wall::North, Point2::new(0.0, l), Point2::new(w, l)),
        (Wall::West, Point2::new(0.0, 0.0), Point2::new(0.0, l)),
    ];
    let mut out = Vec::new();
    for (wall, a, b) in walls {
        let len = (b - a).norm();
        let mut gaps: Vec<(f64, f64)> = config
            .doorways
            .iter()
            .filter(|d| d.wall == wall)
            .map(|d| (d.from, d.to))
            .collect();
        gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
        let dir = (b - a) / len;
        let mut cursor = 0.0;
        for (from, to) in gaps {
            if from > cursor {
                out.push(Segment::new(a + dir * cursor, a + dir * from));
            }
            cursor = cursor.max(to);
        }
        if cursor < len {
            out.push(Segment::new(a + dir * cursor, b));
        }
    }
    out
}
