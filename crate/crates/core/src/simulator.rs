//! Ground truth and a discrete-event model of the robot executing jobs.
//!
//! Positions inside a pipe are offsets in cm from the pipe's first end
//! (`Pipe::ends()[0]`); the second end sits at `length_cm`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{Mission, DEFAULT_TIME_BUDGET_S};
use crate::planner::Place;
use crate::sewer::{End, PipeId, PortIndex, SewerGraph};

const EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub crossing_s: f64,
    pub sample_s: f64,
    pub scan_s: f64,
    pub lift_s: f64,
    pub lower_s: f64,
    pub sense_s: f64,
    pub reboot_s: f64,
    /// Distance at which the robot stops in front of an obstacle.
    pub standoff_cm: f64,
    pub time_budget_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            crossing_s: 90.0,
            sample_s: 120.0,
            scan_s: 60.0,
            lift_s: 15.0,
            lower_s: 15.0,
            sense_s: 0.0,
            reboot_s: 30.0,
            standoff_cm: 10.0,
            time_budget_s: DEFAULT_TIME_BUDGET_S,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ObstacleKind {
    LightWaste,
    Pushable,
    StuckRisk,
    Immovable,
}

impl ObstacleKind {
    pub const ALL: [ObstacleKind; 4] =
        [ObstacleKind::LightWaste, ObstacleKind::Pushable, ObstacleKind::StuckRisk, ObstacleKind::Immovable];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub position_cm: f64,
}

/// The true world. At most one obstacle per pipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub graph: SewerGraph,
    pub obstacles: BTreeMap<PipeId, Obstacle>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown pipe {0}")]
    UnknownPipe(PipeId),
    #[error("position {position_cm} cm outside {pipe} (length {length_cm} cm)")]
    OutOfRange { pipe: PipeId, position_cm: f64, length_cm: f64 },
}

impl GroundTruth {
    pub fn new(graph: SewerGraph, rng_seed: u64) -> Self {
        Self { graph, obstacles: BTreeMap::new(), rng_seed }
    }
}

/// Places an obstacle, replacing any already in `pipe`.
pub fn inject_fault(gt: &mut GroundTruth, pipe: PipeId, kind: ObstacleKind, position_cm: f64) -> Result<(), SimError> {
    let p = gt.graph.pipes.get(&pipe).ok_or(SimError::UnknownPipe(pipe))?;
    if !(0.0..=p.length_cm).contains(&position_cm) {
        return Err(SimError::OutOfRange { pipe, position_cm, length_cm: p.length_cm });
    }
    gt.obstacles.insert(pipe, Obstacle { kind, position_cm });
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobKind {
    DriveForward,
    DriveBackward,
    LiftHead,
    LowerHead,
    Push,
    SenseManhole,
    Sample,
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub kind: JobKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_cm_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cm: Option<f64>,
    /// Set on the drive through a manhole: the port to leave by.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_port: Option<PortIndex>,
}

impl Job {
    pub fn simple(kind: JobKind) -> Self {
        Self { kind, speed_cm_s: None, distance_cm: None, to_port: None }
    }

    pub fn motion(kind: JobKind, speed_cm_s: f64, distance_cm: f64) -> Self {
        Self { kind, speed_cm_s: Some(speed_cm_s), distance_cm: Some(distance_cm), to_port: None }
    }

    pub fn cross(speed_cm_s: f64, distance_cm: f64, to_port: PortIndex) -> Self {
        Self { to_port: Some(to_port), ..Self::motion(JobKind::DriveForward, speed_cm_s, distance_cm) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    Blockage,
    Danger,
    Malfunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCode {
    pub class: ErrorClass,
    pub detail: String,
    pub at: Place,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipe: Option<PipeId>,
}

pub type JobResult = Result<(), ErrorCode>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub place: Place,
    /// Position along the current pipe, or the port's pipe when at a manhole.
    pub offset_cm: f64,
    pub head_lifted: bool,
    pub clock_s: f64,
    pub energy_budget_s: f64,
}

impl RobotState {
    /// The end faced inside a pipe; at a port the robot faces the manhole.
    pub fn heading(&self) -> End {
        match self.place {
            Place::InPipe { toward, .. } => toward,
            Place::AtManholePort { manhole, .. } => End::Manhole(manhole),
        }
    }

    fn advance(&mut self, dt: f64, budget: f64) {
        self.clock_s += dt;
        self.energy_budget_s = (budget - self.clock_s).max(0.0);
    }
}

fn end_offset(g: &SewerGraph, pipe: PipeId, end: End) -> f64 {
    let p = &g.pipes[&pipe];
    if p.ends()[0] == end {
        0.0
    } else {
        p.length_cm
    }
}

/// Pipe the robot occupies: the one it is in, or the port's pipe.
fn current_pipe(g: &SewerGraph, place: Place) -> Option<PipeId> {
    match place {
        Place::InPipe { pipe, .. } => Some(pipe),
        Place::AtManholePort { manhole, port } => g.manholes.get(&manhole)?.port(port).map(|p| p.pipe),
    }
}

fn fail(class: ErrorClass, detail: impl Into<String>, rs: &RobotState, pipe: Option<PipeId>) -> JobResult {
    Err(ErrorCode { class, detail: detail.into(), at: rs.place, pipe })
}

/// Obstacle within touching distance of the robot.
fn in_contact(gt: &GroundTruth, pipe: PipeId, offset: f64, standoff: f64) -> Option<Obstacle> {
    gt.obstacles
        .get(&pipe)
        .copied()
        .filter(|o| (o.position_cm - offset).abs() <= standoff + EPS)
}

/// Executes one job. Deterministic in its inputs.
pub fn step(job: &Job, rs: &RobotState, gt: &mut GroundTruth, cfg: &SimConfig) -> (RobotState, JobResult) {
    let mut next = rs.clone();
    let g = &gt.graph;
    let budget = cfg.time_budget_s;
    let result = match job.kind {
        JobKind::DriveForward if job.to_port.is_some() => {
            let to = job.to_port.unwrap_or_default();
            match rs.place {
                Place::AtManholePort { manhole, .. } => {
                    match g.manholes.get(&manhole).and_then(|m| m.port(to)) {
                        Some(port) => {
                            let out = port.pipe;
                            let toward = g.pipes[&out].other_end(End::Manhole(manhole));
                            next.place = Place::InPipe { pipe: out, toward, docked: Some(manhole) };
                            next.offset_cm = end_offset(g, out, End::Manhole(manhole));
                            next.advance(cfg.crossing_s, budget);
                            Ok(())
                        }
                        None => fail(ErrorClass::Malfunction, format!("no port {to} at {manhole}"), rs, None),
                    }
                }
                Place::InPipe { pipe, .. } => fail(ErrorClass::Malfunction, "not at a manhole", rs, Some(pipe)),
            }
        }
        JobKind::DriveForward | JobKind::DriveBackward => {
            let speed = job.speed_cm_s.unwrap_or(1.0);
            let distance = job.distance_cm.unwrap_or(0.0);
            let pipe = current_pipe(g, rs.place).expect("robot is always in or at a pipe");
            let heading = rs.heading();
            let target_end = if job.kind == JobKind::DriveForward {
                heading
            } else {
                g.pipes[&pipe].other_end(heading)
            };
            let from = rs.offset_cm;
            let target = end_offset(g, pipe, target_end);
            let sign = if target >= from { 1.0 } else { -1.0 };
            let travel = distance.min((target - from).abs());
            next.place = Place::InPipe { pipe, toward: heading, docked: None };
            let ahead = gt.obstacles.get(&pipe).copied().filter(|o| (o.position_cm - from) * sign > EPS);
            let stop = ahead.map(|o| ((o.position_cm - sign * cfg.standoff_cm - from) * sign).max(0.0));
            match stop {
                Some(reach) if reach < travel - EPS => {
                    next.offset_cm = from + sign * reach;
                    next.advance(reach / speed, budget);
                    next.place = Place::InPipe { pipe, toward: heading, docked: None };
                    let kind = ahead.map(|o| o.kind).unwrap_or(ObstacleKind::Immovable);
                    fail(ErrorClass::Blockage, format!("obstacle ahead in {pipe} ({kind:?})"), &next, Some(pipe))
                }
                _ => {
                    next.offset_cm = from + sign * travel;
                    next.advance(travel / speed, budget);
                    Ok(())
                }
            }
        }
        JobKind::SenseManhole => {
            let pipe = current_pipe(g, rs.place).expect("robot is always in or at a pipe");
            let p = &g.pipes[&pipe];
            let at_end = p
                .endpoints
                .iter()
                .find(|e| (end_offset(g, pipe, End::Manhole(e.manhole)) - rs.offset_cm).abs() <= EPS);
            next.advance(cfg.sense_s, budget);
            match at_end {
                Some(e) => {
                    next.place = Place::AtManholePort { manhole: e.manhole, port: e.port };
                    Ok(())
                }
                None => fail(ErrorClass::Malfunction, "no manhole sensed", rs, Some(pipe)),
            }
        }
        JobKind::LiftHead => {
            next.head_lifted = true;
            next.advance(cfg.lift_s, budget);
            if let Some(pipe) = current_pipe(g, rs.place) {
                if in_contact(gt, pipe, rs.offset_cm, cfg.standoff_cm).is_some_and(|o| o.kind == ObstacleKind::LightWaste) {
                    gt.obstacles.remove(&pipe);
                }
            }
            Ok(())
        }
        JobKind::LowerHead => {
            next.head_lifted = false;
            next.advance(cfg.lower_s, budget);
            Ok(())
        }
        JobKind::Push => {
            let speed = job.speed_cm_s.unwrap_or(1.0);
            let distance = job.distance_cm.unwrap_or(0.0);
            let pipe = current_pipe(g, rs.place).expect("robot is always in or at a pipe");
            next.advance(distance / speed, budget);
            match in_contact(gt, pipe, rs.offset_cm, cfg.standoff_cm) {
                None => Ok(()),
                Some(o) => match o.kind {
                    ObstacleKind::LightWaste | ObstacleKind::Pushable => {
                        // Shoved clear of the pipe; the robot follows it.
                        let sign = if o.position_cm >= rs.offset_cm { 1.0 } else { -1.0 };
                        let len = g.pipes[&pipe].length_cm;
                        next.offset_cm = (rs.offset_cm + sign * distance).clamp(0.0, len);
                        let heading = rs.heading();
                        next.place = Place::InPipe { pipe, toward: heading, docked: None };
                        gt.obstacles.remove(&pipe);
                        Ok(())
                    }
                    ObstacleKind::StuckRisk => {
                        fail(ErrorClass::Danger, format!("obstacle wedging between segments in {pipe}"), rs, Some(pipe))
                    }
                    ObstacleKind::Immovable => fail(ErrorClass::Blockage, format!("obstacle in {pipe} does not move"), rs, Some(pipe)),
                },
            }
        }
        JobKind::Sample => {
            next.advance(cfg.sample_s, budget);
            Ok(())
        }
        JobKind::Scan => {
            next.advance(cfg.scan_s, budget);
            Ok(())
        }
    };
    (next, result)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "on", rename_all = "snake_case")]
pub enum Trigger {
    /// Once the clock reaches `t_s`, checked before each job.
    AtClock { t_s: f64 },
    /// Right after the robot enters its `n`th pipe from a manhole (1-based).
    PipeEntry { n: u32 },
    /// Before the action with this 0-based index across the whole run.
    BeforeAction { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Fault {
    Obstacle {
        pipe: PipeId,
        kind: ObstacleKind,
        /// Drawn from the seeded generator when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position_cm: Option<f64>,
    },
    /// The next `failures` jobs fail with a malfunction.
    Malfunction {
        #[serde(default = "one")]
        failures: u32,
    },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFault {
    pub trigger: Trigger,
    pub fault: Fault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElapsedReport {
    pub clock_s: f64,
    pub energy_remaining_s: f64,
    pub overrun: bool,
}

pub fn elapsed_report(rs: &RobotState, time_budget_s: f64) -> ElapsedReport {
    ElapsedReport {
        clock_s: rs.clock_s,
        energy_remaining_s: rs.energy_budget_s,
        overrun: rs.clock_s > time_budget_s,
    }
}

/// A simulator instance: ground truth, robot, and the pending fault script.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub gt: GroundTruth,
    pub robot: RobotState,
    pub config: SimConfig,
    script: Vec<ScriptedFault>,
    pipe_entries: u32,
    malfunctions: u32,
    rng: ChaCha8Rng,
}

impl Simulator {
    /// Places the robot at `start`; in a pipe it sits at the end it faces away from.
    pub fn new(gt: GroundTruth, config: SimConfig, script: Vec<ScriptedFault>, start: Place) -> Self {
        let offset_cm = match start {
            Place::InPipe { pipe, toward, docked: None } => {
                let back = gt.graph.pipes[&pipe].other_end(toward);
                end_offset(&gt.graph, pipe, back)
            }
            Place::InPipe { pipe, docked: Some(m), .. } => end_offset(&gt.graph, pipe, End::Manhole(m)),
            Place::AtManholePort { manhole, .. } => {
                let pipe = current_pipe(&gt.graph, start).expect("port exists");
                end_offset(&gt.graph, pipe, End::Manhole(manhole))
            }
        };
        let rng = ChaCha8Rng::seed_from_u64(gt.rng_seed);
        let robot = RobotState {
            place: start,
            offset_cm,
            head_lifted: false,
            clock_s: 0.0,
            energy_budget_s: config.time_budget_s,
        };
        let mut sim = Self { gt, robot, config, script, pipe_entries: 0, malfunctions: 0, rng };
        sim.fire(|t, _| matches!(t, Trigger::AtClock { t_s } if *t_s <= 0.0));
        sim
    }

    pub fn at_entry(gt: GroundTruth, mut config: SimConfig, script: Vec<ScriptedFault>, m: &Mission) -> Self {
        config.time_budget_s = m.time_budget_s;
        let start = Place::in_pipe(m.entry.pipe, m.entry_heading());
        Self::new(gt, config, script, start)
    }

    fn apply(&mut self, fault: Fault) {
        match fault {
            Fault::Obstacle { pipe, kind, position_cm } => {
                let Some(p) = self.gt.graph.pipes.get(&pipe) else { return };
                let pos = position_cm.unwrap_or_else(|| self.rng.gen_range(0.0..p.length_cm));
                let _ = inject_fault(&mut self.gt, pipe, kind, pos);
            }
            Fault::Malfunction { failures } => self.malfunctions += failures,
        }
    }

    fn fire(&mut self, pred: impl Fn(&Trigger, &Self) -> bool) {
        let mut i = 0;
        while i < self.script.len() {
            if pred(&self.script[i].trigger, self) {
                let f = self.script.remove(i);
                self.apply(f.fault);
            } else {
                i += 1;
            }
        }
    }

    /// Interactive injection, checked against the true map.
    pub fn inject_fault(&mut self, pipe: PipeId, kind: ObstacleKind, position_cm: f64) -> Result<(), SimError> {
        inject_fault(&mut self.gt, pipe, kind, position_cm)
    }

    pub fn inject_malfunction(&mut self, failures: u32) {
        self.malfunctions += failures;
    }

    /// Fires faults scheduled before action `index`.
    pub fn begin_action(&mut self, index: usize) {
        self.fire(|t, _| matches!(t, Trigger::BeforeAction { index: i } if *i == index));
    }

    pub fn run_job(&mut self, job: &Job) -> JobResult {
        let clock = self.robot.clock_s;
        self.fire(|t, _| matches!(t, Trigger::AtClock { t_s } if *t_s <= clock));
        if self.malfunctions > 0 {
            self.malfunctions -= 1;
            return fail(ErrorClass::Malfunction, "controller fault", &self.robot, current_pipe(&self.gt.graph, self.robot.place));
        }
        let was_at_port = matches!(self.robot.place, Place::AtManholePort { .. });
        let (next, result) = step(job, &self.robot, &mut self.gt, &self.config);
        let entered = was_at_port && matches!(next.place, Place::InPipe { .. });
        self.robot = next;
        if entered {
            self.pipe_entries += 1;
            let n = self.pipe_entries;
            self.fire(|t, _| matches!(t, Trigger::PipeEntry { n: k } if *k == n));
        }
        result
    }

    pub fn reboot(&mut self) {
        self.robot.head_lifted = false;
        self.robot.advance(self.config.reboot_s, self.config.time_budget_s);
    }

    /// Swaps heading in place; the body is symmetric, so this costs nothing.
    pub fn turn_round(&mut self) {
        if let Place::InPipe { pipe, toward, .. } = self.robot.place {
            let back = self.gt.graph.pipes[&pipe].other_end(toward);
            self.robot.place = Place::InPipe { pipe, toward: back, docked: None };
        }
    }

    pub fn elapsed_report(&self) -> ElapsedReport {
        elapsed_report(&self.robot, self.config.time_budget_s)
    }

    pub fn pipe_entries(&self) -> u32 {
        self.pipe_entries
    }
}
