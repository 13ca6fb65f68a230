//! Attaching numeric parameters from the map to a symbolic plan.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{Task, TaskKind};
use crate::planner::{apply_action, BeliefModel, Place, PlanningState, SymbolicAction};
use crate::sewer::{turn_angle, End, ManholeId, PipeId, PortIndex, Target};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroundedAction {
    DriveToManhole {
        pipe: PipeId,
        /// The manhole driven toward.
        direction: ManholeId,
        distance_cm: f64,
        pipe_diameter_cm: f64,
        speed_cm_s: f64,
        /// The robot faces away from `direction` and drives tail first.
        reverse_first: bool,
    },
    CrossManhole {
        manhole: ManholeId,
        from_port: PortIndex,
        to_port: PortIndex,
        turn_deg: f64,
        step_cm: f64,
        manhole_type: String,
        /// All incident pipes in port order.
        pipes: Vec<PipeId>,
        distance_cm: f64,
        speed_cm_s: f64,
    },
    TakeWaterSample {
        pipe: PipeId,
        task_id: Option<String>,
    },
    InspectPipe {
        pipe: PipeId,
        task_id: Option<String>,
    },
}

impl GroundedAction {
    /// The symbolic action this was fused from.
    pub fn symbolic(&self) -> SymbolicAction {
        match self {
            GroundedAction::DriveToManhole { pipe, direction, .. } => {
                SymbolicAction::DrivePipeToManhole { pipe: *pipe, manhole: *direction }
            }
            GroundedAction::CrossManhole { manhole, from_port, to_port, manhole_type, pipes, .. } => {
                SymbolicAction::DriveManhole {
                    designator: manhole_type.clone(),
                    from: *from_port,
                    to: *to_port,
                    manhole: *manhole,
                    pipes: pipes.clone(),
                }
            }
            GroundedAction::TakeWaterSample { pipe, .. } => SymbolicAction::TakeWaterSample { pipe: *pipe },
            GroundedAction::InspectPipe { pipe, .. } => SymbolicAction::InspectPipe { pipe: *pipe },
        }
    }

    pub fn task_id(&self) -> Option<&str> {
        match self {
            GroundedAction::TakeWaterSample { task_id, .. } | GroundedAction::InspectPipe { task_id, .. } => {
                task_id.as_deref()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action {index}: {message}")]
pub struct FusionError {
    pub index: usize,
    pub message: String,
}

fn task_for(tasks: &[Task], kind: TaskKind, pipe: PipeId) -> Option<String> {
    tasks
        .iter()
        .find(|t| t.kind == kind && t.target == Target::Pipe(pipe))
        .map(|t| t.id.clone())
}

/// Fuses `plan`, executed from `start`, into executable actions.
///
/// Place is tracked by replaying each action, so inconsistent plans (a FROM
/// port the robot is not at, a pipe it is not in) are rejected.
pub fn fuse(
    plan: &[SymbolicAction],
    b: &BeliefModel,
    start: &PlanningState,
    tasks: &[Task],
) -> Result<Vec<GroundedAction>, FusionError> {
    let g = &b.graph;
    let speed = b.limits.cruise_speed_cm_s;
    let mut s = start.clone();
    let mut out = Vec::with_capacity(plan.len());
    for (index, a) in plan.iter().enumerate() {
        let err = |message: String| FusionError { index, message };
        let grounded = match a {
            SymbolicAction::DrivePipeToManhole { pipe, manhole } => {
                let p = g.pipe(*pipe).map_err(|e| err(e.to_string()))?;
                let reverse_first = match s.at {
                    Place::InPipe { toward, .. } => toward != End::Manhole(*manhole),
                    Place::AtManholePort { .. } => true,
                };
                GroundedAction::DriveToManhole {
                    pipe: *pipe,
                    direction: *manhole,
                    distance_cm: p.length_cm,
                    pipe_diameter_cm: p.diameter_cm,
                    speed_cm_s: speed,
                    reverse_first,
                }
            }
            SymbolicAction::DriveManhole { designator, from, to, manhole, pipes } => {
                let m = g.manhole(*manhole).map_err(|e| err(e.to_string()))?;
                let turn_deg = turn_angle(m, *from, *to).map_err(|e| err(e.to_string()))?;
                let (a, b) = (m.port(*from), m.port(*to));
                let step_cm = match (a, b) {
                    (Some(a), Some(b)) => (a.invert_offset_cm - b.invert_offset_cm).abs(),
                    _ => return Err(err(format!("unknown port on {manhole}"))),
                };
                GroundedAction::CrossManhole {
                    manhole: *manhole,
                    from_port: *from,
                    to_port: *to,
                    turn_deg,
                    step_cm,
                    manhole_type: designator.clone(),
                    pipes: pipes.clone(),
                    distance_cm: m.diameter_cm,
                    speed_cm_s: speed,
                }
            }
            SymbolicAction::TakeWaterSample { pipe } => GroundedAction::TakeWaterSample {
                pipe: *pipe,
                task_id: task_for(tasks, TaskKind::WaterSample, *pipe),
            },
            SymbolicAction::InspectPipe { pipe } => GroundedAction::InspectPipe {
                pipe: *pipe,
                task_id: task_for(tasks, TaskKind::Inspect, *pipe),
            },
        };
        apply_action(b, &mut s, a).map_err(err)?;
        out.push(grounded);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::planner::{parse_solution, render_solution};

    fn setup() -> (BeliefModel, PlanningState, Vec<Task>) {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let m = fixtures::reference_mission();
        let s = PlanningState::at_entry(&b.graph, &m);
        (b, s, m.tasks)
    }

    #[test]
    fn first_drive() {
        let (b, s, tasks) = setup();
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let out = fuse(&plan, &b, &s, &tasks).unwrap();
        assert_eq!(out.len(), 14);
        assert_eq!(
            out[0],
            GroundedAction::DriveToManhole {
                pipe: PipeId(12),
                direction: ManholeId(2),
                distance_cm: 500.0,
                pipe_diameter_cm: 60.0,
                speed_cm_s: 30.0,
                reverse_first: false,
            }
        );
        assert_eq!(out[6].task_id(), Some("ws-P6"));
        assert_eq!(out[10].task_id(), Some("insp-P4"));
        // back out of P6 toward M6 after sampling at its mouth
        assert!(matches!(out[7], GroundedAction::DriveToManhole { reverse_first: true, .. }));
    }

    #[test]
    fn crossing_parameters() {
        let (b, s, tasks) = setup();
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let out = fuse(&plan, &b, &s, &tasks).unwrap();
        let GroundedAction::CrossManhole { from_port, to_port, turn_deg, step_cm, .. } = &out[5] else {
            panic!("expected a crossing");
        };
        assert_eq!((*from_port, *to_port), (3, 4));
        // P5 at 180, P6 at 270: a 90 degree separation, so a 90 degree turn
        assert_eq!(*turn_deg, 90.0);
        assert_eq!(*step_cm, 20.0);
    }

    #[test]
    fn symbolic_round_trip() {
        let (b, s, tasks) = setup();
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let out = fuse(&plan, &b, &s, &tasks).unwrap();
        let back: Vec<SymbolicAction> = out.iter().map(GroundedAction::symbolic).collect();
        assert_eq!(render_solution(&back), fixtures::REFERENCE_PLAN);
        assert!(fuse(&[], &b, &s, &tasks).unwrap().is_empty());
    }

    #[test]
    fn inconsistent_plan_rejected() {
        let (b, s, tasks) = setup();
        let plan = parse_solution("DRIVE_PIPE_TO_MANHOLE P5 M6\n").unwrap();
        assert_eq!(fuse(&plan, &b, &s, &tasks).unwrap_err().index, 0);
    }
}
