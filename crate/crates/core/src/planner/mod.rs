//! STRIPS compilation of the sewer world, an FF-style forward search, goal
//! maximisation under blockage, and an independent plan validator.

mod goals;
mod ground;
mod heuristic;
pub mod pddl;
mod search;
mod solution;
mod validate;


use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{Mission, Task, TaskKind};
use crate::sewer::{End, KinematicLimits, ManholeId, PipeId, SewerGraph, Target};

pub use goals::{maximize_goals, Maximized, EXACT_LIMIT};
pub use ground::{ground, Fact, GroundOp, GroundTask, Schema};
pub use heuristic::{relaxed_plan_heuristic, Relaxed};
pub use search::{solve, solve_ground, solve_ground_optimal, SearchStats, Solution};
pub use solution::{parse_solution, render_solution, SolutionError, SymbolicAction, SymbolicPlan};
pub use validate::{apply_action, validate_plan, Violation};

/// The planner's view of the world: the map minus the pipes found blocked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefModel {
    pub graph: SewerGraph,
    pub blocked_pipes: BTreeSet<PipeId>,
    pub limits: KinematicLimits,
}

impl BeliefModel {
    pub fn new(graph: SewerGraph) -> Self {
        Self { graph, blocked_pipes: BTreeSet::new(), limits: KinematicLimits::default() }
    }

    pub fn is_blocked(&self, pipe: PipeId) -> bool {
        self.blocked_pipes.contains(&pipe)
    }

    /// Returns false when the pipe was already blocked.
    pub fn block(&mut self, pipe: PipeId) -> bool {
        self.blocked_pipes.insert(pipe)
    }
}

/// Where the robot is, topologically.
///
/// Inside a pipe the robot faces one end. `docked` names the manhole it has
/// just crossed and is still sitting at the mouth of; any drive clears it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Place {
    InPipe {
        pipe: PipeId,
        toward: End,
        docked: Option<ManholeId>,
    },
    AtManholePort {
        manhole: ManholeId,
        port: u32,
    },
}

impl Place {
    pub fn in_pipe(pipe: PipeId, toward: End) -> Self {
        Place::InPipe { pipe, toward, docked: None }
    }

    /// Object name used in fact strings and PDDL documents.
    pub fn name(&self) -> String {
        match self {
            Place::InPipe { pipe, toward, docked } => {
                let mut s = format!("in-{pipe}-to-{toward}");
                if let Some(m) = docked {
                    s.push_str(&format!("-via-{m}"));
                }
                s
            }
            Place::AtManholePort { manhole, port } => format!("port-{manhole}-{port}"),
        }
    }

    pub fn pipe(&self) -> Option<PipeId> {
        match self {
            Place::InPipe { pipe, .. } => Some(*pipe),
            Place::AtManholePort { .. } => None,
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningState {
    pub at: Place,
    pub sampled: BTreeSet<PipeId>,
    pub inspected: BTreeSet<PipeId>,
    /// Locations visited so far; GOTO goals are satisfied by these.
    pub reached: BTreeSet<Target>,
}

impl PlanningState {
    pub fn new(g: &SewerGraph, at: Place) -> Self {
        let mut s = Self {
            at,
            sampled: BTreeSet::new(),
            inspected: BTreeSet::new(),
            reached: BTreeSet::new(),
        };
        s.note_place(g);
        s
    }

    pub fn at_entry(g: &SewerGraph, m: &Mission) -> Self {
        Self::new(g, Place::in_pipe(m.entry.pipe, m.entry_heading()))
    }

    /// Records the current place as reached.
    pub fn note_place(&mut self, g: &SewerGraph) {
        match self.at {
            Place::InPipe { pipe, docked, .. } => {
                self.reached.insert(Target::Pipe(pipe));
                if let Some(m) = docked {
                    self.reached.insert(Target::Manhole(m));
                }
            }
            Place::AtManholePort { manhole, port } => {
                self.reached.insert(Target::Manhole(manhole));
                if let Some(p) = g.manholes.get(&manhole).and_then(|m| m.port(port)) {
                    self.reached.insert(Target::Pipe(p.pipe));
                }
            }
        }
    }
}

/// A single goal atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum Goal {
    Sampled(PipeId),
    Inspected(PipeId),
    Reached(Target),
    /// The robot has crossed this manhole and waits at its mouth.
    DockedAt(ManholeId),
}

impl Goal {
    pub fn for_task(t: &Task) -> Goal {
        match (t.kind, t.target) {
            (TaskKind::WaterSample, Target::Pipe(p)) => Goal::Sampled(p),
            (TaskKind::Inspect, Target::Pipe(p)) => Goal::Inspected(p),
            (_, target) => Goal::Reached(target),
        }
    }

    pub fn holds(&self, s: &PlanningState) -> bool {
        match *self {
            Goal::Sampled(p) => s.sampled.contains(&p),
            Goal::Inspected(p) => s.inspected.contains(&p),
            Goal::Reached(t) => s.reached.contains(&t),
            Goal::DockedAt(m) => matches!(s.at, Place::InPipe { docked: Some(d), .. } if d == m),
        }
    }

    pub fn pipe(&self) -> Option<PipeId> {
        match *self {
            Goal::Sampled(p) | Goal::Inspected(p) | Goal::Reached(Target::Pipe(p)) => Some(p),
            _ => None,
        }
    }
}

/// A goal tied to the task it discharges, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskGoal {
    pub task_id: String,
    pub goal: Goal,
}

/// Goal atoms for the pending tasks of `goals` plus docking at the current exit.
pub fn goal_atoms(m: &Mission, goals: &crate::mission::GoalSet) -> Vec<Goal> {
    let mut atoms: Vec<Goal> = m
        .tasks
        .iter()
        .filter(|t| goals.pending.contains(&t.id))
        .map(Goal::for_task)
        .collect();
    atoms.push(Goal::DockedAt(goals.current_exit));
    atoms
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no plan reaches the goals")]
    Unsolvable,
    #[error("no recoverable manhole is reachable")]
    Stranded,
    #[error("invalid planning input: {0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn place_names() {
        let p = Place::InPipe {
            pipe: PipeId(12),
            toward: End::Manhole(ManholeId(2)),
            docked: None,
        };
        assert_eq!(p.name(), "in-P12-to-M2");
        let p = Place::InPipe {
            pipe: PipeId(6),
            toward: End::Stub,
            docked: Some(ManholeId(6)),
        };
        assert_eq!(p.name(), "in-P6-to-stub-via-M6");
        assert_eq!(Place::AtManholePort { manhole: ManholeId(6), port: 3 }.name(), "port-M6-3");
    }

    #[test]
    fn docked_goal() {
        let g = crate::fixtures::ais_test_env();
        let at = Place::InPipe {
            pipe: PipeId(9),
            toward: End::Manhole(ManholeId(10)),
            docked: Some(ManholeId(9)),
        };
        let s = PlanningState::new(&g, at);
        assert!(Goal::DockedAt(ManholeId(9)).holds(&s));
        assert!(Goal::Reached(Target::Manhole(ManholeId(9))).holds(&s));
        assert!(!Goal::DockedAt(ManholeId(10)).holds(&s));
    }
}
