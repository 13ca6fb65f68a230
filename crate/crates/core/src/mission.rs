//! Operator missions and the goal bookkeeping the executive mutates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sewer::{End, ManholeId, PipeId, SewerGraph, Target};

/// Two hours of battery.
pub const DEFAULT_TIME_BUDGET_S: f64 = 7200.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskKind {
    Goto,
    Inspect,
    WaterSample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub kind: TaskKind,
    pub target: Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub pipe: PipeId,
    pub towards: ManholeId,
}

fn default_budget() -> f64 {
    DEFAULT_TIME_BUDGET_S
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mission {
    pub entry: Entry,
    pub exit: ManholeId,
    #[serde(default = "default_budget")]
    pub time_budget_s: f64,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("task {task} targets unknown {target}")]
    UnknownTarget { task: String, target: Target },
    #[error("task {task}: {kind:?} needs a pipe target, got {target}")]
    InvalidTarget {
        task: String,
        kind: TaskKind,
        target: Target,
    },
    #[error("exit {0} is not a recoverable manhole")]
    NonRecoverableExit(ManholeId),
    #[error("entry pipe {pipe} does not lead to {towards}")]
    InvalidEntry { pipe: PipeId, towards: ManholeId },
    #[error("duplicate task id `{0}`")]
    DuplicateTaskId(String),
}

impl Mission {
    pub fn validate(&self, g: &SewerGraph) -> Result<(), MissionError> {
        if !(self.time_budget_s.is_finite() && self.time_budget_s > 0.0) {
            return Err(MissionError::Schema("time_budget_s must be positive".into()));
        }
        let entry_ok = g
            .pipes
            .get(&self.entry.pipe)
            .is_some_and(|p| p.touches(self.entry.towards));
        if !entry_ok {
            return Err(MissionError::InvalidEntry {
                pipe: self.entry.pipe,
                towards: self.entry.towards,
            });
        }
        if !g.manholes.get(&self.exit).is_some_and(|m| m.recoverable) {
            return Err(MissionError::NonRecoverableExit(self.exit));
        }
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if t.id.is_empty() || t.id.chars().any(char::is_whitespace) {
                return Err(MissionError::Schema(format!("bad task id `{}`", t.id)));
            }
            if !seen.insert(t.id.as_str()) {
                return Err(MissionError::DuplicateTaskId(t.id.clone()));
            }
            if t.kind != TaskKind::Goto && !matches!(t.target, Target::Pipe(_)) {
                return Err(MissionError::InvalidTarget {
                    task: t.id.clone(),
                    kind: t.kind,
                    target: t.target,
                });
            }
            if !g.contains(t.target) {
                return Err(MissionError::UnknownTarget { task: t.id.clone(), target: t.target });
            }
        }
        Ok(())
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// The end of the entry pipe the robot initially faces.
    pub fn entry_heading(&self) -> End {
        End::Manhole(self.entry.towards)
    }
}

pub fn parse_mission(doc: &str, g: &SewerGraph) -> Result<Mission, MissionError> {
    let m: Mission = serde_json::from_str(doc).map_err(|e| MissionError::Schema(e.to_string()))?;
    m.validate(g)?;
    Ok(m)
}

/// Compact JSON with the schema's field order.
pub fn serialize_mission(m: &Mission) -> String {
    serde_json::to_string(m).expect("mission serialization is infallible")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error("task `{0}` is not pending")]
    NotPending(String),
}

/// Partition of a mission's task ids into pending, achieved and dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSet {
    pub pending: BTreeSet<String>,
    pub achieved: BTreeSet<String>,
    /// Dropped task id to the reason it was given up.
    pub dropped: BTreeMap<String, String>,
    pub current_exit: ManholeId,
}

pub fn goal_state(m: &Mission) -> GoalSet {
    GoalSet {
        pending: m.tasks.iter().map(|t| t.id.clone()).collect(),
        achieved: BTreeSet::new(),
        dropped: BTreeMap::new(),
        current_exit: m.exit,
    }
}

impl GoalSet {
    pub fn mark_achieved(&mut self, id: &str) -> Result<(), GoalError> {
        if !self.pending.remove(id) {
            return Err(GoalError::NotPending(id.to_string()));
        }
        self.achieved.insert(id.to_string());
        Ok(())
    }

    pub fn drop_task(&mut self, id: &str, reason: impl Into<String>) -> Result<(), GoalError> {
        if !self.pending.remove(id) {
            return Err(GoalError::NotPending(id.to_string()));
        }
        self.dropped.insert(id.to_string(), reason.into());
        Ok(())
    }

    /// True when pending, achieved and dropped are disjoint and cover exactly
    /// the mission's task ids.
    pub fn is_partition_of(&self, m: &Mission) -> bool {
        let all: BTreeSet<&str> = m.tasks.iter().map(|t| t.id.as_str()).collect();
        let mut seen = BTreeSet::new();
        let ids = self
            .pending
            .iter()
            .chain(&self.achieved)
            .chain(self.dropped.keys());
        for id in ids {
            if !seen.insert(id.as_str()) {
                return false;
            }
        }
        seen == all
    }
}
