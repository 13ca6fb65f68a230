use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::GroundedAction;
use crate::mission::GoalSet;
use crate::planner::{BeliefModel, PlanningState};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub state: PlanningState,
    pub goals: GoalSet,
    pub belief: BeliefModel,
    pub remaining: Vec<GroundedAction>,
    pub clock_s: f64,
    /// Actions started over the whole run.
    pub actions_done: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        if c.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(c.version));
        }
        Ok(c)
    }
}
