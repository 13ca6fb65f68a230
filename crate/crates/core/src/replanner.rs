//! The plan / execute / replan loop over one mission.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::events::{EventKind, EventLog};
use crate::executive::{Context, ExecConfig, Executive, RunOutcome};
use crate::fusion::fuse;
use crate::mission::{goal_state, GoalSet, Mission};
use crate::planner::{maximize_goals, BeliefModel, Goal, Place, PlanningState, SymbolicPlan, TaskGoal};
use crate::sewer::{ManholeId, PipeId, SewerGraph};
use crate::simulator::{GroundTruth, ObstacleKind, ScriptedFault, SimConfig, SimError, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Planning,
    Executing,
    Replanning,
    DoneCompleted,
    DonePartial,
    DoneSafety,
    DoneStranded,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            RunStatus::DoneCompleted | RunStatus::DonePartial | RunStatus::DoneSafety | RunStatus::DoneStranded
        )
    }

    /// Process exit code for the `run` command.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::DoneCompleted => 0,
            RunStatus::DonePartial => 2,
            RunStatus::DoneSafety => 3,
            RunStatus::DoneStranded => 4,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub plan: SymbolicPlan,
    pub outcome: Option<RunOutcome>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub exec: ExecConfig,
}

/// Read-only view of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub status: RunStatus,
    pub place: Place,
    pub clock_s: f64,
    pub goals: GoalSet,
    pub blocked_pipes: Vec<PipeId>,
    /// Remaining actions of the current plan.
    pub plan: Vec<String>,
    pub replans: usize,
}

#[derive(Clone, Debug)]
pub struct MissionRun {
    pub mission: Mission,
    pub belief: BeliefModel,
    pub goals: GoalSet,
    pub history: Vec<HistoryEntry>,
    pub status: RunStatus,
    pub sim: Simulator,
    pub exec: Executive,
    pub log: EventLog,
    pending_block: Option<PipeId>,
}

impl MissionRun {
    /// A run in PLANNING; the belief starts as the published `map`.
    pub fn new(mission: Mission, map: SewerGraph, gt: GroundTruth, script: Vec<ScriptedFault>, config: RunConfig) -> Self {
        let state = PlanningState::at_entry(&map, &mission);
        let sim = Simulator::at_entry(gt, config.sim, script, &mission);
        Self {
            goals: goal_state(&mission),
            belief: BeliefModel::new(map),
            history: Vec::new(),
            status: RunStatus::Planning,
            sim,
            exec: Executive::new(state, config.exec),
            log: EventLog::new(),
            pending_block: None,
            mission,
        }
    }

    pub fn replans(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    pub fn inject_fault(&mut self, pipe: PipeId, kind: ObstacleKind, position_cm: f64) -> Result<(), SimError> {
        self.sim.inject_fault(pipe, kind, position_cm)
    }

    pub fn snapshot(&self) -> RunSnapshot {
        RunSnapshot {
            status: self.status,
            place: self.sim.robot.place,
            clock_s: self.sim.robot.clock_s,
            goals: self.goals.clone(),
            blocked_pipes: self.belief.blocked_pipes.iter().copied().collect(),
            plan: self.exec.remaining.iter().map(|a| a.symbolic().to_string()).collect(),
            replans: self.replans(),
        }
    }

    /// Advances by one planning step or one action. False once terminal.
    pub fn tick(&mut self) -> bool {
        match self.status {
            RunStatus::Planning => self.plan(None),
            RunStatus::Executing => {
                let mut cx = Context {
                    sim: &mut self.sim,
                    belief: &mut self.belief,
                    goals: &mut self.goals,
                    mission: &self.mission,
                    log: &mut self.log,
                };
                if let Some(outcome) = self.exec.step(&mut cx) {
                    self.on_outcome(outcome);
                }
            }
            RunStatus::Replanning => {
                let pipe = self.pending_block.take().expect("replanning needs a blocked pipe");
                self.handle_failure(pipe);
            }
            _ => return false,
        }
        !self.status.is_terminal()
    }

    pub fn run_to_end(&mut self) {
        while self.tick() {}
    }

    fn on_outcome(&mut self, outcome: RunOutcome) {
        if let Some(h) = self.history.last_mut() {
            h.outcome = Some(outcome.clone());
        }
        match outcome {
            RunOutcome::Completed => {
                self.drop_pending("not achieved");
                let complete = self.goals.dropped.is_empty() && self.goals.current_exit == self.mission.exit;
                self.finish(if complete { RunStatus::DoneCompleted } else { RunStatus::DonePartial });
            }
            RunOutcome::ReplanNeeded { pipe } => {
                self.pending_block = Some(pipe);
                self.status = RunStatus::Replanning;
            }
            RunOutcome::RecoveredAtSafety { cause, .. } => {
                self.drop_pending(&cause);
                self.finish(RunStatus::DoneSafety);
            }
            RunOutcome::Stranded { reason } => {
                self.drop_pending(&reason);
                self.finish(RunStatus::DoneStranded);
            }
        }
    }

    fn drop_pending(&mut self, reason: &str) {
        let ids: Vec<String> = self.goals.pending.iter().cloned().collect();
        for id in ids {
            if self.goals.drop_task(&id, reason).is_ok() {
                let payload = json!({"task_id": id, "status": "DROPPED", "reason": reason});
                self.log.emit(self.sim.robot.clock_s, EventKind::GoalUpdate, payload);
            }
        }
    }

    fn finish(&mut self, status: RunStatus) {
        self.status = status;
        let report = self.sim.elapsed_report();
        let payload = json!({
            "status": status,
            "place": self.sim.robot.place,
            "goals": self.goals,
            "blocked_pipes": self.belief.blocked_pipes,
            "clock_s": report.clock_s,
            "overrun": report.overrun,
        });
        self.log.emit(self.sim.robot.clock_s, EventKind::Terminal, payload);
    }

    /// Marks `blocked` impassable and plans again from where the robot is.
    pub fn handle_failure(&mut self, blocked: PipeId) {
        let fresh = self.belief.block(blocked);
        let payload = json!({
            "blocked": blocked,
            "blocked_pipes": self.belief.blocked_pipes,
            "from": self.exec.state.at,
        });
        self.log.emit(self.sim.robot.clock_s, EventKind::Replan, payload);
        if !fresh {
            // Hemmed in by a pipe already known blocked.
            self.drop_pending(&format!("blocked:{blocked}"));
            self.finish(RunStatus::DoneStranded);
            return;
        }
        self.plan(Some(blocked));
    }

    fn plan(&mut self, cause: Option<PipeId>) {
        let reason = cause.map_or_else(|| "unreachable".to_string(), |p| format!("blocked:{p}"));
        let tasks: Vec<TaskGoal> = self
            .mission
            .tasks
            .iter()
            .filter(|t| self.goals.pending.contains(&t.id))
            .map(|t| TaskGoal { task_id: t.id.clone(), goal: Goal::for_task(t) })
            .collect();
        self.exec.state.at = self.sim.robot.place;
        let mx = match maximize_goals(&self.belief, &self.exec.state, &tasks, self.goals.current_exit) {
            Ok(mx) => mx,
            Err(e) => {
                self.drop_pending(&reason);
                let payload = json!({"purpose": "mission", "error": e.to_string()});
                self.log.emit(self.sim.robot.clock_s, EventKind::PlanEmitted, payload);
                self.finish(RunStatus::DoneStranded);
                return;
            }
        };
        for id in &mx.dropped {
            if self.goals.drop_task(id, &reason).is_ok() {
                let payload = json!({"task_id": id, "status": "DROPPED", "reason": reason});
                self.log.emit(self.sim.robot.clock_s, EventKind::GoalUpdate, payload);
            }
        }
        let substituted: Option<ManholeId> = (mx.exit != self.goals.current_exit).then_some(mx.exit);
        self.goals.current_exit = mx.exit;
        let actions = match fuse(&mx.solution.plan, &self.belief, &self.exec.state, &self.mission.tasks) {
            Ok(a) => a,
            Err(e) => {
                self.drop_pending(&format!("fusion: {e}"));
                self.finish(RunStatus::DoneStranded);
                return;
            }
        };
        let lines: Vec<String> = mx.solution.plan.iter().map(|a| a.to_string()).collect();
        let payload = json!({
            "purpose": "mission",
            "plan": lines,
            "kept": mx.kept,
            "dropped": mx.dropped,
            "exit": mx.exit,
            "exit_substituted": substituted.is_some(),
        });
        self.log.emit(self.sim.robot.clock_s, EventKind::PlanEmitted, payload);
        self.history.push(HistoryEntry { plan: mx.solution.plan, outcome: None });
        let mut cx = Context {
            sim: &mut self.sim,
            belief: &mut self.belief,
            goals: &mut self.goals,
            mission: &self.mission,
            log: &mut self.log,
        };
        self.exec.load(actions, &mut cx);
        self.status = RunStatus::Executing;
    }
}

/// Runs a mission to a terminal status. The belief starts as `map`; `gt`
/// holds the truth, including obstacles the robot does not know about.
pub fn run_mission(
    mission: &Mission,
    map: &SewerGraph,
    gt: GroundTruth,
    script: Vec<ScriptedFault>,
    config: RunConfig,
) -> MissionRun {
    let mut run = MissionRun::new(mission.clone(), map.clone(), gt, script, config);
    run.run_to_end();
    run
}
