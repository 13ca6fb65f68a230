//! The action controller: runs grounded actions as jobs against the
//! simulator, recovers from blockages, reboots on malfunctions and retreats
//! to a recoverable manhole when in danger.

mod checkpoint;
mod jobs;
mod recovery;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::events::{EventKind, EventLog};
use crate::fusion::{fuse, GroundedAction};
use crate::mission::{GoalSet, Mission};
use crate::planner::{solve, BeliefModel, Goal, PlanningState};
use crate::sewer::{ManholeId, PipeId};
use crate::simulator::{ErrorClass, ErrorCode, Job, JobKind, JobResult, Simulator};

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_VERSION};
pub use jobs::expand;
pub use recovery::{recovery_step, IllegalTransition, RecoveryState, Signal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    /// Phase 1 backs off this far before retrying.
    pub backup_cm: f64,
    /// Lifting the head needs at least this pipe diameter.
    pub lift_min_diameter_cm: f64,
    pub allow_push: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self { backup_cm: 20.0, lift_min_diameter_cm: 40.0, allow_push: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunOutcome {
    Completed,
    ReplanNeeded { pipe: PipeId },
    RecoveredAtSafety { manhole: ManholeId, cause: String },
    Stranded { reason: String },
}

/// Everything the executive reads or mutates besides its own state.
pub struct Context<'a> {
    pub sim: &'a mut Simulator,
    pub belief: &'a mut BeliefModel,
    pub goals: &'a mut GoalSet,
    pub mission: &'a Mission,
    pub log: &'a mut EventLog,
}

enum Flow {
    Next,
    Restart,
    Exit(RunOutcome),
}

fn opposite(kind: JobKind) -> JobKind {
    if kind == JobKind::DriveBackward {
        JobKind::DriveForward
    } else {
        JobKind::DriveBackward
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Executive {
    pub state: PlanningState,
    pub remaining: VecDeque<GroundedAction>,
    pub recovery: RecoveryState,
    /// Actions completed over the whole run; also the index of the next one.
    pub actions_done: usize,
    pub config: ExecConfig,
    saved: String,
}

impl Executive {
    pub fn new(state: PlanningState, config: ExecConfig) -> Self {
        Self {
            state,
            remaining: VecDeque::new(),
            recovery: RecoveryState::Executing,
            actions_done: 0,
            config,
            saved: String::new(),
        }
    }

    pub fn checkpoint(&self, goals: &GoalSet, belief: &BeliefModel, clock_s: f64) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            state: self.state.clone(),
            goals: goals.clone(),
            belief: belief.clone(),
            remaining: self.remaining.iter().cloned().collect(),
            clock_s,
            actions_done: self.actions_done,
        }
    }

    /// Rebuilds an executive from `c`; goals and belief are returned alongside.
    pub fn restore(c: &Checkpoint, config: ExecConfig) -> (Self, GoalSet, BeliefModel) {
        let mut e = Self::new(c.state.clone(), config);
        e.remaining = c.remaining.iter().cloned().collect();
        e.actions_done = c.actions_done;
        e.saved = c.to_json();
        (e, c.goals.clone(), c.belief.clone())
    }

    /// The last checkpoint written, as JSON.
    pub fn saved_checkpoint(&self) -> &str {
        &self.saved
    }

    fn save(&mut self, cx: &Context) {
        self.saved = self.checkpoint(cx.goals, cx.belief, cx.sim.robot.clock_s).to_json();
    }

    /// Replaces the action list and checkpoints.
    pub fn load(&mut self, actions: Vec<GroundedAction>, cx: &mut Context) {
        self.remaining = actions.into();
        self.recovery = RecoveryState::Executing;
        self.state.at = cx.sim.robot.place;
        self.save(cx);
    }

    /// Runs `actions` to an outcome.
    pub fn execute(&mut self, actions: Vec<GroundedAction>, cx: &mut Context) -> RunOutcome {
        self.load(actions, cx);
        loop {
            if let Some(o) = self.step(cx) {
                return o;
            }
        }
    }

    /// Executes the next action; `Some` once the action list is finished or
    /// execution has to hand control back.
    pub fn step(&mut self, cx: &mut Context) -> Option<RunOutcome> {
        let Some(a) = self.remaining.front().cloned() else {
            return Some(RunOutcome::Completed);
        };
        if let Err(o) = self.run_action(&a, cx) {
            return Some(o);
        }
        self.remaining.pop_front();
        self.finish_action(&a, cx);
        self.save(cx);
        self.remaining.is_empty().then_some(RunOutcome::Completed)
    }

    fn transition(&mut self, sig: Signal, note: Option<&str>, cx: &mut Context) {
        let next = recovery_step(self.recovery, sig).expect("recovery transitions are legal by construction");
        if next != self.recovery {
            let mut payload = json!({"from": self.recovery, "to": next, "signal": sig});
            if let Some(n) = note {
                payload["note"] = json!(n);
            }
            cx.log.emit(cx.sim.robot.clock_s, EventKind::RecoveryTransition, payload);
            self.recovery = next;
        }
    }

    fn run_job(&mut self, job: &Job, cx: &mut Context) -> JobResult {
        let r = cx.sim.run_job(job);
        let payload = match &r {
            Ok(()) => json!({"job": job, "ok": true}),
            Err(e) => json!({"job": job, "ok": false, "error": e.class}),
        };
        cx.log.emit(cx.sim.robot.clock_s, EventKind::JobResult, payload);
        if r.is_ok() && self.recovery == RecoveryState::Rebooting {
            self.transition(Signal::Ok, None, cx);
            self.transition(Signal::Ok, None, cx);
        }
        r
    }

    fn start_action(&mut self, a: &GroundedAction, cx: &mut Context) {
        cx.sim.begin_action(self.actions_done);
        let payload = json!({"index": self.actions_done, "symbolic": a.symbolic().to_string(), "action": a});
        cx.log.emit(cx.sim.robot.clock_s, EventKind::ActionStart, payload);
    }

    fn run_action(&mut self, a: &GroundedAction, cx: &mut Context) -> Result<(), RunOutcome> {
        self.start_action(a, cx);
        'attempt: loop {
            for job in expand(a) {
                let flow = match self.run_job(&job, cx) {
                    Ok(()) => Flow::Next,
                    Err(e) => self.on_error(e, &job, cx),
                };
                match flow {
                    Flow::Next => {}
                    Flow::Restart => continue 'attempt,
                    Flow::Exit(o) => return Err(o),
                }
            }
            return Ok(());
        }
    }

    fn on_error(&mut self, e: ErrorCode, job: &Job, cx: &mut Context) -> Flow {
        cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
        match e.class {
            ErrorClass::Blockage => match e.pipe {
                Some(pipe) => self.recover(job, pipe, cx),
                None => self.escalate_danger(&e, cx),
            },
            _ => self.escalate(&e, cx),
        }
    }

    /// Danger or malfunction, from any state.
    fn escalate(&mut self, e: &ErrorCode, cx: &mut Context) -> Flow {
        match e.class {
            ErrorClass::Malfunction => {
                self.transition(Signal::Malfunction, None, cx);
                if self.recovery == RecoveryState::Retreat {
                    return Flow::Exit(self.retreat_to_safety("malfunction".into(), None, cx));
                }
                cx.sim.reboot();
                match Checkpoint::from_json(&self.saved) {
                    Ok(c) => {
                        self.state = c.state;
                        *cx.goals = c.goals;
                        *cx.belief = c.belief;
                        self.remaining = c.remaining.into();
                        self.actions_done = c.actions_done;
                        Flow::Restart
                    }
                    Err(err) => {
                        self.recovery = RecoveryState::Stranded;
                        Flow::Exit(RunOutcome::Stranded { reason: err.to_string() })
                    }
                }
            }
            _ => self.escalate_danger(e, cx),
        }
    }

    fn escalate_danger(&mut self, e: &ErrorCode, cx: &mut Context) -> Flow {
        self.transition(Signal::Danger, None, cx);
        let cause = match e.pipe {
            Some(p) => format!("danger:{p}"),
            None => "danger".into(),
        };
        Flow::Exit(self.retreat_to_safety(cause, e.pipe, cx))
    }

    /// One recovery attempt's result: `None` to fall through to the next phase.
    fn settle(&mut self, r: JobResult, cx: &mut Context) -> Option<Flow> {
        match r {
            Ok(()) => {
                self.transition(Signal::Ok, None, cx);
                self.transition(Signal::Ok, None, cx);
                Some(Flow::Next)
            }
            Err(e) if e.class == ErrorClass::Blockage => None,
            Err(e) => {
                cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
                Some(self.escalate(&e, cx))
            }
        }
    }

    fn recover(&mut self, job: &Job, pipe: PipeId, cx: &mut Context) -> Flow {
        let speed = job.speed_cm_s.unwrap_or(cx.belief.limits.cruise_speed_cm_s);
        let diameter = cx.belief.graph.pipes.get(&pipe).map_or(0.0, |p| p.diameter_cm);

        self.transition(Signal::Blockage, None, cx);
        let backup = Job::motion(opposite(job.kind), speed, self.config.backup_cm);
        if let Err(e) = self.run_job(&backup, cx) {
            if e.class != ErrorClass::Blockage {
                cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
                return self.escalate(&e, cx);
            }
        }
        let r = self.run_job(job, cx);
        if let Some(f) = self.settle(r, cx) {
            return f;
        }

        if diameter >= self.config.lift_min_diameter_cm {
            self.transition(Signal::Blockage, None, cx);
            if let Err(e) = self.run_job(&Job::simple(JobKind::LiftHead), cx) {
                cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
                return self.escalate(&e, cx);
            }
            let r = self.run_job(job, cx);
            if let Err(e) = self.run_job(&Job::simple(JobKind::LowerHead), cx) {
                cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
                return self.escalate(&e, cx);
            }
            if let Some(f) = self.settle(r, cx) {
                return f;
            }
        } else {
            let note = format!("head cannot be lifted in a {diameter} cm pipe");
            self.transition(Signal::Blockage, Some(&note), cx);
        }

        if self.config.allow_push {
            self.transition(Signal::Blockage, None, cx);
            let r = self.run_job(&Job::motion(JobKind::Push, speed, diameter), cx);
            if r.is_ok() {
                self.transition(Signal::Ok, None, cx);
                // carry on with the interrupted drive
                let again = self.run_job(job, cx);
                return match again {
                    Ok(()) => {
                        self.transition(Signal::Ok, None, cx);
                        Flow::Next
                    }
                    Err(e) => self.on_error(e, job, cx),
                };
            }
            if let Some(f) = self.settle(r, cx) {
                return f;
            }
            self.transition(Signal::Blockage, None, cx);
        } else {
            self.transition(Signal::Blockage, Some("pushing disabled"), cx);
            self.transition(Signal::Blockage, None, cx);
        }

        // Persistent: turn round and hand back for replanning.
        cx.sim.turn_round();
        self.state.at = cx.sim.robot.place;
        self.state.note_place(&cx.belief.graph);
        Flow::Exit(RunOutcome::ReplanNeeded { pipe })
    }

    fn finish_action(&mut self, a: &GroundedAction, cx: &mut Context) {
        self.state.at = cx.sim.robot.place;
        self.state.note_place(&cx.belief.graph);
        match a {
            GroundedAction::TakeWaterSample { pipe, .. } => {
                self.state.sampled.insert(*pipe);
            }
            GroundedAction::InspectPipe { pipe, .. } => {
                self.state.inspected.insert(*pipe);
            }
            _ => {}
        }
        let pending: Vec<String> = cx.goals.pending.iter().cloned().collect();
        for id in pending {
            let Some(task) = cx.mission.task(&id) else { continue };
            if Goal::for_task(task).holds(&self.state) && cx.goals.mark_achieved(&id).is_ok() {
                cx.log.emit(cx.sim.robot.clock_s, EventKind::GoalUpdate, json!({"task_id": id, "status": "ACHIEVED"}));
            }
        }
        self.actions_done += 1;
    }

    /// Drives to the nearest recoverable manhole without further recovery.
    fn retreat_to_safety(&mut self, cause: String, pipe: Option<PipeId>, cx: &mut Context) -> RunOutcome {
        if let Some(p) = pipe {
            cx.belief.block(p);
            cx.sim.turn_round();
        }
        self.state.at = cx.sim.robot.place;
        let mut best: Option<(usize, ManholeId, Vec<GroundedAction>)> = None;
        let safe: Vec<ManholeId> = cx.belief.graph.recoverable_manholes().collect();
        for m in safe {
            let Ok(sol) = solve(cx.belief, &self.state, &[Goal::DockedAt(m)]) else { continue };
            if best.as_ref().is_some_and(|(len, _, _)| *len <= sol.plan.len()) {
                continue;
            }
            if let Ok(actions) = fuse(&sol.plan, cx.belief, &self.state, &cx.mission.tasks) {
                best = Some((sol.plan.len(), m, actions));
            }
        }
        let Some((_, manhole, actions)) = best else {
            self.transition(Signal::Trapped, None, cx);
            return RunOutcome::Stranded { reason: format!("{cause}: no recoverable manhole reachable") };
        };
        let lines: Vec<String> = actions.iter().map(|a| a.symbolic().to_string()).collect();
        cx.log.emit(
            cx.sim.robot.clock_s,
            EventKind::PlanEmitted,
            json!({"purpose": "retreat", "exit": manhole, "plan": lines}),
        );
        for a in &actions {
            self.start_action(a, cx);
            for job in expand(a) {
                if let Err(e) = self.run_job(&job, cx) {
                    cx.log.emit(cx.sim.robot.clock_s, EventKind::Error, &e);
                    self.transition(Signal::Trapped, None, cx);
                    return RunOutcome::Stranded { reason: format!("{cause}: retreat failed: {}", e.detail) };
                }
            }
            self.finish_action(a, cx);
        }
        self.remaining.clear();
        self.transition(Signal::Safe, None, cx);
        RunOutcome::RecoveredAtSafety { manhole, cause }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mission::goal_state;
    use crate::planner::{goal_atoms, solve};
    use crate::simulator::{Fault, GroundTruth, ScriptedFault, SimConfig, Trigger};

    struct World {
        sim: Simulator,
        belief: BeliefModel,
        goals: GoalSet,
        mission: Mission,
        log: EventLog,
    }

    impl World {
        fn new(script: Vec<ScriptedFault>) -> Self {
            let g = fixtures::ais_test_env();
            let mission = fixtures::reference_mission();
            let sim = Simulator::at_entry(GroundTruth::new(g.clone(), 0), SimConfig::default(), script, &mission);
            Self { sim, belief: BeliefModel::new(g), goals: goal_state(&mission), mission, log: EventLog::new() }
        }

        fn cx(&mut self) -> Context<'_> {
            Context {
                sim: &mut self.sim,
                belief: &mut self.belief,
                goals: &mut self.goals,
                mission: &self.mission,
                log: &mut self.log,
            }
        }

        fn reference_actions(&self) -> (PlanningState, Vec<GroundedAction>) {
            let s = PlanningState::at_entry(&self.belief.graph, &self.mission);
            let sol = solve(&self.belief, &s, &goal_atoms(&self.mission, &self.goals)).unwrap();
            let actions = fuse(&sol.plan, &self.belief, &s, &self.mission.tasks).unwrap();
            (s, actions)
        }
    }

    #[test]
    fn empty_list_completes() {
        let mut w = World::new(Vec::new());
        let s = PlanningState::at_entry(&w.belief.graph, &w.mission);
        let mut e = Executive::new(s, ExecConfig::default());
        assert_eq!(e.execute(Vec::new(), &mut w.cx()), RunOutcome::Completed);
        assert!(w.log.events().is_empty());
    }

    #[test]
    fn fault_free_reference() {
        let mut w = World::new(Vec::new());
        let (s, actions) = w.reference_actions();
        let mut e = Executive::new(s, ExecConfig::default());
        assert_eq!(e.execute(actions, &mut w.cx()), RunOutcome::Completed);
        assert_eq!(w.goals.achieved.len(), 2);
        assert_eq!(e.actions_done, 14);
    }

    #[test]
    fn transient_malfunction_reboots_and_resumes() {
        let script = vec![ScriptedFault { trigger: Trigger::BeforeAction { index: 7 }, fault: Fault::Malfunction { failures: 1 } }];
        let mut w = World::new(script);
        let (s, actions) = w.reference_actions();
        let mut e = Executive::new(s, ExecConfig::default());
        assert_eq!(e.execute(actions, &mut w.cx()), RunOutcome::Completed);
        assert_eq!(w.goals.achieved.len(), 2);
        let to: Vec<String> = w
            .log
            .events()
            .iter()
            .filter(|ev| ev.kind == EventKind::RecoveryTransition)
            .map(|ev| ev.payload["to"].as_str().unwrap().to_string())
            .collect();
        assert_eq!(to, ["REBOOTING", "RESUMED", "EXECUTING"]);
    }

    #[test]
    fn repeated_malfunction_retreats() {
        let script = vec![ScriptedFault { trigger: Trigger::BeforeAction { index: 2 }, fault: Fault::Malfunction { failures: 2 } }];
        let mut w = World::new(script);
        let (s, actions) = w.reference_actions();
        let mut e = Executive::new(s, ExecConfig::default());
        let out = e.execute(actions, &mut w.cx());
        assert!(matches!(out, RunOutcome::RecoveredAtSafety { ref cause, .. } if cause == "malfunction"), "{out:?}");
        assert_eq!(e.recovery, RecoveryState::RecoveredAtSafety);
    }

    #[test]
    fn checkpoint_round_trip_mid_mission() {
        let mut w = World::new(Vec::new());
        let (s, actions) = w.reference_actions();
        let mut e = Executive::new(s, ExecConfig::default());
        e.load(actions, &mut w.cx());
        for _ in 0..5 {
            assert!(e.step(&mut w.cx()).is_none());
        }
        let c = Checkpoint::from_json(e.saved_checkpoint()).unwrap();
        assert_eq!(c.remaining.len(), 9);
        let (back, goals, belief) = Executive::restore(&c, ExecConfig::default());
        assert_eq!(back, e);
        assert_eq!((goals, belief), (w.goals.clone(), w.belief.clone()));
    }

    #[test]
    fn corrupt_checkpoint_rejected() {
        assert!(matches!(Checkpoint::from_json("{"), Err(CheckpointError::Corrupt(_))));
        let mut w = World::new(Vec::new());
        let (s, _) = w.reference_actions();
        let c = Executive::new(s, ExecConfig::default()).checkpoint(&w.goals, &w.belief, 0.0);
        let text = c.to_json().replace("\"version\":1", "\"version\":9");
        assert_eq!(Checkpoint::from_json(&text), Err(CheckpointError::Version(9)));
        let _ = w.cx();
    }
}
