//! Plan validation by direct simulation on [`Place`], independent of the
//! grounded STRIPS task.

use thiserror::Error;

use super::{BeliefModel, Goal, Place, PlanningState, SymbolicAction};
use crate::sewer::{manhole_type_designator, traversable, End, PipeId, Target};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {reason}")]
pub struct Violation {
    /// 0-based index of the failing action; `plan.len()` for unmet goals.
    pub step: usize,
    pub reason: String,
}

fn usable(b: &BeliefModel, pipe: PipeId) -> Result<(), String> {
    if b.is_blocked(pipe) {
        Err(format!("{pipe} is blocked"))
    } else {
        Ok(())
    }
}

/// Applies one symbolic action to `s`, inserting the implicit reverse the
/// solution file leaves out. Errors name the violated precondition.
pub fn apply_action(b: &BeliefModel, s: &mut PlanningState, a: &SymbolicAction) -> Result<(), String> {
    let g = &b.graph;
    match a {
        SymbolicAction::DrivePipeToManhole { pipe, manhole } => {
            let p = g.pipe(*pipe).map_err(|e| e.to_string())?;
            let end = p
                .endpoint_at(*manhole)
                .ok_or_else(|| format!("{pipe} does not reach {manhole}"))?;
            match s.at {
                Place::InPipe { pipe: here, toward, .. } if here == *pipe => {
                    if toward != End::Manhole(*manhole) {
                        usable(b, *pipe)?;
                    }
                }
                Place::AtManholePort { manhole: m, port } if m != *manhole => {
                    let via = g.manhole(m).ok().and_then(|mh| mh.port(port)).map(|p| p.pipe);
                    if via != Some(*pipe) {
                        return Err(format!("robot at {} is not in {pipe}", s.at));
                    }
                    usable(b, *pipe)?;
                }
                _ => return Err(format!("robot at {} is not in {pipe}", s.at)),
            }
            s.at = Place::AtManholePort { manhole: *manhole, port: end.port };
        }
        SymbolicAction::DriveManhole { designator, from, to, manhole, pipes } => {
            let m = g.manhole(*manhole).map_err(|e| e.to_string())?;
            let listed: Vec<PipeId> = m.ports.iter().map(|p| p.pipe).collect();
            if &listed != pipes {
                return Err(format!("pipe list does not match {manhole}"));
            }
            if *designator != manhole_type_designator(m) {
                return Err(format!("{manhole} is not {designator}"));
            }
            if s.at != (Place::AtManholePort { manhole: *manhole, port: *from }) {
                return Err(format!("robot at {} is not at port {from} of {manhole}", s.at));
            }
            let t = traversable(m, *from, *to, &b.limits).map_err(|e| e.to_string())?;
            if let Some(reason) = t.reason() {
                return Err(format!("{manhole} {from}->{to} not traversable ({reason})"));
            }
            let out = m.port(*to).map(|p| p.pipe).ok_or("unknown port")?;
            usable(b, out)?;
            let toward = g.pipe(out).map_err(|e| e.to_string())?.other_end(End::Manhole(*manhole));
            s.at = Place::InPipe { pipe: out, toward, docked: Some(*manhole) };
        }
        SymbolicAction::TakeWaterSample { pipe } | SymbolicAction::InspectPipe { pipe } => {
            usable(b, *pipe)?;
            let sample = matches!(a, SymbolicAction::TakeWaterSample { .. });
            match s.at {
                Place::InPipe { pipe: here, .. } if here == *pipe => {}
                Place::AtManholePort { manhole, port }
                    if !sample
                        && g.manhole(manhole).ok().and_then(|m| m.port(port)).map(|p| p.pipe)
                            == Some(*pipe) => {}
                _ => return Err(format!("robot at {} cannot reach {pipe}", s.at)),
            }
            if sample {
                s.sampled.insert(*pipe);
            } else {
                s.inspected.insert(*pipe);
            }
        }
    }
    s.note_place(g);
    Ok(())
}

/// Replays `plan` from `s` and checks every goal at the end.
pub fn validate_plan(
    b: &BeliefModel,
    s: &PlanningState,
    plan: &[SymbolicAction],
    goals: &[Goal],
) -> Result<PlanningState, Violation> {
    let mut state = s.clone();
    for (step, a) in plan.iter().enumerate() {
        apply_action(b, &mut state, a).map_err(|reason| Violation { step, reason })?;
    }
    if let Some(g) = goals.iter().find(|g| !g.holds(&state)) {
        let what = match g {
            Goal::Sampled(p) => format!("{p} not sampled"),
            Goal::Inspected(p) => format!("{p} not inspected"),
            Goal::Reached(Target::Pipe(p)) => format!("{p} not reached"),
            Goal::Reached(Target::Manhole(m)) => format!("{m} not reached"),
            Goal::DockedAt(m) => format!("robot not at {m}"),
        };
        return Err(Violation { step: plan.len(), reason: what });
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mission::goal_state;
    use crate::planner::{goal_atoms, parse_solution};
    use crate::sewer::ManholeId;

    fn setup() -> (BeliefModel, PlanningState, Vec<Goal>) {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let m = fixtures::reference_mission();
        let s = PlanningState::at_entry(&b.graph, &m);
        let goals = goal_atoms(&m, &goal_state(&m));
        (b, s, goals)
    }

    #[test]
    fn listing_is_valid() {
        let (b, s, goals) = setup();
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let end = validate_plan(&b, &s, &plan, &goals).unwrap();
        assert!(Goal::DockedAt(ManholeId(9)).holds(&end));
    }

    #[test]
    fn swapped_steps_fail_at_the_swap() {
        let (b, s, goals) = setup();
        let mut plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        plan.swap(4, 5);
        assert_eq!(validate_plan(&b, &s, &plan, &goals).unwrap_err().step, 4);
    }

    #[test]
    fn truncated_plan_misses_goal() {
        let (b, s, goals) = setup();
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let v = validate_plan(&b, &s, &plan[..13], &goals).unwrap_err();
        assert_eq!(v.step, 13);
        assert!(v.reason.contains("M9"));
    }

    #[test]
    fn blocked_pipe_rejected() {
        let (mut b, s, goals) = setup();
        b.block(PipeId(5));
        let plan = parse_solution(fixtures::REFERENCE_PLAN).unwrap();
        let v = validate_plan(&b, &s, &plan, &goals).unwrap_err();
        assert_eq!(v.step, 3);
    }

    #[test]
    fn untraversable_turn_rejected() {
        let (b, s, _) = setup();
        let plan = parse_solution(
            "DRIVE_PIPE_TO_MANHOLE P12 M2\nDRIVE_MANHOLE_TYPE_2_FROM_1_TO_2 M2 P12 P1\nDRIVE_PIPE_TO_MANHOLE P1 M3\nDRIVE_MANHOLE_TYPE_3_TYPE_B_FROM_3_TO_2 M3 P5 P2 P1\n",
        )
        .unwrap();
        let v = validate_plan(&b, &s, &plan, &[]).unwrap_err();
        assert_eq!(v.step, 3);
        assert!(v.reason.contains("turn"));
    }
}
