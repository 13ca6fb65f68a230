//! Keeping as many tasks as the belief still allows.

use super::heuristic::relaxed_plan_heuristic;
use super::{solve, BeliefModel, Goal, PlanError, PlanningState, Solution, TaskGoal};
use crate::sewer::ManholeId;

/// Above this many pending tasks the exact subset search gives way to greedy dropping.
pub const EXACT_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Maximized {
    /// Kept task ids, ascending.
    pub kept: Vec<String>,
    /// Task ids given up, ascending.
    pub dropped: Vec<String>,
    pub exit: ManholeId,
    pub solution: Solution,
}

impl Maximized {
    pub fn exit_substituted(&self, original: ManholeId) -> bool {
        self.exit != original
    }
}

struct Candidate {
    substitute: bool,
    len: usize,
    ids: Vec<String>,
    exit: ManholeId,
    solution: Solution,
}

impl Candidate {
    fn key(&self) -> (bool, usize, &[String]) {
        (self.substitute, self.len, &self.ids)
    }
}

struct Search<'a> {
    b: &'a BeliefModel,
    s: &'a PlanningState,
    exits: Vec<ManholeId>,
    original: ManholeId,
}

impl Search<'_> {
    /// Best plan for `tasks`: the original exit if possible, else the
    /// substitute giving the shortest plan.
    fn attempt(&self, tasks: &[&TaskGoal]) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for &exit in &self.exits {
            let substitute = exit != self.original;
            if substitute && best.as_ref().is_some_and(|c| !c.substitute) {
                break;
            }
            let mut goals: Vec<Goal> = tasks.iter().map(|t| t.goal).collect();
            goals.push(Goal::DockedAt(exit));
            let Ok(solution) = solve(self.b, self.s, &goals) else { continue };
            let c = Candidate {
                substitute,
                len: solution.plan.len(),
                ids: tasks.iter().map(|t| t.task_id.clone()).collect(),
                exit,
                solution,
            };
            if best.as_ref().is_none_or(|b| c.key() < b.key()) {
                best = Some(c);
            }
        }
        best
    }
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Finds a largest subset of `tasks` that can be completed before reaching a
/// recoverable exit.
///
/// Ties prefer keeping `exit`, then the shorter plan, then the
/// lexicographically smaller id list. With nothing achievable the result is
/// an escape to the nearest recoverable manhole; [`PlanError::Stranded`] if
/// there is none.
pub fn maximize_goals(
    b: &BeliefModel,
    s: &PlanningState,
    tasks: &[TaskGoal],
    exit: ManholeId,
) -> Result<Maximized, PlanError> {
    let mut sorted: Vec<&TaskGoal> = tasks.iter().collect();
    sorted.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    // Relaxed unreachability is exact unreachability, so these can be
    // discarded without searching.
    let reachable =
        |goals: &[Goal]| relaxed_plan_heuristic(b, s, goals).is_some();
    let mut exits: Vec<ManholeId> = std::iter::once(exit)
        .chain(b.graph.recoverable_manholes().filter(|&m| m != exit))
        .filter(|&m| b.graph.manholes.get(&m).is_some_and(|mh| mh.recoverable))
        .filter(|&m| reachable(&[Goal::DockedAt(m)]))
        .collect();
    exits.dedup();
    if exits.is_empty() {
        return Err(PlanError::Stranded);
    }
    let viable: Vec<&TaskGoal> = sorted.iter().copied().filter(|t| reachable(&[t.goal])).collect();
    let search = Search { b, s, exits, original: exit };

    let finish = |c: Candidate| {
        let dropped = sorted
            .iter()
            .map(|t| t.task_id.clone())
            .filter(|id| !c.ids.contains(id))
            .collect();
        Maximized { kept: c.ids, dropped, exit: c.exit, solution: c.solution }
    };

    if viable.len() > EXACT_LIMIT {
        let mut kept = viable;
        loop {
            if let Some(c) = search.attempt(&kept) {
                return Ok(finish(c));
            }
            if kept.pop().is_none() {
                return Err(PlanError::Stranded);
            }
        }
    }

    for k in (0..=viable.len()).rev() {
        let mut best: Option<Candidate> = None;
        combinations(viable.len(), k, &mut |idx| {
            let subset: Vec<&TaskGoal> = idx.iter().map(|&i| viable[i]).collect();
            if let Some(c) = search.attempt(&subset) {
                if best.as_ref().is_none_or(|b| c.key() < b.key()) {
                    best = Some(c);
                }
            }
        });
        if let Some(c) = best {
            return Ok(finish(c));
        }
    }
    Err(PlanError::Stranded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mission::goal_state;
    use crate::planner::{goal_atoms, Place};
    use crate::sewer::{End, PipeId};

    fn task_goals() -> Vec<TaskGoal> {
        fixtures::reference_mission()
            .tasks
            .iter()
            .map(|t| TaskGoal { task_id: t.id.clone(), goal: Goal::for_task(t) })
            .collect()
    }

    #[test]
    fn nothing_blocked_keeps_everything() {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let m = fixtures::reference_mission();
        let s = PlanningState::at_entry(&b.graph, &m);
        let r = maximize_goals(&b, &s, &task_goals(), m.exit).unwrap();
        assert_eq!(r.kept, ["insp-P4", "ws-P6"]);
        assert!(r.dropped.is_empty());
        assert_eq!(r.exit, ManholeId(9));
        let direct = solve(&b, &s, &goal_atoms(&m, &goal_state(&m))).unwrap();
        assert_eq!(r.solution.plan, direct.plan);
    }

    #[test]
    fn p5_blocked_mid_pipe_drops_both_and_escapes_west() {
        let mut b = BeliefModel::new(fixtures::ais_test_env());
        b.block(PipeId(5));
        let at = Place::in_pipe(PipeId(5), End::Manhole(ManholeId(3)));
        let s = PlanningState::new(&b.graph, at);
        let r = maximize_goals(&b, &s, &task_goals(), ManholeId(9)).unwrap();
        assert!(r.kept.is_empty());
        assert_eq!(r.exit, ManholeId(3));
        assert_eq!(r.solution.plan.len(), 2);
    }

    #[test]
    fn sealed_pipe_is_stranded() {
        let mut b = BeliefModel::new(fixtures::ais_test_env());
        b.block(PipeId(8));
        // facing nowhere useful: the stub end of P6 with P6 itself blocked
        b.block(PipeId(6));
        let at = Place::in_pipe(PipeId(6), End::Stub);
        let s = PlanningState::new(&b.graph, at);
        assert_eq!(maximize_goals(&b, &s, &task_goals(), ManholeId(9)), Err(PlanError::Stranded));
    }

    #[test]
    fn combinations_in_order() {
        let mut seen = Vec::new();
        combinations(4, 2, &mut |c| seen.push(c.to_vec()));
        assert_eq!(seen, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]);
        let mut n = 0;
        combinations(3, 0, &mut |_| n += 1);
        assert_eq!(n, 1);
    }
}
