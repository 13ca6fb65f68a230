//! Delete-relaxation heuristic: additive fact costs choose best supporters,
//! and the relaxed plan is the set of supporters needed to reach the goals.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::ground::{FactId, GroundTask};
use super::search::Bits;
use super::{ground, BeliefModel, Goal, PlanningState};

const INF: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relaxed {
    /// Summed cost of the relaxed plan, `None` when some goal is unreachable
    /// even ignoring deletes.
    pub h: Option<u32>,
    /// Ops of the relaxed plan, ascending.
    pub plan: Vec<u32>,
    /// Ops applicable in the state that achieve a fact the relaxed plan needs,
    /// in expansion order.
    pub helpful: Vec<u32>,
}

/// Cheapest relaxed cost of every fact and the op achieving it. Op costs
/// combine their preconditions by sum (`additive`) or by max.
fn fact_costs(task: &GroundTask, state: &Bits, additive: bool) -> (Vec<u64>, Vec<u32>) {
    let n = task.facts.len();
    let mut cost = vec![INF; n];
    let mut supporter = vec![u32::MAX; n];
    let mut unsat: Vec<usize> = task
        .ops
        .iter()
        .map(|op| {
            let mut pre = op.pre.clone();
            pre.sort_unstable();
            pre.dedup();
            pre.len()
        })
        .collect();
    let mut heap = BinaryHeap::new();
    for f in state.ones() {
        cost[f as usize] = 0;
        heap.push(Reverse((0u64, f)));
    }
    let fire = |op: u32, cost: &mut Vec<u64>, supporter: &mut Vec<u32>, heap: &mut BinaryHeap<_>| {
        let o = &task.ops[op as usize];
        let pre = o.pre.iter().map(|&p| cost[p as usize]);
        let pre = if additive { pre.sum::<u64>() } else { pre.max().unwrap_or(0) };
        let base = pre + u64::from(o.cost);
        for &g in &o.add {
            if base < cost[g as usize] {
                cost[g as usize] = base;
                supporter[g as usize] = op;
                heap.push(Reverse((base, g)));
            }
        }
    };
    for (i, op) in task.ops.iter().enumerate() {
        if op.pre.is_empty() {
            fire(i as u32, &mut cost, &mut supporter, &mut heap);
        }
    }
    while let Some(Reverse((c, f))) = heap.pop() {
        if c > cost[f as usize] {
            continue;
        }
        for &op in &task.by_pre[f as usize] {
            unsat[op as usize] -= 1;
            if unsat[op as usize] == 0 {
                fire(op, &mut cost, &mut supporter, &mut heap);
            }
        }
    }
    (cost, supporter)
}

/// Admissible max-cost estimate, `None` when a goal is relaxed-unreachable.
pub(crate) fn h_max(task: &GroundTask, state: &Bits) -> Option<u32> {
    let (cost, _) = fact_costs(task, state, false);
    let mut h = 0;
    for &g in &task.goals {
        h = h.max(cost[g as usize]);
    }
    (h != INF).then_some(h as u32)
}

pub(crate) fn evaluate(task: &GroundTask, state: &Bits) -> Relaxed {
    let n = task.facts.len();
    let (cost, supporter) = fact_costs(task, state, true);

    if task.goals.iter().any(|&g| cost[g as usize] == INF) {
        return Relaxed { h: None, plan: Vec::new(), helpful: Vec::new() };
    }

    let mut in_plan = vec![false; task.ops.len()];
    let mut needed = vec![false; n];
    let mut stack: Vec<FactId> = task.goals.clone();
    while let Some(f) = stack.pop() {
        if needed[f as usize] || state.get(f) {
            continue;
        }
        needed[f as usize] = true;
        let op = supporter[f as usize];
        if !in_plan[op as usize] {
            in_plan[op as usize] = true;
            stack.extend(&task.ops[op as usize].pre);
        }
    }
    let plan: Vec<u32> = (0..task.ops.len() as u32).filter(|&o| in_plan[o as usize]).collect();
    let h = plan.iter().map(|&o| task.ops[o as usize].cost).sum();
    let helpful = super::search::applicable(task, state)
        .into_iter()
        .filter(|&o| task.ops[o as usize].add.iter().any(|&g| needed[g as usize]))
        .collect();
    Relaxed { h: Some(h), plan, helpful }
}

/// Relaxed-plan length of `goals` from `s`; `None` means unreachable.
pub fn relaxed_plan_heuristic(b: &BeliefModel, s: &PlanningState, goals: &[Goal]) -> Option<u32> {
    let task = ground(b, s, goals);
    let state = Bits::from_facts(task.facts.len(), &task.init);
    evaluate(&task, &state).h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sewer::{ManholeId, PipeId, Target};

    #[test]
    fn zero_at_goal() {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let s = PlanningState::at_entry(&b.graph, &fixtures::reference_mission());
        assert_eq!(relaxed_plan_heuristic(&b, &s, &[]), Some(0));
        assert_eq!(
            relaxed_plan_heuristic(&b, &s, &[Goal::Reached(Target::Pipe(PipeId(12)))]),
            Some(0)
        );
    }

    #[test]
    fn one_drive_to_next_manhole() {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let s = PlanningState::at_entry(&b.graph, &fixtures::reference_mission());
        let goal = [Goal::Reached(Target::Manhole(ManholeId(2)))];
        assert_eq!(relaxed_plan_heuristic(&b, &s, &goal), Some(1));
        // behind the robot costs the same: reversing is free
        let goal = [Goal::Reached(Target::Manhole(ManholeId(1)))];
        assert_eq!(relaxed_plan_heuristic(&b, &s, &goal), Some(1));
    }

    #[test]
    fn unreachable_is_none() {
        let mut b = BeliefModel::new(fixtures::ais_test_env());
        b.block(PipeId(5));
        b.block(PipeId(3));
        let s = PlanningState::at_entry(&b.graph, &fixtures::reference_mission());
        assert_eq!(relaxed_plan_heuristic(&b, &s, &[Goal::Sampled(PipeId(6))]), None);
    }
}
