//! Enforced hill-climbing with helpful actions, falling back to complete
//! greedy best-first search. Goal sets that only ask for positions are
//! searched optimally with A* instead.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use super::ground::{FactId, GroundTask};
use super::heuristic::{evaluate, h_max};
use super::{ground, BeliefModel, Goal, PlanError, PlanningState, SymbolicPlan};

/// A packed set of fact ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub fn from_facts(n: usize, facts: &[FactId]) -> Self {
        let mut b = Bits(vec![0; n.div_ceil(64)]);
        for &f in facts {
            b.set(f, true);
        }
        b
    }

    pub fn get(&self, f: FactId) -> bool {
        self.0[(f / 64) as usize] >> (f % 64) & 1 == 1
    }

    pub fn set(&mut self, f: FactId, v: bool) {
        let w = &mut self.0[(f / 64) as usize];
        if v {
            *w |= 1 << (f % 64);
        } else {
            *w &= !(1 << (f % 64));
        }
    }

    pub fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    pub fn ones(&self) -> impl Iterator<Item = FactId> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            (0..64u32).filter(move |b| w >> b & 1 == 1).map(move |b| i as u32 * 64 + b)
        })
    }
}

/// Ops whose preconditions all hold, in expansion order.
pub(crate) fn applicable(task: &GroundTask, state: &Bits) -> Vec<u32> {
    let mut ops: Vec<u32> = state
        .ones()
        .flat_map(|f| task.by_first_pre[f as usize].iter().copied())
        .filter(|&o| task.ops[o as usize].pre.iter().all(|&p| state.get(p)))
        .collect();
    ops.sort_unstable();
    ops
}

fn apply(task: &GroundTask, state: &Bits, op: u32) -> Bits {
    let o = &task.ops[op as usize];
    let mut next = state.clone();
    for &f in &o.del {
        next.set(f, false);
    }
    for &f in &o.add {
        next.set(f, true);
    }
    next
}

fn satisfied(task: &GroundTask, state: &Bits) -> bool {
    task.goals.iter().all(|&g| state.get(g))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub evaluated: usize,
    pub expanded: usize,
    /// False when hill-climbing stalled and best-first search took over.
    pub hill_climbing: bool,
    /// True when the plan came from A* and is cost-optimal.
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Ground op indices, reverses included.
    pub ops: Vec<u32>,
    /// The rendered plan, reverses removed.
    pub plan: SymbolicPlan,
    pub stats: SearchStats,
}

struct Node {
    state: Bits,
    parent: usize,
    op: u32,
}

fn path(arena: &[Node], mut n: usize) -> Vec<u32> {
    let mut ops = Vec::new();
    while n != 0 {
        ops.push(arena[n].op);
        n = arena[n].parent;
    }
    ops.reverse();
    ops
}

fn hill_climb(task: &GroundTask, init: &Bits, stats: &mut SearchStats) -> Option<Vec<u32>> {
    let mut current = init.clone();
    stats.evaluated += 1;
    let mut h = evaluate(task, &current).h?;
    let mut plan = Vec::new();
    while !satisfied(task, &current) {
        // Plateau escape: 0-1 uniform-cost search over helpful actions,
        // stopping at the first popped state that improves on `h`.
        let mut arena = vec![Node { state: current.clone(), parent: 0, op: u32::MAX }];
        let mut open = VecDeque::from([0usize]);
        let mut closed = HashSet::new();
        let mut found = None;
        while let Some(n) = open.pop_front() {
            if !closed.insert(arena[n].state.clone()) {
                continue;
            }
            stats.evaluated += 1;
            let r = evaluate(task, &arena[n].state);
            let Some(hn) = r.h else { continue };
            if n != 0 && hn < h {
                found = Some((n, hn));
                break;
            }
            stats.expanded += 1;
            for op in r.helpful {
                let child = apply(task, &arena[n].state, op);
                if closed.contains(&child) {
                    continue;
                }
                arena.push(Node { state: child, parent: n, op });
                let id = arena.len() - 1;
                if task.ops[op as usize].cost == 0 {
                    open.push_front(id);
                } else {
                    open.push_back(id);
                }
            }
        }
        let (n, hn) = found?;
        plan.extend(path(&arena, n));
        current = arena.swap_remove(n).state;
        h = hn;
    }
    Some(plan)
}

fn best_first(task: &GroundTask, init: &Bits, stats: &mut SearchStats) -> Option<Vec<u32>> {
    let mut arena = vec![Node { state: init.clone(), parent: 0, op: u32::MAX }];
    let mut open = BinaryHeap::new();
    let mut closed = HashSet::new();
    let mut counter = 0u64;
    stats.evaluated += 1;
    let h0 = evaluate(task, init).h?;
    open.push(Reverse((h0, counter, 0usize)));
    while let Some(Reverse((_, _, n))) = open.pop() {
        if !closed.insert(arena[n].state.clone()) {
            continue;
        }
        if satisfied(task, &arena[n].state) {
            return Some(path(&arena, n));
        }
        stats.expanded += 1;
        for op in applicable(task, &arena[n].state) {
            let child = apply(task, &arena[n].state, op);
            if closed.contains(&child) {
                continue;
            }
            stats.evaluated += 1;
            let Some(h) = evaluate(task, &child).h else { continue };
            arena.push(Node { state: child, parent: n, op });
            counter += 1;
            open.push(Reverse((h, counter, arena.len() - 1)));
        }
    }
    None
}

/// Facts the goals depend on, and the ops adding at least one of them.
/// Dropping the other ops and facts keeps every optimal plan.
fn relevance(task: &GroundTask) -> (Bits, Vec<bool>) {
    let mut fact = vec![false; task.facts.len()];
    let mut op = vec![false; task.ops.len()];
    let mut stack = task.goals.clone();
    for &g in &task.goals {
        fact[g as usize] = true;
    }
    while let Some(f) = stack.pop() {
        for (i, o) in task.ops.iter().enumerate() {
            if op[i] || !o.add.contains(&f) {
                continue;
            }
            op[i] = true;
            for &p in &o.pre {
                if !fact[p as usize] {
                    fact[p as usize] = true;
                    stack.push(p);
                }
            }
        }
    }
    let facts: Vec<FactId> = (0..task.facts.len() as u32).filter(|&f| fact[f as usize]).collect();
    (Bits::from_facts(task.facts.len(), &facts), op)
}

fn astar(task: &GroundTask, init: &Bits, stats: &mut SearchStats) -> Option<Vec<u32>> {
    let (mask, relevant) = relevance(task);
    let init = init.and(&mask);
    let mut arena = vec![Node { state: init.clone(), parent: 0, op: u32::MAX }];
    let mut best: HashMap<Bits, u32> = HashMap::from([(init.clone(), 0)]);
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    stats.evaluated += 1;
    let h0 = h_max(task, &init)?;
    open.push(Reverse((h0, h0, counter, 0u32, 0usize)));
    while let Some(Reverse((_, _, _, g, n))) = open.pop() {
        if best[&arena[n].state] < g {
            continue;
        }
        if satisfied(task, &arena[n].state) {
            return Some(path(&arena, n));
        }
        stats.expanded += 1;
        for op in applicable(task, &arena[n].state).into_iter().filter(|&o| relevant[o as usize]) {
            let child = apply(task, &arena[n].state, op).and(&mask);
            let gc = g + task.ops[op as usize].cost;
            if best.get(&child).is_some_and(|&b| b <= gc) {
                continue;
            }
            stats.evaluated += 1;
            let Some(h) = h_max(task, &child) else { continue };
            best.insert(child.clone(), gc);
            arena.push(Node { state: child, parent: n, op });
            counter += 1;
            open.push(Reverse((gc + h, h, counter, gc, arena.len() - 1)));
        }
    }
    None
}

fn render(task: &GroundTask, ops: Vec<u32>, stats: SearchStats) -> Solution {
    let plan = ops
        .iter()
        .filter_map(|&o| task.ops[o as usize].symbolic())
        .collect();
    Solution { ops, plan, stats }
}

/// Cost-optimal search of a ground task; `None` when the goals are unreachable.
pub fn solve_ground_optimal(task: &GroundTask) -> Option<Solution> {
    let init = Bits::from_facts(task.facts.len(), &task.init);
    let mut stats = SearchStats { optimal: true, ..Default::default() };
    let ops = astar(task, &init, &mut stats)?;
    Some(render(task, ops, stats))
}

/// Searches a ground task; `None` when the goals are unreachable.
pub fn solve_ground(task: &GroundTask) -> Option<Solution> {
    let init = Bits::from_facts(task.facts.len(), &task.init);
    let mut stats = SearchStats { hill_climbing: true, ..Default::default() };
    let ops = match hill_climb(task, &init, &mut stats) {
        Some(ops) => ops,
        None => {
            stats.hill_climbing = false;
            best_first(task, &init, &mut stats)?
        }
    };
    Some(render(task, ops, stats))
}

/// Plans for `goals`. Pure navigation goal sets get a shortest route; any
/// sampling or inspection goal switches to hill-climbing.
pub fn solve(b: &BeliefModel, s: &PlanningState, goals: &[Goal]) -> Result<Solution, PlanError> {
    let task = ground(b, s, goals);
    let navigation = goals.iter().all(|g| matches!(g, Goal::Reached(_) | Goal::DockedAt(_)));
    let sol = if navigation { solve_ground_optimal(&task) } else { solve_ground(&task) };
    sol.ok_or(PlanError::Unsolvable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mission::goal_state;
    use crate::planner::{goal_atoms, render_solution};

    #[test]
    fn bits_round_trip() {
        let mut b = Bits::from_facts(130, &[0, 64, 129]);
        assert_eq!(b.ones().collect::<Vec<_>>(), [0, 64, 129]);
        b.set(64, false);
        assert!(!b.get(64) && b.get(129));
    }

    #[test]
    fn reference_plan() {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let m = fixtures::reference_mission();
        let s = PlanningState::at_entry(&b.graph, &m);
        let sol = solve(&b, &s, &goal_atoms(&m, &goal_state(&m))).unwrap();
        assert_eq!(render_solution(&sol.plan), fixtures::REFERENCE_PLAN);
    }

    #[test]
    fn satisfied_goals_give_empty_plan() {
        let b = BeliefModel::new(fixtures::ais_test_env());
        let s = PlanningState::at_entry(&b.graph, &fixtures::reference_mission());
        assert!(solve(&b, &s, &[]).unwrap().plan.is_empty());
    }
}
