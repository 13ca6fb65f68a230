//! Oracles that do not go through the planner's grounding or search.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet, VecDeque};

use pipebot_core::planner::{apply_action, BeliefModel, Goal, Place, PlanningState, SymbolicAction};
use pipebot_core::sewer::{manhole_type_designator, Endpoint, Manhole, ManholeId, Pipe, PipeId, Port, SewerGraph};

/// Every action worth trying from `at`; the validator filters the illegal ones.
pub fn candidates(b: &BeliefModel, at: Place, with_tasks: bool) -> Vec<SymbolicAction> {
    let g = &b.graph;
    let mut out = Vec::new();
    let pipe_here: PipeId;
    match at {
        Place::InPipe { pipe, .. } => {
            pipe_here = pipe;
            for e in &g.pipes[&pipe].endpoints {
                out.push(SymbolicAction::DrivePipeToManhole { pipe, manhole: e.manhole });
            }
            if with_tasks {
                out.push(SymbolicAction::TakeWaterSample { pipe });
            }
        }
        Place::AtManholePort { manhole, port } => {
            let m = &g.manholes[&manhole];
            pipe_here = m.port(port).expect("port exists").pipe;
            for e in &g.pipes[&pipe_here].endpoints {
                if e.manhole != manhole {
                    out.push(SymbolicAction::DrivePipeToManhole { pipe: pipe_here, manhole: e.manhole });
                }
            }
            for to in m.ports.iter().map(|p| p.index).filter(|&j| j != port) {
                out.push(SymbolicAction::DriveManhole {
                    designator: manhole_type_designator(m),
                    from: port,
                    to,
                    manhole,
                    pipes: m.ports.iter().map(|p| p.pipe).collect(),
                });
            }
        }
    }
    if with_tasks {
        out.push(SymbolicAction::InspectPipe { pipe: pipe_here });
    }
    out
}

fn mask(goals: &[Goal], s: &PlanningState) -> u32 {
    goals
        .iter()
        .enumerate()
        .filter(|(_, g)| g.holds(s))
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Length of a shortest plan achieving every goal, counting each symbolic
/// action once. `None` when no plan exists.
///
/// Goals other than docking are monotone, so the search key is the place plus
/// the set of monotone goals already achieved.
pub fn shortest_plan(b: &BeliefModel, s: &PlanningState, goals: &[Goal], with_tasks: bool) -> Option<usize> {
    let monotone: Vec<Goal> = goals.iter().copied().filter(|g| !matches!(g, Goal::DockedAt(_))).collect();
    let done = |st: &PlanningState| goals.iter().all(|g| g.holds(st));
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(s.clone(), 0usize)]);
    seen.insert((s.at, mask(&monotone, s)));
    while let Some((st, d)) = queue.pop_front() {
        if done(&st) {
            return Some(d);
        }
        for a in candidates(b, st.at, with_tasks) {
            let mut next = st.clone();
            if apply_action(b, &mut next, &a).is_err() {
                continue;
            }
            if seen.insert((next.at, mask(&monotone, &next))) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Largest number of `tasks` achievable together with docking at some
/// recoverable manhole, by enumerating every subset.
pub fn max_achievable(b: &BeliefModel, s: &PlanningState, tasks: &[Goal]) -> Option<usize> {
    let exits: Vec<_> = b.graph.recoverable_manholes().collect();
    let mut best = None;
    for subset in 0u32..(1 << tasks.len()) {
        let k = subset.count_ones() as usize;
        if best.is_some_and(|b| b >= k) {
            continue;
        }
        let chosen: Vec<Goal> = (0..tasks.len()).filter(|i| subset >> i & 1 == 1).map(|i| tasks[i]).collect();
        let ok = exits.iter().any(|&m| {
            let mut goals = chosen.clone();
            goals.push(Goal::DockedAt(m));
            shortest_plan(b, s, &goals, true).is_some()
        });
        if ok {
            best = Some(k);
        }
    }
    best
}

/// `n` manholes in a straight east-west line with a dead-end stub at each
/// end. Pipe `P(i+1)` joins `Mi` and `M(i+1)`; `P1` and `P(n+1)` are the stubs.
pub fn line_graph(n: u32) -> SewerGraph {
    let mut manholes = BTreeMap::new();
    let mut pipes = BTreeMap::new();
    for i in 1..=n + 1 {
        let id = PipeId(i);
        let mut endpoints = Vec::new();
        if i > 1 {
            endpoints.push(Endpoint { manhole: ManholeId(i - 1), port: 2 });
        }
        if i <= n {
            endpoints.push(Endpoint { manhole: ManholeId(i), port: 1 });
        }
        endpoints.sort();
        pipes.insert(id, Pipe { id, length_cm: 300.0, diameter_cm: 40.0, endpoints });
    }
    for i in 1..=n {
        let id = ManholeId(i);
        let port = |index, pipe, angle_deg| Port { index, pipe: PipeId(pipe), angle_deg, invert_offset_cm: 0.0 };
        manholes.insert(
            id,
            Manhole { id, diameter_cm: 100.0, ports: vec![port(1, i, 0.0), port(2, i + 1, 180.0)], recoverable: true },
        );
    }
    SewerGraph { manholes, pipes }
}
