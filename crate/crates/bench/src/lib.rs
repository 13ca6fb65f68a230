//! Seeded workloads shared by the benchmarks under `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pipebot_core::gen::{random_blockages, random_graph, random_mission};
use pipebot_core::mission::{goal_state, Mission, TaskKind};
use pipebot_core::planner::{goal_atoms, BeliefModel, Goal, PlanningState, TaskGoal};

pub const KINDS: [TaskKind; 3] = [TaskKind::Goto, TaskKind::Inspect, TaskKind::WaterSample];

pub struct Instance {
    pub belief: BeliefModel,
    pub mission: Mission,
    pub start: PlanningState,
    pub goals: Vec<Goal>,
    pub tasks: Vec<TaskGoal>,
}

/// `n` instances on maps of up to `max_manholes`, with up to `max_tasks`
/// tasks and `max_blocked` blocked pipes each.
pub fn instances(seed: u64, n: usize, max_manholes: u32, max_tasks: usize, max_blocked: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let g = random_graph(&mut rng, max_manholes);
            let mission = random_mission(&mut rng, &g, max_tasks, &KINDS);
            let mut belief = BeliefModel::new(g);
            for p in random_blockages(&mut rng, &belief.graph.clone(), &mission, max_blocked) {
                belief.block(p);
            }
            let start = PlanningState::at_entry(&belief.graph, &mission);
            let goals = goal_atoms(&mission, &goal_state(&mission));
            let tasks = mission
                .tasks
                .iter()
                .map(|t| TaskGoal { task_id: t.id.clone(), goal: Goal::for_task(t) })
                .collect();
            Instance { belief, mission, start, goals, tasks }
        })
        .collect()
}
