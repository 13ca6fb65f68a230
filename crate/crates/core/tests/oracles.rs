mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pipebot_core::fixtures;
use pipebot_core::gen::{random_blockages, random_graph, random_mission};
use pipebot_core::mission::{goal_state, Entry, Mission, TaskKind};
use pipebot_core::planner::{
    goal_atoms, maximize_goals, relaxed_plan_heuristic, solve, validate_plan, BeliefModel, Goal, PlanError,
    PlanningState, TaskGoal,
};
use pipebot_core::replanner::{run_mission, RunConfig, RunStatus};
use pipebot_core::sewer::{ManholeId, PipeId};
use pipebot_core::simulator::GroundTruth;

#[test]
fn navigation_matches_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e61);
    let (mut solved, mut unsolvable, mut worse) = (0, 0, Vec::new());
    for i in 0..200 {
        let g = random_graph(&mut rng, 30);
        let m = random_mission(&mut rng, &g, 2, &[TaskKind::Goto]);
        let b = BeliefModel::new(g);
        let s = PlanningState::at_entry(&b.graph, &m);
        let goals = goal_atoms(&m, &goal_state(&m));
        let oracle = common::shortest_plan(&b, &s, &goals, false);
        match (solve(&b, &s, &goals), oracle) {
            (Ok(sol), Some(best)) => {
                solved += 1;
                let n = sol.plan.iter().filter(|a| a.is_traversal()).count();
                if n != best {
                    worse.push((i, n, best));
                }
            }
            (Err(PlanError::Unsolvable), None) => unsolvable += 1,
            (r, o) => panic!("instance {i}: planner {:?} oracle {o:?}", r.map(|s| s.plan.len())),
        }
    }
    assert!(solved >= 50, "only {solved} solvable instances");
    assert!(unsolvable > 0);
    assert!(worse.is_empty(), "suboptimal {worse:?}");
}

#[test]
fn maximize_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d61);
    let kinds = [TaskKind::Goto, TaskKind::Inspect, TaskKind::WaterSample];
    let mut partial = 0;
    for i in 0..150 {
        let g = random_graph(&mut rng, 12);
        let m = random_mission(&mut rng, &g, 6, &kinds);
        let mut b = BeliefModel::new(g);
        for p in random_blockages(&mut rng, &b.graph.clone(), &m, 3) {
            b.block(p);
        }
        let s = PlanningState::at_entry(&b.graph, &m);
        let tasks: Vec<TaskGoal> =
            m.tasks.iter().map(|t| TaskGoal { task_id: t.id.clone(), goal: Goal::for_task(t) }).collect();
        let goals: Vec<Goal> = tasks.iter().map(|t| t.goal).collect();
        let oracle = common::max_achievable(&b, &s, &goals);
        match (maximize_goals(&b, &s, &tasks, m.exit), oracle) {
            (Ok(r), Some(best)) => {
                assert_eq!(r.kept.len(), best, "instance {i}");
                partial += usize::from(best < tasks.len());
                let mut want: Vec<Goal> = tasks.iter().filter(|t| r.kept.contains(&t.task_id)).map(|t| t.goal).collect();
                want.push(Goal::DockedAt(r.exit));
                validate_plan(&b, &s, &r.solution.plan, &want).unwrap_or_else(|v| panic!("instance {i}: {v}"));
            }
            (Err(PlanError::Stranded), None) => {}
            (r, o) => panic!("instance {i}: maximize {:?} oracle {o:?}", r.map(|r| r.kept)),
        }
    }
    assert!(partial > 0, "no instance needed dropping");
}

#[test]
fn line_graph_heuristic_is_exact() {
    let n = 8;
    let b = BeliefModel::new(common::line_graph(n));
    let m = Mission { entry: Entry { pipe: PipeId(2), towards: ManholeId(2) }, exit: ManholeId(1), time_budget_s: 7200.0, tasks: vec![] };
    let s = PlanningState::at_entry(&b.graph, &m);
    let h: Vec<u32> = (1..=n).map(|k| relaxed_plan_heuristic(&b, &s, &[Goal::DockedAt(ManholeId(k))]).unwrap()).collect();
    assert_eq!(h, [2, 2, 4, 6, 8, 10, 12, 14]);
    for k in 1..=n {
        let goal = [Goal::DockedAt(ManholeId(k))];
        assert_eq!(common::shortest_plan(&b, &s, &goal, false), Some(h[k as usize - 1] as usize));
    }
}

#[test]
fn reference_fault_free_takes_860_s() {
    let g = fixtures::ais_test_env();
    let run = run_mission(&fixtures::reference_mission(), &g, GroundTruth::new(g.clone(), 0), vec![], RunConfig::default());
    let snap = run.snapshot();
    assert_eq!(snap.status, RunStatus::DoneCompleted);
    assert!((snap.clock_s - 860.0).abs() < 1e-9, "{}", snap.clock_s);
}
