use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use pipebot_core::mission::{goal_state, parse_mission, Mission};
use pipebot_core::planner::pddl::emit_pddl;
use pipebot_core::planner::{
    goal_atoms, maximize_goals, parse_solution, render_solution, validate_plan, BeliefModel, Goal,
    PlanningState, TaskGoal,
};
use pipebot_core::replanner::{run_mission, MissionRun};
use pipebot_core::scenario::Scenario;
use pipebot_core::sewer::{parse_kis, SewerGraph};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_map(path: &Path) -> Result<SewerGraph> {
    parse_kis(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_mission(path: &Path, g: &SewerGraph) -> Result<Mission> {
    parse_mission(&read(path)?, g).with_context(|| format!("parsing {}", path.display()))
}

/// The solution file for `mission`, plus task ids that had to be dropped.
pub fn plan(g: &SewerGraph, mission: &Mission) -> Result<(String, Vec<String>)> {
    let b = BeliefModel::new(g.clone());
    let s = PlanningState::at_entry(&b.graph, mission);
    let tasks: Vec<TaskGoal> = mission
        .tasks
        .iter()
        .map(|t| TaskGoal { task_id: t.id.clone(), goal: Goal::for_task(t) })
        .collect();
    let mx = maximize_goals(&b, &s, &tasks, mission.exit)?;
    Ok((render_solution(&mx.solution.plan), mx.dropped))
}

/// Checks a solution file against the full mission goals.
pub fn validate(g: &SewerGraph, mission: &Mission, plan_text: &str) -> Result<()> {
    let plan = parse_solution(plan_text)?;
    let b = BeliefModel::new(g.clone());
    let s = PlanningState::at_entry(&b.graph, mission);
    validate_plan(&b, &s, &plan, &goal_atoms(mission, &goal_state(mission)))?;
    Ok(())
}

pub fn pddl(g: &SewerGraph, mission: &Mission) -> (String, String) {
    let b = BeliefModel::new(g.clone());
    let s = PlanningState::at_entry(&b.graph, mission);
    emit_pddl(&b, &s, &goal_atoms(mission, &goal_state(mission)))
}

/// Runs `mission` on `map` under an optional scenario file. A scenario may
/// name a different true map, resolved relative to the scenario file.
pub fn run(map: &SewerGraph, mission: &Mission, scenario: Option<&Path>, seed: Option<u64>) -> Result<MissionRun> {
    let (sc, truth) = match scenario {
        Some(path) => {
            let sc = Scenario::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            let truth = match &sc.ground_truth_kis {
                Some(rel) => {
                    let base = path.parent().map_or_else(PathBuf::new, Path::to_path_buf);
                    load_map(&base.join(rel))?
                }
                None => map.clone(),
            };
            (sc, truth)
        }
        None => (Scenario::default(), map.clone()),
    };
    if truth.pipes.keys().ne(map.pipes.keys()) {
        bail!("ground truth map must declare the same pipes as the published map");
    }
    let gt = sc.ground_truth(truth, seed)?;
    Ok(run_mission(mission, map, gt, sc.faults.clone(), sc.config.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pipebot_core::fixtures;
    use pipebot_core::replanner::RunStatus;

    #[test]
    fn plan_matches_fixture_and_validates() {
        let g = fixtures::ais_test_env();
        let m = fixtures::reference_mission();
        let (text, dropped) = plan(&g, &m).unwrap();
        assert_eq!(text, fixtures::REFERENCE_PLAN);
        assert!(dropped.is_empty());
        validate(&g, &m, &text).unwrap();
        assert!(validate(&g, &m, "TAKE_WATER_SAMPLE P6\n").is_err());
    }

    #[test]
    fn scenario_map_resolves_next_to_scenario() {
        let dir = std::env::temp_dir().join(format!("pipebot-cmd-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("truth.kis"), fixtures::AIS_TEST_ENV).unwrap();
        let sc = dir.join("sc.json");
        fs::write(&sc, r#"{"name":"t","ground_truth_kis":"truth.kis","obstacles":[{"pipe":"P5","kind":"LIGHT_WASTE"}]}"#).unwrap();
        let run = run(&fixtures::ais_test_env(), &fixtures::reference_mission(), Some(&sc), Some(4)).unwrap();
        assert_eq!(run.status, RunStatus::DoneCompleted);
        fs::write(dir.join("truth.kis"), "MANHOLE M1 DIAM_CM 100 RECOVERABLE 1\n").unwrap();
        assert!(super::run(&fixtures::ais_test_env(), &fixtures::reference_mission(), Some(&sc), None).is_err());
        fs::remove_dir_all(dir).unwrap();
    }
}
