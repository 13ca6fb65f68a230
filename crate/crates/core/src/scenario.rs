//! Scenario files: the ground truth's obstacles, a fault script and a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::replanner::RunConfig;
use crate::sewer::{PipeId, SewerGraph};
use crate::simulator::{inject_fault, GroundTruth, ObstacleKind, ScriptedFault, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub pipe: PipeId,
    pub kind: ObstacleKind,
    /// Drawn from the scenario seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_cm: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Path of a KIS document holding the true map, relative to the scenario
    /// file. The published map is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_kis: Option<String>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub faults: Vec<ScriptedFault>,
    #[serde(default)]
    pub config: RunConfig,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Ground truth over `graph` with this scenario's obstacles placed.
    pub fn ground_truth(&self, graph: SewerGraph, seed_override: Option<u64>) -> Result<GroundTruth, SimError> {
        let seed = seed_override.unwrap_or(self.seed);
        let mut gt = GroundTruth::new(graph, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for o in &self.obstacles {
            let len = gt.graph.pipes.get(&o.pipe).ok_or(SimError::UnknownPipe(o.pipe))?.length_cm;
            let pos = o.position_cm.unwrap_or_else(|| rng.gen_range(0.0..len));
            inject_fault(&mut gt, o.pipe, o.kind, pos)?;
        }
        Ok(gt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn shipped_scenarios_parse() {
        for (name, text) in fixtures::SCENARIOS {
            let s = Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&s.name, name);
            s.ground_truth(fixtures::ais_test_env(), None).unwrap();
        }
    }

    #[test]
    fn seeded_positions() {
        let s = Scenario {
            obstacles: vec![ObstacleSpec { pipe: PipeId(5), kind: ObstacleKind::Immovable, position_cm: None }],
            ..Default::default()
        };
        let a = s.ground_truth(fixtures::ais_test_env(), Some(3)).unwrap();
        let b = s.ground_truth(fixtures::ais_test_env(), Some(3)).unwrap();
        assert_eq!(a, b);
        let bad = Scenario {
            obstacles: vec![ObstacleSpec { pipe: PipeId(99), kind: ObstacleKind::Immovable, position_cm: None }],
            ..Default::default()
        };
        assert_eq!(bad.ground_truth(fixtures::ais_test_env(), None), Err(SimError::UnknownPipe(PipeId(99))));
    }
}
