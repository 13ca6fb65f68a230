//! The reference test sewer and the inspection mission shipped with the crate.

use crate::mission::{parse_mission, Mission};
use crate::sewer::{parse_kis, SewerGraph};

pub const AIS_TEST_ENV: &str = include_str!("../fixtures/ais_test_env.kis");
pub const REFERENCE_MISSION: &str = include_str!("../fixtures/reference_mission.json");
/// Expected solver output for [`REFERENCE_MISSION`] on [`AIS_TEST_ENV`].
pub const REFERENCE_PLAN: &str = include_str!("../fixtures/reference_plan.txt");

pub fn ais_test_env() -> SewerGraph {
    parse_kis(AIS_TEST_ENV).expect("bundled map parses")
}

pub fn reference_mission() -> Mission {
    parse_mission(REFERENCE_MISSION, &ais_test_env()).expect("bundled mission parses")
}

/// Shipped scenarios by name.
pub const SCENARIOS: [(&str, &str); 7] = [
    ("fault_free", include_str!("../fixtures/scenarios/fault_free.json")),
    ("light_waste", include_str!("../fixtures/scenarios/light_waste.json")),
    ("pushable", include_str!("../fixtures/scenarios/pushable.json")),
    ("stuck_risk", include_str!("../fixtures/scenarios/stuck_risk.json")),
    ("immovable_p5", include_str!("../fixtures/scenarios/immovable_p5.json")),
    ("immovable_p8", include_str!("../fixtures/scenarios/immovable_p8.json")),
    ("malfunction", include_str!("../fixtures/scenarios/malfunction.json")),
];

pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
