//! Mission planning, execution and replanning for an in-pipe sewer robot.

pub mod events;
pub mod executive;
pub mod fixtures;
pub mod fusion;
pub mod gen;
pub mod mission;
pub mod sewer;
pub mod planner;
pub mod replanner;
pub mod scenario;
pub mod simulator;
