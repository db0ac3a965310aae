//! Schedule solving and constraint-level explanations for Earth-observation
//! imaging and downlink planning.

pub mod model;
pub mod baseline;
pub mod bench;
pub mod explain;
pub mod solver;
pub mod scenario;
pub mod verify;
