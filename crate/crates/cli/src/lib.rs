//! Configuration-driven experiment runner around `tracksim-core`: scenario
//! orchestration, CSV/JSONL emission, and static SVG plots.

pub mod config;
pub mod plot;
pub mod records;
pub mod scenario;
