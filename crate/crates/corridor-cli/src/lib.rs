//! Scenario ingestion, run orchestration and report emission around the
//! corridor simulator.

pub mod commands;
pub mod output;
pub mod scenario_file;
