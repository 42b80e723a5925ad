//! Scenario loading, closed-loop runs, outputs and the invariant report.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod sampling;
pub mod verify;

pub use config::{load_scenario, Controller, Mode, ScenarioConfig};
pub use output::write_csv;
pub use run::{run_scenario, RunMetrics, RunSummary, StepRecord};
pub use verify::{verify, VerifyOptions, VerifyReport};
