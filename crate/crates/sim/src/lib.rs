//! Experiment orchestration for FTN ISAC symbol-level precoding: scenario
//! configs, Monte Carlo sweeps, link metrics and output files.

pub mod config;
pub mod error;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use config::ScenarioConfig;
pub use error::{SimError, SimResult};
pub use metrics::{q_function, simulated_throughput, throughput, ConstellationPoint};
pub use scenario::{run_design, run_draw, Draw, Instance, MetricsRecord};
pub use sweep::{run_sweep, Axis, PointSummary, Stat, SweepOptions, SweepOutcome, SweepRow};
