//! Run-time monitoring and the adaptation experiment harness.

mod monitor;
mod sim;

pub use monitor::{MonitorError, MonitorSession};
pub use sim::{
    run_experiment, sample_config, simulate_round, simulate_round_cached, CheckCache, ExecutionConfig, ExperimentSummary, Mode, Outcome, RoundMetrics,
    RoundRecord, RuntimeError,
};
