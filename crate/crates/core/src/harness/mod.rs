//! Monte Carlo experiment harness.

pub mod output;
pub mod scenario;
pub mod selftest;
pub mod sweeps;

pub use output::{wilson_interval, write_outputs, ResultRow};
pub use scenario::{DiscoveryCase, Scenario, SystemScenario, TrainingArray};
pub use selftest::{selftest, Check, SelftestOptions, SelftestReport};
pub use sweeps::{
    calibrate_dia_threshold, crlb_sweep, discovery_point, false_alarm_rate, latency_overhead_sweep, run_discovery_sweep,
    run_training_sweep, training_point, DiscoveryPoint, TrainingPoint,
};
