//! Experiment orchestration: config, multi-seed runs, aggregation, slope
//! fitting and persistence.

pub mod config;
pub mod experiment;
pub mod fit;
pub mod output;
pub mod sweep;

pub use config::{load_config, parse_config, parse_override, ExperimentConfig};
pub use experiment::{
    run_experiment, AggregateResult, AggregateRow, MethodAggregate, ResolvedMethod,
};
pub use fit::fit_loglog_slope;
pub use output::{read_results_csv, write_results, Report};
pub use sweep::{run_sweep, Manifest};
