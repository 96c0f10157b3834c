//! Batch experiments: configuration files, parallel episode execution,
//! aggregation, significance tests and CSV output.

pub mod batch;
pub mod config;
pub mod output;
pub mod stats;
pub mod summary;

pub use batch::{plan, run_batch, run_batch_traced, BatchError, EpisodeRow, EpisodeSpec, TraceRow};
pub use config::{
    load_config, parse_config, parse_range, with_malicious_fractions, BatchConfig, ConfigError,
};
pub use output::{emit, read_episodes, write_derived, OutputError, TraceWriter};
pub use stats::{spearman_rho, welch_t_test, StatsError, WelchResult};
pub use summary::{significance, summarize, SummaryRow, MEASURES};
