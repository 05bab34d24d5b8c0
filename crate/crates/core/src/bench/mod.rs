//! Benchmark harness: query generation, batch execution and reporting.

mod query;
mod report;
mod stats;

pub use query::{
    admissible, generate_queries, query_rng, sample_configuration, sample_length, sample_query, Query, MAX_ATTEMPTS,
    THETA_MAX_DEG,
};
pub use report::{
    run_batch, run_benchmark, BenchReport, ColumnStats, QueryRecord, ReportRow, RunRecord, SuiteSpec, CONFIDENCE,
};
pub use stats::{beta_quantile, jeffreys_interval, mean_sd, MeanSd};
