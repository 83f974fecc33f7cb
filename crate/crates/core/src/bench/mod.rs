//! Simulation generators, evaluation metrics and the replication harness.

mod gen;
mod harness;
mod metrics;

pub use gen::{
    gen_case1, gen_case2, gen_predictors, gen_response, generate, normal_cdf, regression_function, Case,
    SimScenario,
};
pub use harness::{
    quantile, run_benchmark, run_real_data, sidecar_path, BandwidthChoice, BenchConfig, BenchmarkReport,
    MetricRecord, RealDataConfig, SummaryRow, Timing,
};
pub use metrics::{
    axis_points, max_abs_correlation, metric_cdf_deviation, metric_mee_ase, metric_mee_ase_fits,
    prediction_errors, PairDeviation, TensorGrid,
};
