//! Experiment plumbing: event files, simulated streams, configuration and
//! the (method × seed) runner that produces the metrics table.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod io;

pub use config::{ExperimentConfig, InputSource, Method};
pub use experiment::{
    eval_times, load_stream, query_sets, run_experiment, run_to_dir, write_metrics_csv, MetricRow,
    METRICS_HEADER,
};
pub use generate::{gen_circles, gen_uniform, CirclesSpec, GeneratorKind, GeneratorSpec};
pub use io::{read_events_csv, read_events_csv_in, read_points_csv, write_events_csv, write_points_csv};
