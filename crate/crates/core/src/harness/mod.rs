//! Experiment driver: strategy dispatch, the query loop, aggregation,
//! paired t-tests and file I/O.

pub mod config;
pub mod experiment;
pub mod output;
pub mod stats;
pub mod strategy;

pub use config::{ConfigMap, DataFormat, RunConfig};
pub use experiment::{
    compare, load_dataset, run_experiment, run_on_dataset, summarize, CurvePoint, ExperimentOutput,
    LearningCurve, SummaryRow, TTestRow,
};
pub use output::{read_curves, write_outputs};
pub use stats::{paired_t_test, Outcome, TTest};
pub use strategy::{select_query, Strategy};
