//! Experiment harness: sweep configuration, execution, and reporting.

mod config;
mod report;
mod runner;

pub use config::{cell_seed, Cell, DatasetSource, ExperimentConfig, ModelKind};
pub use report::{emit_plot_data, load_kernel_csv, render_table, save_kernel_csv, MetricKind};
pub use runner::{cell_artifact_dir, load_dataset, read_results_csv, run_experiment, ResultRecord};
