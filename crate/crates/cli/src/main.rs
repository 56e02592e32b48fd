use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qml_core::dataio::{generate_synthetic, save_csv};
use qml_core::encode::FeatureMapSpec;
use qml_core::harness::{
    emit_plot_data, load_dataset, read_results_csv, render_table, run_experiment,
    save_kernel_csv, DatasetSource, ExperimentConfig, MetricKind, ModelKind,
};
use qml_core::prep::{fit_pipeline, PipelineOrder};
use qml_core::qkernel::{kernel_matrix, KernelMode};

#[derive(Parser)]
#[command(name = "qml", about = "Quantum-kernel SVM and variational classifier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment sweep described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Compute grid cells on the thread pool regardless of the config.
        #[arg(long)]
        parallel: bool,
    },
    /// Generate a synthetic two-cluster dataset and write it as CSV.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "pos-frac")]
        pos_frac: f64,
        #[arg(long)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one metric of a results file as a markdown table.
    Table {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Emit plot-ready CSV files from a results file.
    PlotData {
        #[arg(long)]
        results: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Compute a Gram matrix over a dataset and export it as headerless CSV.
    Kernel {
        #[arg(long)]
        data: PathBuf,
        /// PCA dimension the features are reduced to before encoding.
        #[arg(long)]
        dim: usize,
        /// "exact" or "shots".
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// "pca_then_scale" or "scale_then_pca".
        #[arg(long, default_value = "pca_then_scale")]
        order: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, parallel } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            cfg.parallel = cfg.parallel || parallel;
            let records = run_experiment(&cfg)?;
            for r in &records {
                println!(
                    "{} dim={} n={} epochs={} acc={:.4} auc={:.4} mcc={:.4} ({} ms, {} evals)",
                    r.model, r.dim, r.n_samples, r.epochs, r.acc, r.auc, r.mcc, r.wall_ms,
                    r.eval_count
                );
            }
            println!(
                "{} records -> {}",
                records.len(),
                cfg.output_dir.join("results.csv").display()
            );
        }
        Command::Synth {
            n,
            d,
            pos_frac,
            separation,
            seed,
            out,
        } => {
            let ds = generate_synthetic(n, d, pos_frac, separation, seed)?;
            save_csv(&ds, &out)?;
            let (pos, neg) = ds.class_counts();
            println!("wrote {} rows ({pos} positive, {neg} negative) to {}", n, out.display());
        }
        Command::Table {
            results,
            metric,
            model,
            epochs,
        } => {
            let records = read_results_csv(&results)?;
            let table = render_table(
                &records,
                MetricKind::parse(&metric)?,
                ModelKind::parse(&model)?,
                epochs,
            )?;
            println!("{table}");
        }
        Command::PlotData { results, out_dir } => {
            let records = read_results_csv(&results)?;
            emit_plot_data(&records, &out_dir)?;
            println!("plot data written to {}", out_dir.display());
        }
        Command::Kernel {
            data,
            dim,
            mode,
            shots,
            seed,
            order,
            out,
        } => {
            let mode = match mode.to_ascii_lowercase().as_str() {
                "exact" => KernelMode::Exact,
                "shots" => KernelMode::Shots { shots },
                other => anyhow::bail!("unknown kernel mode \"{other}\""),
            };
            let order = match order.to_ascii_lowercase().as_str() {
                "pca_then_scale" => PipelineOrder::PcaThenScale,
                "scale_then_pca" => PipelineOrder::ScaleThenPca,
                other => anyhow::bail!("unknown pipeline order \"{other}\""),
            };
            let dataset = load_dataset(&DatasetSource::Csv { path: data })?;
            let pipeline = fit_pipeline(&dataset.features, dim, order, 1.0)?;
            let reduced = pipeline.transform(&dataset.features)?;
            let spec = FeatureMapSpec::qsvm_default(dim)?;
            let gram = kernel_matrix(&reduced, &spec, mode, seed)?;
            save_kernel_csv(&gram.values, &out)?;
            println!(
                "wrote {}x{} {} Gram matrix ({} evaluations) to {}",
                gram.values.nrows(),
                gram.values.ncols(),
                gram.mode,
                gram.eval_count,
                out.display()
            );
        }
    }
    Ok(())
}
