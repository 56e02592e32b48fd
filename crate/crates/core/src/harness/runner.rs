//! Sweep execution: per-cell pipelines, incremental results.csv, resume.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{generate_synthetic, load_csv, Dataset};
use crate::error::Result;
use crate::metrics::{evaluate, roc_auc, MetricsReport};
use crate::prep::{fit_pipeline, stratified_split, subsample, FittedPipeline, PipelineOrder};
use crate::qkernel::{gram_cross, kernel_matrix};
use crate::seeding::mix;
use crate::svm::{rbf_kernel, train_svm, SvmModel};
use crate::vqc::{
    train_vqc, training_score_evaluations, AnsatzSpec, Entangler, ScoreAggregation,
    VqcCircuitConfig, VqcModel,
};
use crate::encode::FeatureMapSpec;

use super::config::{cell_seed, Cell, DatasetSource, ExperimentConfig, ModelKind};

// Sub-stream tags hung off each cell seed.
const TAG_SUBSAMPLE: u64 = 1;
const TAG_SPLIT: u64 = 2;
const TAG_KERNEL_TRAIN: u64 = 3;
const TAG_KERNEL_CROSS: u64 = 4;
const TAG_THETA: u64 = 5;
const TAG_OPTIMIZER: u64 = 6;

/// One row of results.csv. Field order defines the on-disk schema:
/// model,dim,n_samples,epochs,acc,auc,mcc,wall_ms,eval_count,seed,
/// pipeline_order,kernel_mode,optimizer
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model: ModelKind,
    pub dim: usize,
    pub n_samples: usize,
    pub epochs: usize,
    pub acc: f64,
    pub auc: f64,
    pub mcc: f64,
    pub wall_ms: u64,
    pub eval_count: u64,
    pub seed: u64,
    pub pipeline_order: PipelineOrder,
    pub kernel_mode: String,
    pub optimizer: String,
}

impl ResultRecord {
    fn key(&self) -> (ModelKind, usize, usize, usize) {
        (self.model, self.dim, self.n_samples, self.epochs)
    }
}

/// Parse a results.csv written by [`run_experiment`].
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

/// Materialize the configured dataset.
pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Csv { path } => load_csv(path),
        DatasetSource::Synthetic {
            n,
            d,
            pos_fraction,
            separation,
            seed,
        } => generate_synthetic(*n, *d, *pos_fraction, *separation, *seed),
    }
}

/// Appends rows in canonical cell order no matter which order cells finish
/// in, so results.csv is byte-stable across serial and parallel runs.
struct OrderedWriter {
    writer: csv::Writer<File>,
    pending: BTreeMap<usize, Option<ResultRecord>>,
    next: usize,
    skip: HashSet<usize>,
}

impl OrderedWriter {
    fn create(path: &Path, skip: HashSet<usize>) -> Result<Self> {
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self {
            writer,
            pending: BTreeMap::new(),
            next: 0,
            skip,
        })
    }

    /// Hand over the record for canonical index `idx`; `None` marks a cell
    /// that produces no row in this file.
    fn submit(&mut self, idx: usize, record: Option<ResultRecord>) -> Result<()> {
        self.pending.insert(idx, record);
        loop {
            if self.skip.contains(&self.next) {
                self.next += 1;
                continue;
            }
            let Some(entry) = self.pending.remove(&self.next) else {
                break;
            };
            if let Some(record) = entry {
                self.writer.serialize(record)?;
                self.writer.flush()?;
            }
            self.next += 1;
        }
        Ok(())
    }
}

struct CellOutput {
    record: ResultRecord,
    train_record: Option<ResultRecord>,
}

/// Run the full sweep described by `config`.
///
/// Each grid cell derives its own seed from the config seed, so cells are
/// independent of sweep order. Rows land in `results.csv` incrementally;
/// cells already present there are skipped on rerun. Per-cell failures
/// become rows with NaN metrics plus a line in `errors.log`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let dataset = load_dataset(&config.dataset)?;
    config.validate(dataset.n_features())?;
    std::fs::create_dir_all(&config.output_dir)?;

    let results_path = config.output_dir.join("results.csv");
    let existing: HashMap<(ModelKind, usize, usize, usize), ResultRecord> =
        if results_path.exists() {
            read_results_csv(&results_path)?
                .into_iter()
                .map(|r| (r.key(), r))
                .collect()
        } else {
            HashMap::new()
        };

    let cells = config.cells();
    let mut done_indices = HashSet::new();
    let mut jobs: Vec<(usize, Cell)> = Vec::new();
    for (idx, cell) in cells.iter().enumerate() {
        let key = (cell.model, cell.dim, cell.n_samples, cell.epochs);
        if existing.contains_key(&key) {
            done_indices.insert(idx);
        } else {
            jobs.push((idx, *cell));
        }
    }
    log::info!(
        "sweep: {} cells total, {} already complete, {} to run",
        cells.len(),
        done_indices.len(),
        jobs.len()
    );

    let writer = Mutex::new(OrderedWriter::create(&results_path, done_indices.clone())?);
    let train_writer = if config.record_train_metrics {
        Some(Mutex::new(OrderedWriter::create(
            &config.output_dir.join("train_results.csv"),
            done_indices.clone(),
        )?))
    } else {
        None
    };
    let error_log = Mutex::new(None::<File>);

    let execute = |&(idx, cell): &(usize, Cell)| -> Result<(usize, ResultRecord)> {
        let seed = cell_seed(config.seed, &cell);
        let started = Instant::now();
        let outcome = run_cell(&dataset, config, &cell, seed);
        let wall_ms = started.elapsed().as_millis() as u64;

        let (record, train_record) = match outcome {
            Ok(mut out) => {
                out.record.wall_ms = wall_ms;
                (out.record, out.train_record)
            }
            Err(err) => {
                let mut log = error_log.lock().unwrap();
                let file = match log.as_mut() {
                    Some(f) => f,
                    None => {
                        *log = Some(
                            OpenOptions::new()
                                .create(true)
                                .append(true)
                                .open(config.output_dir.join("errors.log"))?,
                        );
                        log.as_mut().unwrap()
                    }
                };
                writeln!(
                    file,
                    "{} dim={} n={} epochs={}: {err}",
                    cell.model, cell.dim, cell.n_samples, cell.epochs
                )?;
                (failed_record(config, &cell, seed, wall_ms), None)
            }
        };

        writer.lock().unwrap().submit(idx, Some(record.clone()))?;
        if let Some(tw) = &train_writer {
            tw.lock().unwrap().submit(idx, train_record)?;
        }
        Ok((idx, record))
    };

    let computed: Result<Vec<(usize, ResultRecord)>> = if config.parallel {
        jobs.par_iter().map(execute).collect()
    } else {
        jobs.iter().map(execute).collect()
    };
    let computed = computed?;

    let mut by_index: BTreeMap<usize, ResultRecord> = computed.into_iter().collect();
    let mut records = Vec::with_capacity(cells.len());
    for (idx, cell) in cells.iter().enumerate() {
        if let Some(r) = by_index.remove(&idx) {
            records.push(r);
        } else {
            let key = (cell.model, cell.dim, cell.n_samples, cell.epochs);
            records.push(existing[&key].clone());
        }
    }
    Ok(records)
}

fn optimizer_label(config: &ExperimentConfig, model: ModelKind) -> String {
    match model {
        ModelKind::Vqc => config.optimizer.kind.to_string(),
        _ => "none".to_string(),
    }
}

fn kernel_mode_label(config: &ExperimentConfig, model: ModelKind) -> String {
    match model {
        ModelKind::Qsvm => config.kernel_mode.to_string(),
        _ => "none".to_string(),
    }
}

fn failed_record(config: &ExperimentConfig, cell: &Cell, seed: u64, wall_ms: u64) -> ResultRecord {
    ResultRecord {
        model: cell.model,
        dim: cell.dim,
        n_samples: cell.n_samples,
        epochs: cell.epochs,
        acc: f64::NAN,
        auc: f64::NAN,
        mcc: f64::NAN,
        wall_ms,
        eval_count: 0,
        seed,
        pipeline_order: config.pipeline_order,
        kernel_mode: kernel_mode_label(config, cell.model),
        optimizer: optimizer_label(config, cell.model),
    }
}

struct EvaluatedModel {
    report: MetricsReport,
    train_report: Option<MetricsReport>,
    eval_count: u64,
    hard_label_auc: f64,
    model_json: serde_json::Value,
}

fn run_cell(
    dataset: &Dataset,
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
) -> Result<CellOutput> {
    let (xs, ys) = subsample(
        &dataset.features,
        &dataset.labels,
        cell.n_samples,
        mix(seed, &[TAG_SUBSAMPLE]),
        true,
    )?;
    let split = stratified_split(&xs, &ys, config.test_fraction, mix(seed, &[TAG_SPLIT]))?;

    let pipeline = fit_pipeline(
        &split.x_train,
        cell.dim,
        config.pipeline_order,
        config.feature_scale,
    )?;
    let x_train = pipeline.transform(&split.x_train)?;
    let x_test = pipeline.transform(&split.x_test)?;

    let evaluated = match cell.model {
        ModelKind::Qsvm => run_qsvm_cell(config, cell, seed, &x_train, &split.y_train, &x_test, &split.y_test)?,
        ModelKind::RbfSvm => run_rbf_cell(config, cell, &x_train, &split.y_train, &x_test, &split.y_test)?,
        ModelKind::Vqc => run_vqc_cell(config, cell, seed, &x_train, &split.y_train, &x_test, &split.y_test)?,
    };

    if config.save_artifacts {
        save_cell_artifacts(config, cell, seed, &pipeline, &evaluated)?;
    }

    let record = ResultRecord {
        model: cell.model,
        dim: cell.dim,
        n_samples: cell.n_samples,
        epochs: cell.epochs,
        acc: evaluated.report.acc,
        auc: evaluated.report.auc,
        mcc: evaluated.report.mcc,
        wall_ms: 0, // stamped by the caller
        eval_count: evaluated.eval_count,
        seed,
        pipeline_order: config.pipeline_order,
        kernel_mode: kernel_mode_label(config, cell.model),
        optimizer: optimizer_label(config, cell.model),
    };

    let train_record = evaluated.train_report.map(|tr| ResultRecord {
        acc: tr.acc,
        auc: tr.auc,
        mcc: tr.mcc,
        wall_ms: 0,
        eval_count: 0,
        ..record.clone()
    });

    Ok(CellOutput {
        record,
        train_record,
    })
}

fn svm_training_ref(dataset_source: &str, cell: &Cell, seed: u64) -> String {
    format!(
        "{dataset_source}#cell(model={},dim={},n={},epochs={},seed={seed})",
        cell.model, cell.dim, cell.n_samples, cell.epochs
    )
}

#[allow(clippy::too_many_arguments)]
fn run_qsvm_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
    x_train: &Array2<f64>,
    y_train: &[i32],
    x_test: &Array2<f64>,
    y_test: &[i32],
) -> Result<EvaluatedModel> {
    let spec = FeatureMapSpec::qsvm_default(cell.dim)?;
    let gram = kernel_matrix(x_train, &spec, config.kernel_mode, mix(seed, &[TAG_KERNEL_TRAIN]))?;
    let mut model = train_svm(&gram.values, y_train, config.c, config.svm_tol)?;
    model.training_ref = svm_training_ref("qsvm", cell, seed);

    let cross = gram_cross(
        x_test,
        x_train,
        &spec,
        config.kernel_mode,
        mix(seed, &[TAG_KERNEL_CROSS]),
    )?;
    let eval_count = gram.eval_count + (x_test.nrows() * x_train.nrows()) as u64;
    evaluate_svm(config, &model, &gram.values, y_train, &cross, y_test, eval_count)
}

fn run_rbf_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    x_train: &Array2<f64>,
    y_train: &[i32],
    x_test: &Array2<f64>,
    y_test: &[i32],
) -> Result<EvaluatedModel> {
    let gamma = config.rbf_gamma.unwrap_or(1.0 / cell.dim as f64);
    let k_train = rbf_kernel(x_train, x_train, gamma)?;
    let mut model = train_svm(&k_train, y_train, config.c, config.svm_tol)?;
    model.training_ref = svm_training_ref("rbf", cell, 0);
    let cross = rbf_kernel(x_test, x_train, gamma)?;
    evaluate_svm(config, &model, &k_train, y_train, &cross, y_test, 0)
}

fn evaluate_svm(
    config: &ExperimentConfig,
    model: &SvmModel,
    k_train: &Array2<f64>,
    y_train: &[i32],
    k_cross: &Array2<f64>,
    y_test: &[i32],
    eval_count: u64,
) -> Result<EvaluatedModel> {
    let scores = model.decision_values(k_cross)?;
    let preds = model.predict(k_cross)?;
    let report = evaluate(y_test, &preds, &scores)?;
    let hard_scores: Vec<f64> = preds.iter().map(|&p| f64::from(p)).collect();
    let hard_label_auc = roc_auc(y_test, &hard_scores).unwrap_or(f64::NAN);

    let train_report = if config.record_train_metrics {
        let train_scores = model.decision_values(k_train)?;
        let train_preds = model.predict(k_train)?;
        Some(evaluate(y_train, &train_preds, &train_scores)?)
    } else {
        None
    };

    Ok(EvaluatedModel {
        report,
        train_report,
        eval_count,
        hard_label_auc,
        model_json: serde_json::to_value(model)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_vqc_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
    x_train: &Array2<f64>,
    y_train: &[i32],
    x_test: &Array2<f64>,
    y_test: &[i32],
) -> Result<EvaluatedModel> {
    let circuit = VqcCircuitConfig {
        ansatz: AnsatzSpec::new(cell.dim, 2, Entangler::LinearChain)?,
        feature_map: FeatureMapSpec::vqc_default(cell.dim)?,
        aggregation: ScoreAggregation::MeanZ,
    };
    let optimizer = config.optimizer.with_seed(mix(seed, &[TAG_OPTIMIZER]));
    let model = train_vqc(
        x_train,
        y_train,
        &circuit,
        &optimizer,
        cell.epochs,
        mix(seed, &[TAG_THETA]),
    )?;

    let scores = vqc_scores(&model, x_test)?;
    let preds: Vec<i32> = scores
        .iter()
        .map(|&s| if s >= model.threshold { 1 } else { -1 })
        .collect();
    let report = evaluate(y_test, &preds, &scores)?;
    let hard_scores: Vec<f64> = preds.iter().map(|&p| f64::from(p)).collect();
    let hard_label_auc = roc_auc(y_test, &hard_scores).unwrap_or(f64::NAN);

    let train_report = if config.record_train_metrics {
        let train_scores = vqc_scores(&model, x_train)?;
        let train_preds: Vec<i32> = train_scores
            .iter()
            .map(|&s| if s >= model.threshold { 1 } else { -1 })
            .collect();
        Some(evaluate(y_train, &train_preds, &train_scores)?)
    } else {
        None
    };

    let eval_count = training_score_evaluations(
        config.optimizer.kind,
        cell.epochs,
        x_train.nrows(),
        circuit.ansatz.param_count(),
    ) + x_test.nrows() as u64;

    Ok(EvaluatedModel {
        report,
        train_report,
        eval_count,
        hard_label_auc,
        model_json: serde_json::to_value(&model)?,
    })
}

fn vqc_scores(model: &VqcModel, x: &Array2<f64>) -> Result<Vec<f64>> {
    x.rows()
        .into_iter()
        .map(|row| model.forward(row.as_slice().unwrap()))
        .collect()
}

fn save_cell_artifacts(
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
    pipeline: &FittedPipeline,
    evaluated: &EvaluatedModel,
) -> Result<()> {
    let dir = cell_artifact_dir(&config.output_dir, cell);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("pipeline.json"),
        serde_json::to_string_pretty(pipeline)?,
    )?;
    std::fs::write(
        dir.join("model.json"),
        serde_json::to_string_pretty(&evaluated.model_json)?,
    )?;
    let metrics = serde_json::json!({
        "seed": seed,
        "acc": evaluated.report.acc,
        "auc": evaluated.report.auc,
        "mcc": evaluated.report.mcc,
        "hard_label_auc": evaluated.hard_label_auc,
        "confusion": evaluated.report.confusion,
        "train": evaluated.train_report,
    });
    std::fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)?,
    )?;
    Ok(())
}

/// Directory for one cell's saved artifacts.
pub fn cell_artifact_dir(output_dir: &Path, cell: &Cell) -> PathBuf {
    output_dir.join("cells").join(format!(
        "{}_dim{}_n{}_e{}",
        cell.model.as_str().to_ascii_lowercase(),
        cell.dim,
        cell.n_samples,
        cell.epochs
    ))
}
