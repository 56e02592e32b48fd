//! Declarative sweep configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::OptimizerConfig;
use crate::prep::PipelineOrder;
use crate::qkernel::KernelMode;
use crate::seeding::mix;

/// Where the sweep's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
    },
    Synthetic {
        n: usize,
        d: usize,
        pos_fraction: f64,
        separation: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "QSVM")]
    Qsvm,
    #[serde(rename = "VQC")]
    Vqc,
    #[serde(rename = "RBF_SVM")]
    RbfSvm,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Qsvm => "QSVM",
            ModelKind::Vqc => "VQC",
            ModelKind::RbfSvm => "RBF_SVM",
        }
    }

    /// Stable tag used in seed derivation.
    fn seed_tag(&self) -> u64 {
        match self {
            ModelKind::Qsvm => 1,
            ModelKind::Vqc => 2,
            ModelKind::RbfSvm => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QSVM" => Ok(ModelKind::Qsvm),
            "VQC" => Ok(ModelKind::Vqc),
            "RBF_SVM" | "RBF-SVM" | "RBFSVM" => Ok(ModelKind::RbfSvm),
            other => Err(Error::Config(format!("unknown model \"{other}\""))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_c() -> f64 {
    1.0
}
fn default_test_fraction() -> f64 {
    0.25
}
fn default_kernel_mode() -> KernelMode {
    KernelMode::Exact
}
fn default_feature_scale() -> f64 {
    1.0
}
fn default_svm_tol() -> f64 {
    1e-3
}

/// Full sweep specification; the JSON config file mirrors this field for
/// field. Most knobs default to the documented values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub models: Vec<ModelKind>,
    pub pca_dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    /// Epoch counts for VQC cells; SVM-family cells are epoch-free.
    #[serde(default)]
    pub epochs_list: Vec<usize>,
    #[serde(default = "default_kernel_mode")]
    pub kernel_mode: KernelMode,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub pipeline_order: PipelineOrder,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Global multiplier on transformed features before angle encoding.
    #[serde(default = "default_feature_scale")]
    pub feature_scale: f64,
    /// RBF width for the classical baseline; defaults to 1 / dim.
    #[serde(default)]
    pub rbf_gamma: Option<f64>,
    #[serde(default = "default_svm_tol")]
    pub svm_tol: f64,
    /// Compute grid cells on the rayon pool instead of sequentially.
    #[serde(default)]
    pub parallel: bool,
    /// Write per-cell pipeline/model/metrics JSON next to results.csv.
    #[serde(default)]
    pub save_artifacts: bool,
    /// Also evaluate each cell on its training partition
    /// (train_results.csv).
    #[serde(default)]
    pub record_train_metrics: bool,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Validate against the loaded dataset's width.
    pub fn validate(&self, dataset_width: usize) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("models must be nonempty".into()));
        }
        if self.pca_dims.is_empty() {
            return Err(Error::Config("pca_dims must be nonempty".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes must be nonempty".into()));
        }
        for &dim in &self.pca_dims {
            if !(2..=10).contains(&dim) {
                return Err(Error::Config(format!("pca dim {dim} outside [2, 10]")));
            }
            if dim > dataset_width {
                return Err(Error::Config(format!(
                    "pca dim {dim} exceeds dataset width {dataset_width}"
                )));
            }
        }
        if self.models.contains(&ModelKind::Vqc) && self.epochs_list.is_empty() {
            return Err(Error::Config(
                "epochs_list must be nonempty when VQC is selected".into(),
            ));
        }
        if !(0.0 < self.test_fraction && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("C = {} must be positive", self.c)));
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Grid cells in canonical order: models (config order), then dims,
    /// sizes and epoch counts ascending as configured.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &model in &self.models {
            let epoch_values: &[usize] = match model {
                ModelKind::Vqc => &self.epochs_list,
                _ => &[0],
            };
            for &dim in &self.pca_dims {
                for &n_samples in &self.sample_sizes {
                    for &epochs in epoch_values {
                        cells.push(Cell {
                            model,
                            dim,
                            n_samples,
                            epochs,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One grid point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub model: ModelKind,
    pub dim: usize,
    pub n_samples: usize,
    /// 0 for the epoch-free SVM models.
    pub epochs: usize,
}

/// Seed for one grid cell, independent of sweep order and parallelism.
pub fn cell_seed(base_seed: u64, cell: &Cell) -> u64 {
    mix(
        base_seed,
        &[
            cell.model.seed_tag(),
            cell.dim as u64,
            cell.n_samples as u64,
            cell.epochs as u64,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;

    fn minimal_config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic {
                n: 100,
                d: 10,
                pos_fraction: 0.5,
                separation: 1.0,
                seed: 0,
            },
            models: vec![ModelKind::Qsvm, ModelKind::Vqc],
            pca_dims: vec![2, 3],
            sample_sizes: vec![20, 40],
            epochs_list: vec![5, 10],
            kernel_mode: KernelMode::Exact,
            optimizer: OptimizerConfig::default(),
            c: 1.0,
            test_fraction: 0.25,
            pipeline_order: PipelineOrder::PcaThenScale,
            seed: 7,
            output_dir: PathBuf::from("/tmp/out"),
            feature_scale: 1.0,
            rbf_gamma: None,
            svm_tol: 1e-3,
            parallel: false,
            save_artifacts: false,
            record_train_metrics: false,
        }
    }

    #[test]
    fn grid_enumeration_counts() {
        let cfg = minimal_config();
        let cells = cfg.cells();
        // QSVM: 2 dims x 2 sizes x 1; VQC: 2 x 2 x 2 epochs.
        assert_eq!(cells.len(), 4 + 8);
        assert!(cells.iter().filter(|c| c.model == ModelKind::Qsvm).all(|c| c.epochs == 0));
    }

    #[test]
    fn cell_seeds_differ_across_cells_and_repeat() {
        let cfg = minimal_config();
        let cells = cfg.cells();
        let seeds: Vec<u64> = cells.iter().map(|c| cell_seed(cfg.seed, c)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
        assert_eq!(cell_seed(7, &cells[0]), cell_seed(7, &cells[0]));
        assert_ne!(cell_seed(7, &cells[0]), cell_seed(8, &cells[0]));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = minimal_config();
        cfg.pca_dims = vec![11];
        assert!(cfg.validate(10).is_err());

        let mut cfg = minimal_config();
        cfg.pca_dims = vec![8];
        assert!(cfg.validate(4).is_err());

        let mut cfg = minimal_config();
        cfg.epochs_list.clear();
        assert!(cfg.validate(10).is_err());

        let mut cfg = minimal_config();
        cfg.models.clear();
        assert!(cfg.validate(10).is_err());

        assert!(minimal_config().validate(10).is_ok());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = minimal_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        // Spot-check the on-disk vocabulary.
        assert!(json.contains("\"QSVM\""));
        assert!(json.contains("\"PCA_THEN_SCALE\""));
        assert!(json.contains("\"SPSA\""));
        assert!(json.contains("\"type\":\"synthetic\""));
    }

    #[test]
    fn terse_config_files_use_defaults() {
        let json = r#"{
            "dataset": {"type": "synthetic", "n": 50, "d": 4, "pos_fraction": 0.5,
                        "separation": 2.0, "seed": 1},
            "models": ["QSVM"],
            "pca_dims": [2],
            "sample_sizes": [20],
            "output_dir": "/tmp/x"
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.c, 1.0);
        assert_eq!(cfg.test_fraction, 0.25);
        assert_eq!(cfg.kernel_mode, KernelMode::Exact);
        assert_eq!(cfg.optimizer.kind, OptimizerKind::Spsa);
        assert_eq!(cfg.pipeline_order, PipelineOrder::PcaThenScale);
        assert!(!cfg.parallel);
    }
}
