//! Preprocessing: z-score standardization, PCA, stratified splitting and
//! subsampling.
//!
//! Conventions are fixed and tested: the scaler uses the population (1/n)
//! standard deviation, PCA uses the sample (1/(n-1)) covariance, splits
//! round per-class counts half-up, and all randomness comes from seeded
//! ChaCha8 streams.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Columns with a standard deviation below this are treated as constant.
const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stddevs: Vec<f64>,
}

pub fn fit_scaler(x: &Array2<f64>) -> Result<ScalerParams> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let means: Vec<f64> = x.mean_axis(Axis(0)).unwrap().to_vec();
    let stddevs: Vec<f64> = (0..x.ncols())
        .map(|j| {
            let m = means[j];
            let var: f64 = x.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            var.sqrt()
        })
        .collect();
    Ok(ScalerParams { means, stddevs })
}

/// Column-wise (x - mean) / stddev; constant columns map to zero.
pub fn apply_scaler(x: &Array2<f64>, params: &ScalerParams) -> Result<Array2<f64>> {
    if x.ncols() != params.means.len() {
        return Err(Error::DimensionMismatch {
            what: "scaler width",
            expected: params.means.len(),
            actual: x.ncols(),
        });
    }
    Ok(Array2::from_shape_fn(x.dim(), |(i, j)| {
        if params.stddevs[j] < DEGENERATE_STD {
            0.0
        } else {
            (x[[i, j]] - params.means[j]) / params.stddevs[j]
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// k x d matrix with orthonormal rows, ordered by descending variance.
    pub components: Array2<f64>,
    /// Eigenvalues of the sample covariance along each component.
    pub explained_variance: Vec<f64>,
    /// Column means of the training data.
    pub center: Vec<f64>,
}

/// Top-k principal components of the sample covariance (divisor n-1).
///
/// Sign convention: each component's largest-magnitude entry is nonnegative,
/// which makes the decomposition deterministic.
pub fn fit_pca(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::InvalidArgument {
            what: "pca sample count",
            details: format!("{n} rows, need at least 2"),
        });
    }
    if k == 0 || k > d.min(n) {
        return Err(Error::InvalidArgument {
            what: "pca component count",
            details: format!("k = {k} outside 1..={}", d.min(n)),
        });
    }

    let center: Vec<f64> = x.mean_axis(Axis(0)).unwrap().to_vec();
    let mut covariance = Array2::<f64>::zeros((d, d));
    for row in x.rows() {
        for a in 0..d {
            let da = row[a] - center[a];
            for b in a..d {
                covariance[[a, b]] += da * (row[b] - center[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = covariance[[a, b]] / (n - 1) as f64;
            covariance[[a, b]] = v;
            covariance[[b, a]] = v;
        }
    }

    let (eigenvalues, eigenvectors) = symmetric_eigen(&covariance)?;
    let mut components = Array2::<f64>::zeros((k, d));
    for row in 0..k {
        let mut component: Vec<f64> = eigenvectors.row(row).to_vec();
        let lead = component
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if component[lead] < 0.0 {
            for v in &mut component {
                *v = -*v;
            }
        }
        for (j, v) in component.into_iter().enumerate() {
            components[[row, j]] = v;
        }
    }

    Ok(PcaModel {
        components,
        explained_variance: eigenvalues[..k].to_vec(),
        center,
    })
}

/// Project rows onto the fitted components: (x - center) · componentsᵀ.
pub fn pca_transform(x: &Array2<f64>, model: &PcaModel) -> Result<Array2<f64>> {
    let d = model.center.len();
    if x.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "pca input width",
            expected: d,
            actual: x.ncols(),
        });
    }
    let center = Array1::from_vec(model.center.clone());
    let centered = x - &center;
    Ok(centered.dot(&model.components.t()))
}

fn round_half_up(value: f64) -> usize {
    value.round() as usize
}

fn class_indices(y: &[i32]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &label) in y.iter().enumerate() {
        if label == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (pos, neg)
}

fn take_rows(x: &Array2<f64>, y: &[i32], indices: &[usize]) -> (Array2<f64>, Vec<i32>) {
    let d = x.ncols();
    let mut out = Array2::<f64>::zeros((indices.len(), d));
    let mut labels = Vec::with_capacity(indices.len());
    for (row, &i) in indices.iter().enumerate() {
        out.row_mut(row).assign(&x.row(i));
        labels.push(y[i]);
    }
    (out, labels)
}

#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub x_train: Array2<f64>,
    pub y_train: Vec<i32>,
    pub x_test: Array2<f64>,
    pub y_test: Vec<i32>,
}

/// Stratified train/test partition. Each class is shuffled independently
/// from the seed and contributes round(count * test_fraction) test rows
/// (round half up).
pub fn stratified_split(
    x: &Array2<f64>,
    y: &[i32],
    test_fraction: f64,
    rng_seed: u64,
) -> Result<TrainTestSplit> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            what: "label vector",
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::InvalidArgument {
            what: "test fraction",
            details: format!("{test_fraction} outside (0, 1)"),
        });
    }
    let (mut pos, mut neg) = class_indices(y);
    for (label, class) in [(1, &pos), (-1, &neg)] {
        if class.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: class.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    for class in [&pos, &neg] {
        let n_test = round_half_up(class.len() as f64 * test_fraction);
        test_idx.extend_from_slice(&class[..n_test]);
        train_idx.extend_from_slice(&class[n_test..]);
    }

    let (x_train, y_train) = take_rows(x, y, &train_idx);
    let (x_test, y_test) = take_rows(x, y, &test_idx);
    Ok(TrainTestSplit {
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

/// Seed-deterministic subsample of `n` rows. When stratified, class
/// proportions are preserved within one sample (round half up on the
/// positive share).
pub fn subsample(
    x: &Array2<f64>,
    y: &[i32],
    n: usize,
    rng_seed: u64,
    stratified: bool,
) -> Result<(Array2<f64>, Vec<i32>)> {
    let total = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > total {
        return Err(Error::SubsampleTooLarge {
            requested: n,
            available: total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let indices: Vec<usize> = if stratified {
        let (mut pos, mut neg) = class_indices(y);
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let n_pos = round_half_up(n as f64 * pos.len() as f64 / total as f64);
        let n_neg = n - n_pos;
        let mut idx = Vec::with_capacity(n);
        idx.extend_from_slice(&pos[..n_pos]);
        idx.extend_from_slice(&neg[..n_neg]);
        idx
    } else {
        let mut all: Vec<usize> = (0..total).collect();
        all.shuffle(&mut rng);
        all.truncate(n);
        all
    };

    let (xs, ys) = take_rows(x, y, &indices);
    Ok((xs, ys))
}

/// Order of the two fitted transforms in the preprocessing pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PipelineOrder {
    /// Reduce with PCA first, then standardize the components.
    #[default]
    PcaThenScale,
    /// Standardize the raw features first, then reduce with PCA.
    ScaleThenPca,
}

impl std::fmt::Display for PipelineOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineOrder::PcaThenScale => write!(f, "PCA_THEN_SCALE"),
            PipelineOrder::ScaleThenPca => write!(f, "SCALE_THEN_PCA"),
        }
    }
}

/// The two transforms fitted on training data, applied in a fixed order,
/// plus a global angle scale applied to the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub order: PipelineOrder,
    pub pca: PcaModel,
    pub scaler: ScalerParams,
    pub feature_scale: f64,
}

/// Fit both transforms on training data only.
pub fn fit_pipeline(
    x_train: &Array2<f64>,
    k: usize,
    order: PipelineOrder,
    feature_scale: f64,
) -> Result<FittedPipeline> {
    if !(feature_scale.is_finite() && feature_scale > 0.0) {
        return Err(Error::InvalidArgument {
            what: "feature scale",
            details: format!("{feature_scale} is not a positive finite value"),
        });
    }
    let (pca, scaler) = match order {
        PipelineOrder::PcaThenScale => {
            let pca = fit_pca(x_train, k)?;
            let reduced = pca_transform(x_train, &pca)?;
            let scaler = fit_scaler(&reduced)?;
            (pca, scaler)
        }
        PipelineOrder::ScaleThenPca => {
            let scaler = fit_scaler(x_train)?;
            let scaled = apply_scaler(x_train, &scaler)?;
            let pca = fit_pca(&scaled, k)?;
            (pca, scaler)
        }
    };
    Ok(FittedPipeline {
        order,
        pca,
        scaler,
        feature_scale,
    })
}

impl FittedPipeline {
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let out = match self.order {
            PipelineOrder::PcaThenScale => {
                apply_scaler(&pca_transform(x, &self.pca)?, &self.scaler)?
            }
            PipelineOrder::ScaleThenPca => {
                pca_transform(&apply_scaler(x, &self.scaler)?, &self.pca)?
            }
        };
        Ok(if self.feature_scale == 1.0 {
            out
        } else {
            out * self.feature_scale
        })
    }
}
