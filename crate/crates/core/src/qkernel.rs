//! Quantum kernel computation.
//!
//! The kernel between two feature vectors is the fidelity of their encoded
//! states, K(x, y) = |⟨φ(x)|φ(y)⟩|². Entries come either from the exact
//! statevector overlap or from the inversion test: run U(x) followed by the
//! gate-wise inverse of U(y) on |0...0⟩ and estimate the all-zero outcome
//! frequency from a finite number of shots.

use std::fmt;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{build_feature_map, encode, FeatureMapSpec};
use crate::error::{Error, Result};
use crate::qstate::StateVector;
use crate::seeding::mix;

/// How kernel entries are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelMode {
    Exact,
    Shots { shots: u64 },
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelMode::Exact => write!(f, "exact"),
            KernelMode::Shots { shots } => write!(f, "shots({shots})"),
        }
    }
}

/// A Gram matrix with evaluation provenance.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    /// Symmetric values in [0, 1] with an exact unit diagonal.
    pub values: Array2<f64>,
    pub mode: KernelMode,
    pub feature_map: FeatureMapSpec,
    /// Number of circuit/overlap evaluations performed: n(n-1)/2.
    pub eval_count: u64,
}

/// Seed for the unordered pair {i, j}, independent of evaluation order.
fn pair_seed(rng_seed: u64, i: usize, j: usize) -> u64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    mix(rng_seed, &[lo as u64, hi as u64])
}

fn check_row(x: &[f64], spec: &FeatureMapSpec) -> Result<()> {
    if x.len() != spec.n_features {
        return Err(Error::DimensionMismatch {
            what: "kernel input vector",
            expected: spec.n_features,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Exact kernel entry via the statevector overlap.
pub fn kernel_entry_exact(xi: &[f64], xj: &[f64], spec: &FeatureMapSpec) -> Result<f64> {
    check_row(xi, spec)?;
    check_row(xj, spec)?;
    let a = encode(xi, spec)?;
    let b = encode(xj, spec)?;
    Ok(fidelity(&a, &b))
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner_product(b)
        .expect("states from the same spec share a qubit count")
        .norm_sqr()
        .clamp(0.0, 1.0)
}

/// Shot-based kernel entry via the inversion test.
///
/// Deterministic for a fixed `rng_seed`.
pub fn kernel_entry_shots(
    xi: &[f64],
    xj: &[f64],
    spec: &FeatureMapSpec,
    shots: u64,
    rng_seed: u64,
) -> Result<f64> {
    check_row(xi, spec)?;
    check_row(xj, spec)?;
    if shots == 0 {
        return Err(Error::InvalidArgument {
            what: "shots",
            details: "must be at least 1".into(),
        });
    }
    let mut circuit = build_feature_map(xi, spec)?;
    circuit.append(&build_feature_map(xj, spec)?.inverse())?;
    let state = StateVector::zero(spec.n_features)?.apply_circuit(&circuit)?;
    let histogram = state.sample_counts(shots, rng_seed);
    let all_zero = "0".repeat(spec.n_features);
    Ok(histogram.count(&all_zero) as f64 / shots as f64)
}

fn entry(
    xi: ArrayView1<'_, f64>,
    xj: ArrayView1<'_, f64>,
    spec: &FeatureMapSpec,
    mode: KernelMode,
    seed: u64,
) -> Result<f64> {
    let xi = xi.as_slice().expect("row views of a standard-layout matrix are contiguous");
    let xj = xj.as_slice().expect("row views of a standard-layout matrix are contiguous");
    match mode {
        KernelMode::Exact => kernel_entry_exact(xi, xj, spec),
        KernelMode::Shots { shots } => kernel_entry_shots(xi, xj, spec, shots, seed),
    }
}

/// Full symmetric Gram matrix over the rows of `x`.
///
/// Each unordered off-diagonal pair is evaluated once and mirrored; the
/// diagonal is set to 1 analytically. Pairs are independent and evaluated in
/// parallel; shot-mode seeds are derived per pair, so results do not depend
/// on the schedule.
pub fn kernel_matrix(
    x: &Array2<f64>,
    spec: &FeatureMapSpec,
    mode: KernelMode,
    rng_seed: u64,
) -> Result<KernelMatrix> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if x.ncols() != spec.n_features {
        return Err(Error::DimensionMismatch {
            what: "dataset width",
            expected: spec.n_features,
            actual: x.ncols(),
        });
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();

    let computed: Result<Vec<f64>> = match mode {
        KernelMode::Exact => {
            // Encode each row once, then take pairwise overlaps.
            let states: Result<Vec<StateVector>> = (0..n)
                .into_par_iter()
                .map(|i| encode(x.row(i).as_slice().unwrap(), spec))
                .collect();
            let states = states?;
            Ok(pairs
                .par_iter()
                .with_min_len(64)
                .map(|&(i, j)| fidelity(&states[i], &states[j]))
                .collect())
        }
        KernelMode::Shots { .. } => pairs
            .par_iter()
            .with_min_len(16)
            .map(|&(i, j)| entry(x.row(i), x.row(j), spec, mode, pair_seed(rng_seed, i, j)))
            .collect(),
    };
    let computed = computed?;

    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        values[[i, i]] = 1.0;
    }
    for (&(i, j), &v) in pairs.iter().zip(&computed) {
        values[[i, j]] = v;
        values[[j, i]] = v;
    }

    Ok(KernelMatrix {
        values,
        mode,
        feature_map: *spec,
        eval_count: pairs.len() as u64,
    })
}

/// Rectangular kernel block between test rows and training rows.
///
/// Entry (i, j) is the kernel between `x_test` row i and `x_train` row j.
/// Shot-mode pair seeds use sorted indices, so `gram_cross(x, x, ...)`
/// reproduces `kernel_matrix(x, ...)` exactly.
pub fn gram_cross(
    x_test: &Array2<f64>,
    x_train: &Array2<f64>,
    spec: &FeatureMapSpec,
    mode: KernelMode,
    rng_seed: u64,
) -> Result<Array2<f64>> {
    if x_test.ncols() != spec.n_features || x_train.ncols() != spec.n_features {
        return Err(Error::DimensionMismatch {
            what: "dataset width",
            expected: spec.n_features,
            actual: x_test.ncols().max(x_train.ncols()),
        });
    }
    let m = x_test.nrows();
    let n = x_train.nrows();
    if m == 0 || n == 0 {
        return Err(Error::EmptyInput);
    }

    let flat: Result<Vec<f64>> = match mode {
        KernelMode::Exact => {
            let test_states: Result<Vec<StateVector>> = (0..m)
                .into_par_iter()
                .map(|i| encode(x_test.row(i).as_slice().unwrap(), spec))
                .collect();
            let train_states: Result<Vec<StateVector>> = (0..n)
                .into_par_iter()
                .map(|j| encode(x_train.row(j).as_slice().unwrap(), spec))
                .collect();
            let (test_states, train_states) = (test_states?, train_states?);
            Ok((0..m * n)
                .into_par_iter()
                .with_min_len(64)
                .map(|k| fidelity(&test_states[k / n], &train_states[k % n]))
                .collect())
        }
        KernelMode::Shots { .. } => (0..m * n)
            .into_par_iter()
            .with_min_len(16)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                entry(
                    x_test.row(i),
                    x_train.row(j),
                    spec,
                    mode,
                    pair_seed(rng_seed, i, j),
                )
            })
            .collect(),
    };

    Ok(Array2::from_shape_vec((m, n), flat?).expect("m*n entries"))
}
