//! SVM dual solver over a precomputed kernel matrix.
//!
//! Training solves the standard soft-margin dual
//!
//! ```text
//! max  Σ α_i − ½ ΣΣ α_i α_j y_i y_j K_ij
//! s.t. 0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! ```
//!
//! by sequential minimal optimization with second-order working-pair
//! selection. Shot-estimated kernels may be slightly indefinite, so a small
//! ridge is added to the diagonal and pair-update denominators are floored;
//! both guards are the documented measurement-noise defaults.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alphas above this threshold count as support vectors.
pub const SUPPORT_TOL: f64 = 1e-8;
/// Ridge added to the kernel diagonal before solving.
const DIAG_REG: f64 = 1e-8;
/// Floor for pair-update denominators.
const DENOM_FLOOR: f64 = 1e-12;
/// Cap on SMO pair updates.
const MAX_PAIR_UPDATES: usize = 100_000;

/// A trained dual model. Prediction needs kernel rows against the training
/// set, which `training_ref` identifies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub labels: Vec<i32>,
    pub support_indices: Vec<usize>,
    pub c: f64,
    pub training_ref: String,
    /// False when the iteration cap was hit before the KKT tolerance; the
    /// model is still usable.
    pub converged: bool,
}

impl SvmModel {
    /// Σ α_i y_i k(x, x_i) + b for one kernel row against the training set.
    pub fn decision_function(&self, k_row: &[f64]) -> Result<f64> {
        if k_row.len() != self.alphas.len() {
            return Err(Error::DimensionMismatch {
                what: "kernel row",
                expected: self.alphas.len(),
                actual: k_row.len(),
            });
        }
        let sum: f64 = self
            .alphas
            .iter()
            .zip(&self.labels)
            .zip(k_row)
            .map(|((&a, &y), &k)| a * f64::from(y) * k)
            .sum();
        Ok(sum + self.bias)
    }

    /// Decision values for a block of kernel rows (one row per sample).
    pub fn decision_values(&self, k_rows: &Array2<f64>) -> Result<Vec<f64>> {
        k_rows
            .rows()
            .into_iter()
            .map(|row| self.decision_function(row.as_slice().unwrap()))
            .collect()
    }

    /// Sign of the decision value; an exact zero maps to +1.
    pub fn predict(&self, k_rows: &Array2<f64>) -> Result<Vec<i32>> {
        Ok(self
            .decision_values(k_rows)?
            .into_iter()
            .map(|v| if v >= 0.0 { 1 } else { -1 })
            .collect())
    }
}

/// Dual objective Σα − ½ αᵀ diag(y) K diag(y) α for the given kernel.
pub fn dual_objective(alphas: &[f64], y: &[i32], k: &Array2<f64>) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = k.row(i);
        for j in 0..n {
            if alphas[j] != 0.0 {
                quad += alphas[i] * alphas[j] * f64::from(y[i] * y[j]) * row[j];
            }
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// RBF kernel block: entry (i, j) = exp(-gamma * ||x_i - x2_j||^2).
pub fn rbf_kernel(x: &Array2<f64>, x2: &Array2<f64>, gamma: f64) -> Result<Array2<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument {
            what: "gamma",
            details: format!("{gamma} is not a positive finite value"),
        });
    }
    if x.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch {
            what: "feature width",
            expected: x.ncols(),
            actual: x2.ncols(),
        });
    }
    let mut out = Array2::<f64>::zeros((x.nrows(), x2.nrows()));
    for (i, xi) in x.rows().into_iter().enumerate() {
        for (j, xj) in x2.rows().into_iter().enumerate() {
            let dist2: f64 = xi
                .iter()
                .zip(xj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[[i, j]] = (-gamma * dist2).exp();
        }
    }
    Ok(out)
}

/// Train on a precomputed square kernel.
pub fn train_svm(k: &Array2<f64>, y: &[i32], c: f64, tol: f64) -> Result<SvmModel> {
    let (model, _trace) = smo_solve(k, y, c, tol, false)?;
    Ok(model)
}

/// Like [`train_svm`] but with a raised iteration cap; used as a long-run
/// reference for optimality checks.
pub fn train_svm_reference(k: &Array2<f64>, y: &[i32], c: f64, tol: f64) -> Result<SvmModel> {
    let (model, _trace) = smo_solve_capped(k, y, c, tol, false, 10 * MAX_PAIR_UPDATES)?;
    Ok(model)
}

fn smo_solve(
    k: &Array2<f64>,
    y: &[i32],
    c: f64,
    tol: f64,
    trace: bool,
) -> Result<(SvmModel, Vec<f64>)> {
    smo_solve_capped(k, y, c, tol, trace, MAX_PAIR_UPDATES)
}

fn smo_solve_capped(
    k: &Array2<f64>,
    y: &[i32],
    c: f64,
    tol: f64,
    trace: bool,
    max_iter: usize,
) -> Result<(SvmModel, Vec<f64>)> {
    let n = k.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "kernel matrix columns",
            expected: n,
            actual: k.ncols(),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "label vector",
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::InvalidLabel(f64::from(bad)));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            what: "svm parameters",
            details: format!("C = {c} and tol = {tol} must be positive"),
        });
    }
    let max_asymmetry = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (k[[i, j]] - k[[j, i]]).abs())
        .fold(0.0_f64, f64::max);
    if max_asymmetry > 1e-8 {
        return Err(Error::NonSymmetricKernel { max_asymmetry });
    }

    let mut solver = Smo {
        k,
        y: y.iter().map(|&v| f64::from(v)).collect(),
        c,
        alphas: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut final_gap = (0.0, 0.0);

    for _ in 0..max_iter {
        let Some(sel) = solver.select_working_pair(tol) else {
            converged = true;
            break;
        };
        final_gap = (sel.gmax, sel.gmax2);
        solver.update_pair(sel.i, sel.j);
        if trace {
            objective_trace.push(dual_objective(&solver.alphas, y, k));
        }
    }
    if converged {
        // Recompute the exit gap for the bias fallback.
        if let Some(gap) = solver.optimality_gap() {
            final_gap = gap;
        }
    }

    let bias = solver.bias(final_gap);
    let support_indices = solver
        .alphas
        .iter()
        .enumerate()
        .filter(|&(_, &a)| a > SUPPORT_TOL)
        .map(|(i, _)| i)
        .collect();

    Ok((
        SvmModel {
            alphas: solver.alphas,
            bias,
            labels: y.to_vec(),
            support_indices,
            c,
            training_ref: String::new(),
            converged,
        },
        objective_trace,
    ))
}

struct Smo<'a> {
    k: &'a Array2<f64>,
    y: Vec<f64>,
    c: f64,
    alphas: Vec<f64>,
    /// Gradient of the dual *minimization* form: G_i = Σ_j Q_ij α_j − 1.
    grad: Vec<f64>,
}

struct Selection {
    i: usize,
    j: usize,
    gmax: f64,
    gmax2: f64,
}

impl Smo<'_> {
    /// Effective Q entry including the diagonal ridge: Q_ij = y_i y_j K_ij.
    fn q(&self, i: usize, j: usize) -> f64 {
        let reg = if i == j { DIAG_REG } else { 0.0 };
        self.y[i] * self.y[j] * (self.k[[i, j]] + reg)
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alphas[t] < self.c) || (self.y[t] < 0.0 && self.alphas[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alphas[t] > 0.0) || (self.y[t] < 0.0 && self.alphas[t] < self.c)
    }

    /// (gmax, gmax2) where gmax = max_{I_up} −y G and gmax2 = max_{I_low} y G;
    /// their sum is the maximal KKT violation.
    fn optimality_gap(&self) -> Option<(f64, f64)> {
        let n = self.alphas.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        for t in 0..n {
            if self.in_up(t) {
                gmax = gmax.max(-self.y[t] * self.grad[t]);
            }
            if self.in_low(t) {
                gmax2 = gmax2.max(self.y[t] * self.grad[t]);
            }
        }
        if gmax.is_finite() && gmax2.is_finite() {
            Some((gmax, gmax2))
        } else {
            None
        }
    }

    /// Maximal-violating pair with a second-order choice of the partner,
    /// or None when the KKT gap is within tolerance.
    fn select_working_pair(&self, tol: f64) -> Option<Selection> {
        let n = self.alphas.len();

        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let neg_y_g = -self.y[t] * self.grad[t];
            gmax2 = gmax2.max(self.y[t] * self.grad[t]);
            let grad_diff = gmax - neg_y_g;
            if grad_diff > 0.0 {
                let quad = (self.q(i, i) + self.q(t, t) - 2.0 * self.y[i] * self.y[t] * self.q(i, t))
                    .max(DENOM_FLOOR);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }

        if j == usize::MAX || gmax + gmax2 <= tol {
            return None;
        }
        Some(Selection { i, j, gmax, gmax2 })
    }

    /// Analytic two-variable update with box clipping along the equality
    /// constraint; the dual objective never decreases.
    fn update_pair(&mut self, i: usize, j: usize) {
        let c = self.c;
        let old_i = self.alphas[i];
        let old_j = self.alphas[j];
        let quad = (self.q(i, i) + self.q(j, j) - 2.0 * self.y[i] * self.y[j] * self.q(i, j))
            .max(DENOM_FLOOR);

        if self.y[i] != self.y[j] {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = old_i - old_j;
            self.alphas[i] += delta;
            self.alphas[j] += delta;
            if diff > 0.0 {
                if self.alphas[j] < 0.0 {
                    self.alphas[j] = 0.0;
                    self.alphas[i] = diff;
                }
            } else if self.alphas[i] < 0.0 {
                self.alphas[i] = 0.0;
                self.alphas[j] = -diff;
            }
            if diff > 0.0 {
                if self.alphas[i] > c {
                    self.alphas[i] = c;
                    self.alphas[j] = c - diff;
                }
            } else if self.alphas[j] > c {
                self.alphas[j] = c;
                self.alphas[i] = c + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = old_i + old_j;
            self.alphas[i] -= delta;
            self.alphas[j] += delta;
            if sum > c {
                if self.alphas[i] > c {
                    self.alphas[i] = c;
                    self.alphas[j] = sum - c;
                }
            } else if self.alphas[j] < 0.0 {
                self.alphas[j] = 0.0;
                self.alphas[i] = sum;
            }
            if sum > c {
                if self.alphas[j] > c {
                    self.alphas[j] = c;
                    self.alphas[i] = sum - c;
                }
            } else if self.alphas[i] < 0.0 {
                self.alphas[i] = 0.0;
                self.alphas[j] = sum;
            }
        }

        let d_i = self.alphas[i] - old_i;
        let d_j = self.alphas[j] - old_j;
        for t in 0..self.alphas.len() {
            self.grad[t] += self.q(t, i) * d_i + self.q(t, j) * d_j;
        }
    }

    /// Bias from unbounded support vectors (mean of −y_i G_i, which equals
    /// y_i − Σ_j α_j y_j K_ij there), falling back to the midpoint of the
    /// optimality gap when every support vector sits on a bound.
    fn bias(&self, (gmax, gmax2): (f64, f64)) -> f64 {
        let unbounded: Vec<usize> = (0..self.alphas.len())
            .filter(|&t| self.alphas[t] > SUPPORT_TOL && self.alphas[t] < self.c - SUPPORT_TOL)
            .collect();
        if unbounded.is_empty() {
            return (gmax - gmax2) / 2.0;
        }
        unbounded
            .iter()
            .map(|&t| -self.y[t] * self.grad[t])
            .sum::<f64>()
            / unbounded.len() as f64
    }
}
