//! Variational quantum classifier.
//!
//! A sample is encoded by the feature map, processed by a trainable ansatz of
//! RY columns alternating with CX entangling layers, and scored by
//! aggregating Pauli-Z expectations. Scores live in [-1, 1]; a threshold
//! turns them into ±1 labels. Training minimizes the mean squared error
//! between scores and labels with one of the optimizers from [`crate::optim`].
//!
//! Expectations are exact statevector values throughout training; shot-based
//! scoring exists as an evaluation-time option only.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{encode, FeatureMapSpec};
use crate::error::{Error, Result};
use crate::optim::{minimize, MinimizeOutcome, OptimizerConfig, OptimizerKind};
use crate::qstate::{CircuitDescription, Gate, StateVector, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Entangler {
    LinearChain,
    Ring,
}

/// Ansatz layout: an RY column before each entangling layer and one after
/// the last, so the parameter count is `n_qubits * (layers + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, layers: usize, entangler: Entangler) -> Result<Self> {
        let spec = Self {
            n_qubits,
            layers,
            entangler,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::QubitCapacity(self.n_qubits));
        }
        if self.layers == 0 {
            return Err(Error::InvalidArgument {
                what: "ansatz layers",
                details: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.n_qubits * (self.layers + 1)
    }
}

/// How per-qubit Z expectations become one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreAggregation {
    /// Unweighted mean over all qubits.
    #[default]
    MeanZ,
    /// Z expectation of qubit 0 only.
    FirstQubitZ,
}

/// Everything needed to score a sample except the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqcCircuitConfig {
    pub ansatz: AnsatzSpec,
    pub feature_map: FeatureMapSpec,
    #[serde(default)]
    pub aggregation: ScoreAggregation,
}

impl VqcCircuitConfig {
    pub fn validate(&self) -> Result<()> {
        self.ansatz.validate()?;
        self.feature_map.validate()?;
        if self.ansatz.n_qubits != self.feature_map.n_features {
            return Err(Error::QubitCountMismatch {
                circuit: self.ansatz.n_qubits,
                state: self.feature_map.n_features,
            });
        }
        Ok(())
    }
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub theta: Vec<f64>,
    pub ansatz: AnsatzSpec,
    pub feature_map: FeatureMapSpec,
    #[serde(default)]
    pub aggregation: ScoreAggregation,
    pub threshold: f64,
    /// (epoch, loss) pairs recorded during training.
    pub training_log: Vec<(usize, f64)>,
}

impl VqcModel {
    fn circuit_config(&self) -> VqcCircuitConfig {
        VqcCircuitConfig {
            ansatz: self.ansatz,
            feature_map: self.feature_map,
            aggregation: self.aggregation,
        }
    }

    /// Exact score in [-1, 1].
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        score(&self.theta, x, &self.circuit_config())
    }

    /// Score estimated from measurement counts instead of exact amplitudes.
    pub fn forward_sampled(&self, x: &[f64], shots: u64, rng_seed: u64) -> Result<f64> {
        let state = prepared_state(&self.theta, x, &self.circuit_config())?;
        let histogram = state.sample_counts(shots, rng_seed);
        let n = self.ansatz.n_qubits;
        let mut z_sums = vec![0.0; n];
        for (bits, &count) in histogram.counts() {
            for q in 0..n {
                // Leftmost character is the highest qubit.
                let bit = bits.as_bytes()[n - 1 - q];
                let sign = if bit == b'0' { 1.0 } else { -1.0 };
                z_sums[q] += sign * count as f64;
            }
        }
        let shots = shots as f64;
        Ok(match self.aggregation {
            ScoreAggregation::MeanZ => z_sums.iter().sum::<f64>() / (n as f64 * shots),
            ScoreAggregation::FirstQubitZ => z_sums[0] / shots,
        })
    }

    /// +1 when the score reaches the threshold, -1 otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<i32> {
        Ok(if self.forward(x)? >= self.threshold {
            1
        } else {
            -1
        })
    }
}

/// Build the ansatz circuit for a parameter vector.
pub fn build_ansatz(theta: &[f64], spec: &AnsatzSpec) -> Result<CircuitDescription> {
    spec.validate()?;
    if theta.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            what: "ansatz parameters",
            expected: spec.param_count(),
            actual: theta.len(),
        });
    }
    let n = spec.n_qubits;
    let mut circuit = CircuitDescription::new(n)?;
    let mut columns = theta.chunks_exact(n);
    for _ in 0..spec.layers {
        push_rotation_column(&mut circuit, columns.next().unwrap())?;
        push_entangler(&mut circuit, spec)?;
    }
    push_rotation_column(&mut circuit, columns.next().unwrap())?;
    Ok(circuit)
}

fn push_rotation_column(circuit: &mut CircuitDescription, angles: &[f64]) -> Result<()> {
    for (qubit, &angle) in angles.iter().enumerate() {
        circuit.push(Gate::Ry {
            target: qubit,
            angle,
        })?;
    }
    Ok(())
}

fn push_entangler(circuit: &mut CircuitDescription, spec: &AnsatzSpec) -> Result<()> {
    let n = spec.n_qubits;
    for qubit in 0..n.saturating_sub(1) {
        circuit.push(Gate::Cx {
            control: qubit,
            target: qubit + 1,
        })?;
    }
    if spec.entangler == Entangler::Ring && n >= 3 {
        circuit.push(Gate::Cx {
            control: n - 1,
            target: 0,
        })?;
    }
    Ok(())
}

fn prepared_state(theta: &[f64], x: &[f64], cfg: &VqcCircuitConfig) -> Result<StateVector> {
    cfg.validate()?;
    let encoded = encode(x, &cfg.feature_map)?;
    encoded.apply_circuit(&build_ansatz(theta, &cfg.ansatz)?)
}

fn aggregate(state: &StateVector, aggregation: ScoreAggregation) -> f64 {
    match aggregation {
        ScoreAggregation::MeanZ => {
            let n = state.n_qubits();
            (0..n)
                .map(|q| state.expectation_z(q).expect("qubit index in range"))
                .sum::<f64>()
                / n as f64
        }
        ScoreAggregation::FirstQubitZ => state.expectation_z(0).expect("qubit 0 exists"),
    }
}

/// Exact score for one sample.
pub fn score(theta: &[f64], x: &[f64], cfg: &VqcCircuitConfig) -> Result<f64> {
    Ok(aggregate(&prepared_state(theta, x, cfg)?, cfg.aggregation))
}

/// Encodes the dataset once; scoring a parameter vector then only applies
/// the ansatz. This is what makes full-batch training affordable.
///
/// The feature map and ansatz consist of RY and CX gates only, so every
/// amplitude stays real: states are kept as one row-major (2^n, m) f64
/// matrix whose rows are amplitude indices and whose columns are samples.
/// RY sweeps contiguous row pairs across all samples at once and CX is a
/// lazy permutation of row indices, never a data move.
struct CachedScorer<'a> {
    dim: usize,
    m: usize,
    /// (dim, m) row-major real amplitudes of the encoded samples.
    encoded: Vec<f64>,
    /// Per-amplitude-index readout weight implementing the aggregation.
    weights: Vec<f64>,
    cfg: &'a VqcCircuitConfig,
}

fn two_rows_mut(amps: &mut [f64], m: usize, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_ne!(a, b);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let (head, tail) = amps.split_at_mut(hi * m);
    let lo_row = &mut head[lo * m..lo * m + m];
    let hi_row = &mut tail[..m];
    if a < b {
        (lo_row, hi_row)
    } else {
        (hi_row, lo_row)
    }
}

impl<'a> CachedScorer<'a> {
    fn new(x: &Array2<f64>, cfg: &'a VqcCircuitConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.ansatz.n_qubits;
        let dim = 1usize << n;
        let m = x.nrows();
        let mut encoded = vec![0.0; dim * m];
        for (col, row) in x.rows().into_iter().enumerate() {
            let state = encode(row.as_slice().unwrap(), &cfg.feature_map)?;
            for (idx, amp) in state.amplitudes().iter().enumerate() {
                encoded[idx * m + col] = amp.re;
            }
        }
        let weights = (0..dim)
            .map(|idx| match cfg.aggregation {
                // Sum of per-qubit Z signs, averaged over qubits.
                ScoreAggregation::MeanZ => {
                    (n as f64 - 2.0 * (idx.count_ones() as f64)) / n as f64
                }
                ScoreAggregation::FirstQubitZ => {
                    if idx & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect();
        Ok(Self {
            dim,
            m,
            encoded,
            weights,
            cfg,
        })
    }

    fn scores(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let circuit = build_ansatz(theta, &self.cfg.ansatz)?;
        let m = self.m;
        let mut amps = self.encoded.clone();
        // Logical amplitude index -> physical row.
        let mut rows: Vec<usize> = (0..self.dim).collect();

        for gate in circuit.gates() {
            match *gate {
                Gate::Ry { target, angle } => {
                    let (s, c) = (angle / 2.0).sin_cos();
                    let step = 1usize << target;
                    let mut base = 0;
                    while base < self.dim {
                        for i in base..base + step {
                            let (lo, hi) = two_rows_mut(&mut amps, m, rows[i], rows[i + step]);
                            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                                let (na, nb) = (c * *a - s * *b, s * *a + c * *b);
                                *a = na;
                                *b = nb;
                            }
                        }
                        base += 2 * step;
                    }
                }
                Gate::Cx { control, target } => {
                    let cmask = 1usize << control;
                    let tmask = 1usize << target;
                    for i in 0..self.dim {
                        if i & cmask != 0 && i & tmask == 0 {
                            rows.swap(i, i | tmask);
                        }
                    }
                }
                // The ansatz builder only emits RY and CX.
                Gate::Rz { .. } | Gate::H { .. } => unreachable!("ansatz gate alphabet"),
            }
        }

        let mut scores = vec![0.0; m];
        for (idx, &w) in self.weights.iter().enumerate() {
            let row = &amps[rows[idx] * m..rows[idx] * m + m];
            for (score, &a) in scores.iter_mut().zip(row) {
                *score += w * a * a;
            }
        }
        Ok(scores)
    }

    fn loss(&self, theta: &[f64], y: &[i32]) -> Result<f64> {
        let scores = self.scores(theta)?;
        Ok(mse(&scores, y))
    }

    fn gradient(&self, theta: &[f64], y: &[i32]) -> Result<Vec<f64>> {
        let base = self.scores(theta)?;
        let m = y.len() as f64;
        let mut shifted = theta.to_vec();
        let mut gradient = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            let original = shifted[k];
            shifted[k] = original + std::f64::consts::FRAC_PI_2;
            let plus = self.scores(&shifted)?;
            shifted[k] = original - std::f64::consts::FRAC_PI_2;
            let minus = self.scores(&shifted)?;
            shifted[k] = original;

            let mut g = 0.0;
            for i in 0..y.len() {
                let ds = 0.5 * (plus[i] - minus[i]);
                g += 2.0 * (base[i] - f64::from(y[i])) * ds;
            }
            gradient.push(g / m);
        }
        Ok(gradient)
    }
}

fn mse(scores: &[f64], y: &[i32]) -> f64 {
    let sum: f64 = scores
        .iter()
        .zip(y)
        .map(|(&s, &label)| {
            let d = s - f64::from(label);
            d * d
        })
        .sum();
    sum / y.len() as f64
}

fn check_training_inputs(x: &Array2<f64>, y: &[i32]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            what: "label vector",
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::InvalidLabel(f64::from(bad)));
    }
    Ok(())
}

/// Mean squared error between scores and ±1 labels.
pub fn loss(theta: &[f64], x: &Array2<f64>, y: &[i32], cfg: &VqcCircuitConfig) -> Result<f64> {
    check_training_inputs(x, y)?;
    CachedScorer::new(x, cfg)?.loss(theta, y)
}

/// Exact loss gradient via the two-point parameter-shift rule (shift π/2),
/// chained through the squared error.
pub fn parameter_shift_gradient(
    theta: &[f64],
    x: &Array2<f64>,
    y: &[i32],
    cfg: &VqcCircuitConfig,
) -> Result<Vec<f64>> {
    check_training_inputs(x, y)?;
    CachedScorer::new(x, cfg)?.gradient(theta, y)
}

/// Number of single-sample score evaluations a training run performs; used
/// for cost accounting.
pub fn training_score_evaluations(
    kind: OptimizerKind,
    epochs: usize,
    n_samples: usize,
    param_count: usize,
) -> u64 {
    let per_epoch = match kind {
        // Two perturbed full-batch objective evaluations.
        OptimizerKind::Spsa => 2,
        // One gradient pass (base + 2 per parameter) plus the post-update
        // objective evaluation.
        OptimizerKind::GradientDescent => 2 * param_count + 2,
    };
    (epochs * n_samples * per_epoch) as u64
}

/// Train a classifier: parameters start uniform in (-π, π) from `rng_seed`,
/// the configured optimizer runs for `epochs` full-batch iterations, and the
/// parameters with the lowest recorded loss are kept.
pub fn train_vqc(
    x: &Array2<f64>,
    y: &[i32],
    circuit: &VqcCircuitConfig,
    optimizer: &OptimizerConfig,
    epochs: usize,
    rng_seed: u64,
) -> Result<VqcModel> {
    check_training_inputs(x, y)?;
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    if epochs == 0 {
        return Err(Error::InvalidArgument {
            what: "epochs",
            details: "must be at least 1".into(),
        });
    }
    circuit.validate()?;
    if x.ncols() != circuit.feature_map.n_features {
        return Err(Error::DimensionMismatch {
            what: "feature width",
            expected: circuit.feature_map.n_features,
            actual: x.ncols(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let theta0: Vec<f64> = (0..circuit.ansatz.param_count())
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();

    let scorer = CachedScorer::new(x, circuit)?;
    let mut objective = |theta: &[f64]| scorer.loss(theta, y);
    let mut gradient_fn = |theta: &[f64]| scorer.gradient(theta, y);

    let MinimizeOutcome {
        theta_best,
        loss_trace,
    } = match optimizer.kind {
        OptimizerKind::GradientDescent => minimize(
            &mut objective,
            Some(&mut gradient_fn),
            &theta0,
            optimizer,
            epochs,
        )?,
        OptimizerKind::Spsa => minimize(&mut objective, None, &theta0, optimizer, epochs)?,
    };

    Ok(VqcModel {
        theta: theta_best,
        ansatz: circuit.ansatz,
        feature_map: circuit.feature_map,
        aggregation: circuit.aggregation,
        threshold: 0.0,
        training_log: loss_trace
            .into_iter()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .collect(),
    })
}
