//! Angle-encoding feature maps.
//!
//! A feature vector x becomes the state U(x)|0...0⟩ where U(x) applies
//! RY(x_i) on qubit i, optionally followed by a CX chain, repeated a
//! configurable number of times. One qubit per feature; angles are used raw
//! (inputs are standardized upstream, so no extra rescaling is applied).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{CircuitDescription, Gate, StateVector, MAX_QUBITS};

pub const MAX_REPETITIONS: usize = 4;

/// Configuration of the encoding circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    /// Number of input features; equals the qubit count.
    pub n_features: usize,
    /// Append a CX(i, i+1) chain after each rotation column.
    pub entangling: bool,
    /// Number of encode[-entangle] blocks.
    pub repetitions: usize,
}

impl FeatureMapSpec {
    pub fn new(n_features: usize, entangling: bool, repetitions: usize) -> Result<Self> {
        let spec = Self {
            n_features,
            entangling,
            repetitions,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default map for quantum-kernel SVMs: one entangled block.
    pub fn qsvm_default(n_features: usize) -> Result<Self> {
        Self::new(n_features, true, 1)
    }

    /// Default input layer for the variational classifier: rotations only,
    /// entanglement comes from the variational layers.
    pub fn vqc_default(n_features: usize) -> Result<Self> {
        Self::new(n_features, false, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_features > MAX_QUBITS {
            return Err(Error::QubitCapacity(self.n_features));
        }
        if self.repetitions == 0 || self.repetitions > MAX_REPETITIONS {
            return Err(Error::InvalidArgument {
                what: "feature map repetitions",
                details: format!("{} outside 1..={MAX_REPETITIONS}", self.repetitions),
            });
        }
        Ok(())
    }
}

/// Build the encoding circuit for one feature vector.
pub fn build_feature_map(x: &[f64], spec: &FeatureMapSpec) -> Result<CircuitDescription> {
    spec.validate()?;
    if x.len() != spec.n_features {
        return Err(Error::DimensionMismatch {
            what: "feature vector",
            expected: spec.n_features,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector"));
    }

    let n = spec.n_features;
    let mut circuit = CircuitDescription::new(n)?;
    for _ in 0..spec.repetitions {
        for (qubit, &angle) in x.iter().enumerate() {
            circuit.push(Gate::Ry {
                target: qubit,
                angle,
            })?;
        }
        if spec.entangling {
            for qubit in 0..n.saturating_sub(1) {
                circuit.push(Gate::Cx {
                    control: qubit,
                    target: qubit + 1,
                })?;
            }
        }
    }
    Ok(circuit)
}

/// Encode a feature vector into a quantum state.
pub fn encode(x: &[f64], spec: &FeatureMapSpec) -> Result<StateVector> {
    let circuit = build_feature_map(x, spec)?;
    StateVector::zero(spec.n_features)?.apply_circuit(&circuit)
}
