//! Dense statevector simulator.
//!
//! A state over `n` qubits is a complex vector of `2^n` amplitudes. Qubit 0
//! is the least-significant bit of the basis-state index, so `|01⟩` (qubit 1
//! in `|0⟩`, qubit 0 in `|1⟩`) lives at index 1. Every public operation is
//! pure: the input state is left untouched and a new state is returned.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hard capacity bound: 2^20 amplitudes (16 MiB per state).
pub const MAX_QUBITS: usize = 20;

/// A single gate from the supported alphabet {RY, RZ, H, CX}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    H { target: usize },
    Cx { control: usize, target: usize },
}

impl Gate {
    /// The gate-wise inverse: rotations negate their angle, H and CX are
    /// self-inverse.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { target, angle } => Gate::Ry {
                target,
                angle: -angle,
            },
            Gate::Rz { target, angle } => Gate::Rz {
                target,
                angle: -angle,
            },
            g => g,
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        let check_index = |index: usize| {
            if index >= n_qubits {
                Err(Error::QubitIndex { index, n_qubits })
            } else {
                Ok(())
            }
        };
        match *self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::H { target } => {
                check_index(target)
            }
            Gate::Cx { control, target } => {
                check_index(control)?;
                check_index(target)?;
                if control == target {
                    return Err(Error::ControlEqualsTarget(control));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Ry { target, angle } => write!(f, "RY({angle}) q{target}"),
            Gate::Rz { target, angle } => write!(f, "RZ({angle}) q{target}"),
            Gate::H { target } => write!(f, "H q{target}"),
            Gate::Cx { control, target } => write!(f, "CX(q{control}, q{target})"),
        }
    }
}

/// An ordered gate list over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDescription {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl CircuitDescription {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCapacity(n_qubits));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate after validating its indices.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Append all gates of `other`, which must act on the same qubit count.
    pub fn append(&mut self, other: &CircuitDescription) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitCountMismatch {
                circuit: other.n_qubits,
                state: self.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// The inverse circuit: gates reversed, each replaced by its inverse.
    pub fn inverse(&self) -> CircuitDescription {
        CircuitDescription {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

/// Measurement counts over computational-basis bitstrings.
///
/// Keys are bitstrings of length `n_qubits` with qubit `n-1` leftmost
/// (standard ket ordering), so the all-zero outcome is `"00...0"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeHistogram {
    counts: BTreeMap<String, u64>,
    shots: u64,
}

impl OutcomeHistogram {
    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Count for one bitstring, 0 if never observed.
    pub fn count(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Dense complex amplitude vector of length `2^n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zero basis state `|0...0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCapacity(n_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Apply one gate, returning the transformed state.
    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    /// Apply a circuit's gates in list order, returning the final state.
    pub fn apply_circuit(&self, circuit: &CircuitDescription) -> Result<StateVector> {
        if circuit.n_qubits != self.n_qubits {
            return Err(Error::QubitCountMismatch {
                circuit: circuit.n_qubits,
                state: self.n_qubits,
            });
        }
        let mut out = self.clone();
        for gate in circuit.gates() {
            out.apply_gate_mut(gate)?;
        }
        Ok(out)
    }

    /// In-place gate application; the building block behind the pure API.
    pub(crate) fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        match *gate {
            Gate::Ry { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.map_pairs(target, |a, b| (a * c - b * s, a * s + b * c));
            }
            Gate::Rz { target, angle } => {
                let phase0 = Complex64::from_polar(1.0, -angle / 2.0);
                let phase1 = Complex64::from_polar(1.0, angle / 2.0);
                self.map_pairs(target, |a, b| (a * phase0, b * phase1));
            }
            Gate::H { target } => {
                let f = std::f64::consts::FRAC_1_SQRT_2;
                self.map_pairs(target, |a, b| ((a + b) * f, (a - b) * f));
            }
            Gate::Cx { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amps.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    /// Visit every (bit=0, bit=1) amplitude pair for `target` and replace it.
    fn map_pairs<F>(&mut self, target: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let step = 1usize << target;
        let mut base = 0;
        while base < self.amps.len() {
            let (lo, hi) = self.amps[base..base + 2 * step].split_at_mut(step);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (na, nb) = f(*a, *b);
                *a = na;
                *b = nb;
            }
            base += 2 * step;
        }
    }

    /// `|amplitude|^2` per basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draw `shots` independent basis-state samples.
    ///
    /// The stream is ChaCha8 seeded with `rng_seed`; each shot consumes one
    /// uniform f64 in [0, 1) and maps it through the cumulative distribution,
    /// so identical seeds reproduce identical histograms.
    pub fn sample_counts(&self, shots: u64, rng_seed: u64) -> OutcomeHistogram {
        let probs = self.probabilities();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let last = cumulative.len() - 1;

        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut per_index = vec![0u64; probs.len()];
        for _ in 0..shots {
            let u: f64 = rng.random();
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            per_index[idx] += 1;
        }

        let counts = per_index
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(idx, c)| (self.bitstring(idx), c))
            .collect();
        OutcomeHistogram { counts, shots }
    }

    fn bitstring(&self, index: usize) -> String {
        format!("{index:0width$b}", width = self.n_qubits)
    }

    /// `⟨self|other⟩ = Σ conj(a_k) b_k`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitCountMismatch {
                circuit: other.n_qubits,
                state: self.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Pauli-Z expectation on one qubit: +1 weight where its bit is 0, -1
    /// where it is 1.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let mask = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let sign = if i & mask == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum())
    }
}
