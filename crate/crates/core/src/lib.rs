//! Quantum machine-learning classifiers on a dense statevector simulator.
//!
//! The crate implements the full pipeline behind two binary classifiers: a
//! quantum-kernel SVM (fidelity kernel plus an SMO dual solver) and a
//! variational quantum classifier (RY/CX ansatz with parameter-shift or SPSA
//! training), together with preprocessing (standardization, PCA, stratified
//! sampling), evaluation metrics (ACC/AUC/MCC), dataset I/O, and a sweep
//! harness that grids over PCA dimension, sample size and epoch count.

pub mod dataio;
pub mod encode;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod prep;
pub mod qkernel;
pub mod qstate;
pub mod seeding;
pub mod svm;
pub mod vqc;

pub use error::{Error, Result};
