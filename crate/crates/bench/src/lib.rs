//! Benchmark-only crate; see `benches/classifiers.rs`.
