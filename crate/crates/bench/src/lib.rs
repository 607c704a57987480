//! Criterion benchmarks for the jpac solvers live under `benches/`.
