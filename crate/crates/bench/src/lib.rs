//! Criterion benchmarks for the decomposition kernels live in `benches/`.
