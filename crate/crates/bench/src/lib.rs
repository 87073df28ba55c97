//! Criterion benchmarks for renorm-core kernels live in `benches/`.
