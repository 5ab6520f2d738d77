//! Criterion benchmarks for `tfd-core`; see `benches/`.
