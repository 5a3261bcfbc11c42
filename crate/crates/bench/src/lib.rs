//! Criterion benchmarks for the hot paths of `caplab-core`. See `benches/`.
