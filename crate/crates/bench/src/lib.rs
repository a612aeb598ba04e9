//! Criterion benchmarks for series evaluation and path simulation; see `benches/`.
