//! Criterion benchmarks for the scoring and statistics paths live in `benches/`.
