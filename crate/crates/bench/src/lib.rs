//! Criterion benchmarks for the clock engines live in `benches/`.
