//! Benchmarks for the neo pipeline live in `benches/`.
