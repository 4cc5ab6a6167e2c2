//! Criterion benchmarks for the tiercrypt pipeline live in `benches/`.
