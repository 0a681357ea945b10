//! Criterion benchmarks for the lesion pipeline; see `benches/pipeline.rs`.
