//! Criterion benchmarks for seqweak-core; see `benches/`.
