//! Criterion benchmarks for `stdf-core`; see `benches/`.
