//! Benchmark-only crate; see `benches/`.

pub use subvoter_core;
