//! Benchmark-only crate; see `benches/planner.rs`.
