//! Micro-benchmarks live under `benches/`; run them with
//! `cargo bench -p pirrag-bench`. End-to-end system comparisons are the
//! `pirrag bench` command.
