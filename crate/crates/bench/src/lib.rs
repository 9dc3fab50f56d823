// benchmark-only crate; kernels live in benches/kernels.rs
