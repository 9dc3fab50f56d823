//! Library surface of the experiment CLI: configuration, CSV ingestion,
//! the multi-trial runner, the bounds table, and plot/coefficient output.

pub mod bounds_table;
pub mod coeffs;
pub mod config;
pub mod ingest;
pub mod plot;
pub mod runner;
