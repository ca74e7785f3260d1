//! Weight and dataset ingestion, fixture generation and the benchmark
//! commands behind the `encact` binary.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod fixtures;
pub mod inputs;
pub mod report;

pub use commands::{cmd_approx_analyze, cmd_compare, cmd_gen_fixtures, cmd_infer, cmd_plan};
pub use config::RunConfig;
pub use csv_io::{export_weights_csv, load_weights_csv, read_tensor_csv, write_tensor_csv};
pub use error::BenchError;
pub use fixtures::{gen_fixtures, Manifest};
pub use report::{BenchReport, CompareRow};
