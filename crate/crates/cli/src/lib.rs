//! Configuration, report emission and the verification suite behind the
//! `caplab` binary.

pub mod anchors;
pub mod checks;
pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run_construct, run_cover, run_functional, run_kernel, run_verify};
pub use config::RunConfig;
pub use report::{CheckRecord, Report, Status};
