//! Configuration files, run orchestration, reports and plot export for the
//! sampling-based Lyapunov certifier.

pub mod config;
pub mod exec;
pub mod export;
pub mod pipeline;
pub mod report;

pub use config::{Overrides, RunConfig};
pub use pipeline::{run_levelset, run_verify_ct, run_verify_dt};
pub use report::{RunReport, Verdict};
