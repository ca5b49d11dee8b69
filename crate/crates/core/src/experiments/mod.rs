//! Runnable experiments behind the CLI: each takes a resolved config, does
//! its measurements, and writes deterministic reports.

pub mod config;
pub mod forward;
pub mod net_count;
pub mod pigeonhole;
pub mod report;
pub mod stability;
pub mod sweep;
