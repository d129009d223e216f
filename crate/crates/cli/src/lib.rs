//! Batch pipeline behind the `calmfeed` command.

pub mod artifacts;
pub mod config;
pub mod stages;

pub use config::RunConfig;
