//! Multi-agent code quality assessment engine.

pub mod assess;
pub mod config;
pub mod engine;
pub mod exec;
pub mod ingest;
pub mod lint;
pub mod memory;
pub mod provider;
pub mod report;
pub mod runtime;
