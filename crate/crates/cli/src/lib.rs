//! Command-line front end: loads JSON system specs and drives the
//! frequency-domain analysis, locus export, simulation, and rate-scan
//! pipelines, emitting deterministic JSON/CSV reports.

pub mod commands;
pub mod report;
pub mod spec;

pub use commands::{analyze_spec, cmd_analyze, cmd_nyquist, cmd_rate_scan, cmd_simulate, CommonOpts};
pub use spec::{load_spec, SystemSpecFile};
