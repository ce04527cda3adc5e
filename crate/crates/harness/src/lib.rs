//! Experiment presets, configuration, CSV output and self-checks for the
//! `kvaudit` command-line tool.

pub mod config;
pub mod error;
pub mod preset;
pub mod run;
pub mod selftest;
pub mod table;

pub use config::Overrides;
pub use error::{HarnessError, Result};
pub use preset::{GridPoint, Preset, Procedure, DEFAULT_EPSILONS, PRESET_NAMES};
pub use run::{certified_epsilon, run_experiment, Outcome};
pub use table::{emit_csv, emit_trace_csv, fmt_g, read_results, write_results, ResultRow, TraceRow};
