//! Experiment harness: configuration, coupled error traces, rate sweeps,
//! stability suites and report files.

pub mod config;
pub mod rates;
pub mod reference;
pub mod report;
pub mod suites;
pub mod trace;

pub use config::{config_hash, parse_config, ExperimentConfig, ReferenceKind};
pub use rates::{rate_in_n, rate_in_tau, RateRow, RateTable, SlopeFit};
pub use reference::Reference;
pub use report::emit_report;
pub use suites::{crossover_lipschitz_suite, selection_stability_suite, SuiteReport};
pub use trace::{coupled_error_trace, TraceTable};
