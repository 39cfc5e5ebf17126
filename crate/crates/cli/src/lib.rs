//! Scenario runner for the `cptshift` command: TOML scenario files in,
//! per-sweep CSVs, a roots table and a JSON manifest out.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use output::emit_csv;
pub use run::{output_dir, run_scenario, Manifest, OUTPUT_DIR_ENV};
