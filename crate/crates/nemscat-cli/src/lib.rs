//! Scenario configuration, figure presets, deterministic CSV/SVG emission and
//! the orchestration behind the `nemscat` command-line tool.
//!
//! The numerics live in `nemscat-core`; this crate owns everything with an
//! externally visible surface: the JSON scenario schema, the built-in figure
//! presets, parameter sweeps, and byte-reproducible output files.

pub mod config;
pub mod error;
pub mod presets;
pub mod runner;
pub mod svg;

pub use config::{parse_config, parse_config_str, serialize_config, ScenarioConfig};
pub use error::{exit_code, CliError};
pub use presets::{figure_preset, preset_variants, PRESET_NAMES};
pub use runner::{
    run_scenario, sweep, CsvPayload, Manifest, OutputFormat, RunOptions, ScenarioResult,
    SweepResult,
};
pub use svg::emit_svg;
