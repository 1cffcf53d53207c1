//! Text configuration, scenario runs, CSV/JSON artifacts and the reference
//! 2D comparison.

pub mod config;
pub mod export;
pub mod reproduce;
pub mod scenario;

pub use config::{load_config, parse_config, FieldSpec, OperatorSpec, ScenarioConfig};
pub use export::{export_field_csv, export_signal_csv, read_signal_csv};
pub use reproduce::{reproduce_2d, Comparison, ReproduceOptions};
pub use scenario::{export_from_manifest, run_scenario, solve_scenario, Manifest};
