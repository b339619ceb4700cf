//! Scenario generation, initialization, baseline schemes, sweeps and
//! numerical checks.

pub mod gradcheck;
pub mod init;
pub mod landscape;
pub mod run;
pub mod scenario;
pub mod scheme;
pub mod sweep;

pub use gradcheck::{check_gradient, finite_difference_gradient, max_relative_error};
pub use init::{circle_packing, initialize_variables, zf_precoder};
pub use landscape::{gain_landscape, Landscape};
pub use run::{run_scheme, RunOptions, SchemeResult};
pub use scenario::{generate_scenario, perturb_fri, trial_seed, ScenarioParams};
pub use scheme::{quantize_phases, PhaseMode, PositionMode, SchemeName, SchemeSpec};
pub use sweep::{run_sweep, SweepConfig, SweepParam, SweepRow, SweepTable, CSV_COLUMNS};
