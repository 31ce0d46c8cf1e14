//! Experiment configs, repeated runs, coverage and density grids.
//!
//! All randomness derives from the config seed through named substreams
//! (`observed`, `chain`, `abc`, `grid`, ...) indexed by repeat or grid point,
//! so outputs do not depend on the number of workers.

mod bundled;
mod config;
mod experiment;
mod figures;
mod grid;

pub use bundled::{bundled_config, bundled_names};
pub use config::{
    AbcSection, Adjustment, ConfigError, ExperimentConfig, ExperimentSection, InitStrategy, Method,
};
pub use experiment::{
    build_context, coverage_study, equal_tailed_interval, intervals_of, observed_dataset,
    outcome_from_samples, pilot_candidates, run_experiment, run_repeat, run_repeat_draws,
    CoverageReport, HarnessError, RepeatOutcome,
};
pub use figures::{pearson, reference_curve, NormalVarReference, ReferenceCurve};
pub use grid::{density_grid, read_theta_grid, write_grid_csv, GridRow};
