//! Experiment runs: configuration, artifacts, in-run property checks and plots.

pub mod analysis;
pub mod config;
pub mod experiments;
pub mod plot;
pub mod rundir;
pub mod stats;

pub use analysis::{all_passed, Check};
pub use config::{Profile, RunConfig};
pub use experiments::{exp1, exp2_collect, exp2_eval, exp2_train, exp3a, exp3b, load_model};
pub use rundir::{default_output_root, RunDir, OUT_DIR_ENV};
