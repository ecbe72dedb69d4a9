//! Configuration, scenario runners and tabular output.

pub mod config;
pub mod presets;
pub mod scenarios;
pub mod selfcheck;
pub mod table;

pub use config::*;
pub use presets::{linspace, preset};
pub use scenarios::{
    cycle_amplitudes, cycle_drift, run, run_gamma_sweep, run_long_pulse, run_lorentz_analytic, run_max_amplitude_scan,
    run_pulse_train_map, run_train_compare,
};
pub use selfcheck::{run_selfcheck, CheckResult};
pub use table::{format_value, Manifest, Provenance, ResultTable, RunOutput};
