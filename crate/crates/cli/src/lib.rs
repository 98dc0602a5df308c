//! Experiment runner for the `lattice_resonance` engine.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Command, ConfigError, ExperimentConfig};
pub use run::{run, Outcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Exit code for a failed run: bad input maps to 2, engine failures to 3.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<lattice_resonance::Error>() {
            return if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        }
        if cause.is::<ConfigError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_NUMERICAL
}
