//! Configuration, file formats and subcommands behind the `dsflow` binary.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{cmd_check, cmd_dual_check, cmd_run, cmd_sweep, exit_code, CheckReport, CheckSource, RunOutcome};
pub use config::{parse_config, parse_config_file, InitialProfile, Scenario};
pub use io::{read_profile, read_trace, write_profile, RunReport};
