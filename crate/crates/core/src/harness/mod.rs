//! Scenario files, trajectory I/O, reports and sweeps behind the `handy` CLI.

pub mod config;
pub mod csv_io;
pub mod figures;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{ConfigError, Scenario, ScenarioFile};
pub use csv_io::{read_trajectory, write_trajectory, CsvError, COLUMNS};
pub use run::{
    check_status, check_trajectory, simulate, CheckStatus, SimulationRun, SimulationSummary,
};
pub use sweep::{Sweep, SweepRow};
