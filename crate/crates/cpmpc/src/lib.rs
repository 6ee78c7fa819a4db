//! Scenario files, trajectory export, plots and the command line front end
//! for capture-point push recovery.

pub mod cli;
pub mod plots;
pub mod scenario_file;
pub mod summary;
pub mod svg;
pub mod trajectory_csv;
pub mod verify;
