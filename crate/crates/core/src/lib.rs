//! Life-cycle model of a married couple's time allocation with childbirth,
//! parental leave and nursery use: solver, simulator and estimator.

pub mod budget;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod gmm;
pub mod grids;
pub mod model;
pub mod optim;
pub mod par;
pub mod params;
pub mod preferences;
pub mod shocks;
pub mod simulate;
pub mod solver;

pub use config::{ModelParams, Preset};
pub use error::{ModelError, Result};
pub use model::{AgeProfileInputs, HouseholdModel};
pub use par::ExecMode;
pub use solver::{solve_lifecycle, BirthRule, SolveOptions, Solution};
