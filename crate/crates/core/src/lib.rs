//! Time-budgeted inspection planning over spatially distributed structures.
//!
//! The pipeline: every structure gets a full-coverage path ([`coverage`]),
//! then the randomized planner ([`planner`]) repeatedly samples a subset of
//! structures, tours them ([`tsp`]), splits the remaining budget into
//! inspection times and keeps the plan with the largest weighted covered area.

pub mod coverage;
pub mod error;
pub mod io;
pub mod model;
pub mod motion;
pub mod planner;
pub mod scenario;
pub mod tsp;

pub use error::{Error, Result};
