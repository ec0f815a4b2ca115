pub mod cli;
pub mod config;
pub mod costs;
pub mod diagnostics;
pub mod duality;
pub mod error;
pub mod lowerbounds;
pub mod measures;
pub mod points;
pub mod rates;
pub mod report;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
