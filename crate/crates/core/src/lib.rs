pub mod dinterp1d;
pub mod error;
pub mod grid1d;
pub mod io;
pub mod lowrank;
pub mod radon;
pub mod scenarios;
pub mod transform;

pub use error::{Error, Result};
