//! Two-level preconditioners with discontinuous interpolation for SIPG
//! discretizations of the Poisson problem in 1D and 2D.

pub mod cli;
pub mod dense;
pub mod discretization;
pub mod error;
pub mod lfa;
pub mod optimize;
pub mod solver;
pub mod spectrum;
pub mod svg;
pub mod twolevel;

pub use error::{Error, Result};
