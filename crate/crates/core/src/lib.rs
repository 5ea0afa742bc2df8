//! Regional fractional Laplacian on half-spaces: Dirichlet forms, Galerkin
//! solver, fractional seminorms, difference quotients and censored maximal
//! functions, plus an experiment harness checking the associated estimates.

pub mod config;
pub mod error;
pub mod experiments;
pub mod form;
pub mod frac;
pub mod grid;
pub mod kernel;
pub mod maximal;
pub mod pairs;
pub mod quadrature;
pub mod random;
pub mod report;
pub mod reduction;
pub mod seminorm;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{CellMask, Grid, GridFunction};
