pub mod cli;
pub mod coefficients;
pub mod error;
pub mod freeboundary;
pub mod functionals;
pub mod grid;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
