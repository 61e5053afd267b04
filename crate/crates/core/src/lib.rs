//! Superadiabatic band projectors for a driven one-dimensional periodic
//! Hamiltonian and bounds on the resulting interband transitions.

pub mod audit;
pub mod bloch;
pub mod chebyshev;
pub mod commands;
pub mod config;
pub mod drive;
pub mod error;
pub mod exec;
pub mod expansion;
pub mod fit;
pub mod linalg;
pub mod propagator;
pub mod quad;
pub mod superprojector;
pub mod transitions;

pub use error::{Error, Result};
