//! Dynamical generalized polynomial chaos for SPDEs driven by white noise.
//!
//! The solver evolves chaos expansions of stochastic Burgers (1D) and
//! Navier–Stokes (2D) solutions on short intervals and periodically rebuilds
//! the polynomial basis around the current solution measure from a
//! Karhunen–Loève compression of the solution. A Monte Carlo reference
//! solver and an exact-moment oracle are provided for validation.

pub mod basis;
pub mod config;
pub mod dgpc;
pub mod error;
pub mod export;
pub mod forcing;
pub mod kl;
pub mod mc;
pub mod models;
pub mod multiindex;
pub mod pce;
pub mod quadrature;
pub mod sampling;
pub mod snapshot;
pub mod spectral;

pub use error::{DgpcError, Result};
