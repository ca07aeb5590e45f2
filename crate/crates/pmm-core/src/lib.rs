//! Porous medium model with slow reservoirs.
//!
//! * [`lattice`]: configurations, rates and microscopic observables.
//! * [`kmc`]: continuous-time simulation of the particle system.
//! * [`oracle`]: brute-force generator matrices for small lattices.
//! * [`pde`]: finite-volume solver for the porous medium equation.
//! * [`energy`]: weighted norms, energy functionals and boundary checks.
//! * [`convergence`]: kappa sweeps and particle-vs-PDE comparisons.

pub mod convergence;
pub mod energy;
pub mod error;
pub mod kmc;
pub mod lattice;
pub mod oracle;
pub mod params;
pub mod pde;

pub use error::{Error, Result};
pub use params::ModelParams;
