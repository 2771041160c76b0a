//! Periodic two-prey, one-predator model with Beddington-DeAngelis
//! functional response: coefficient handling, vector fields, an adaptive
//! integrator, periodic orbit computation and condition checks.

pub mod analysis;
pub mod cli;
pub mod coefficients;
pub mod dynamics;
pub mod integrator;
pub mod orbits;
pub mod scenarios;
