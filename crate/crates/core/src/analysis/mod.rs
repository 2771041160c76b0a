//! Mechanical evaluation of the existence and stability hypotheses, and a
//! Lyapunov monitor for trajectories approaching the predator-free orbit.
//!
//! Every check returns the individual inequalities with numeric margins;
//! nothing is collapsed into a bare boolean.

mod boundary;
mod bounds;
mod identities;
mod lyapunov;
mod report;
mod stability;

use thiserror::Error;

use crate::coefficients::CoefficientError;
use crate::dynamics::DynamicsError;
use crate::integrator::IntegrationError;
use crate::orbits::OrbitError;

pub use boundary::{
    boundary_orbit, check_e26, check_e27, check_e27_for_orbit, A12Profile, E27Report,
};
pub use bounds::{check_h2, existence_bounds, BoundInputs, ExistenceBounds, ExtendedReal};
pub use identities::{integral_identities, IntegralIdentity};
pub use lyapunov::{
    dplus_v_bound, lyapunov_v, verify_attraction, AttractionReport, LyapunovSample,
    ATTRACTION_TOL, KINK_EXCLUSION,
};
pub use report::{ConditionEntry, ConditionReport};
pub use stability::{check_thm2, StabilityReport};

#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}
