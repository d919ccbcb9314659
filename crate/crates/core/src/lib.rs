//! Heat kernels of planar Brownian motion killed on the unit disk.
//!
//! The radial part of 2-d Brownian motion is a Bessel process of index 0.
//! This crate evaluates
//!
//! * the free Bessel transition density `p^{(mu)}(t, x, y)` with respect to the
//!   speed measure `y^{2mu+1} dy`,
//! * the density `q_x(s)` and survival function of the hitting time of 1,
//! * the transition density `p_1(t, x, y)` of the process killed at 1,
//!   computed from the last-exit (Hunt) decomposition with error bounds,
//! * Monte Carlo estimates of both, from exactly simulated Brownian paths,
//! * sweeps that compare closed-form two-sided envelopes against the
//!   numerical oracles and freeze the resulting ratio brackets.

pub mod error;
pub mod json;
pub mod hitting;
pub mod kernels;
pub mod killed;
pub mod mc;
mod par;
pub mod quad;
pub mod specfun;
pub mod talbot;
pub mod verify;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{HkError, Result};
pub use kernels::{free_kernel, free_kernel_dx, ln_free_kernel, mu_half_free_kernel, PointQuery};
pub use killed::{killed_kernel, killed_kernel_mu_half, sandwich_bounds, HuntEvaluator, KernelValue};
pub use quad::QuadCfg;
