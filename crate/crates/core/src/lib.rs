//! Pseudo-spectral laboratory for the Gardner equation
//!
//! ```text
//! v_t + v_xxx + 6 sigma (v^2)_x + 2 (v^3)_x = 0
//! ```
//!
//! and its parent, the focusing / defocusing mKdV equation on a nonzero
//! background `u = sigma + v`.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: periodic grids, Fourier transforms, spectral derivatives,
//!   Sobolev and X^{s,b} norms.
//! * [`solitons`]: closed-form traveling waves, their ODE residuals and the
//!   linearized operator around them.
//! * [`evolve`]: integrating-factor RK4 time stepping with the exact Airy
//!   propagator, conserved quantities, scaling covariance and local-time
//!   arithmetic.
//! * [`stability`]: modulation (phase) tracking, the phase ODE, the `d(c0)`
//!   convexity functional and orbital-stability experiments.
//! * [`xsb`]: empirical sampling of bilinear / trilinear X^{s,b} ratios.
pub mod error;
pub mod evolve;
pub mod grid;
pub mod solitons;
pub mod stability;
pub mod xsb;

pub use error::{Error, Result};
pub use evolve::{
    conserved, free_propagate, local_time_estimate, scale_down, scale_up, step, ConservedTriple,
    Equation, EvolveConfig, Frame, Integrator, LocalTime, ScalingParams,
};
pub use grid::{sobolev_norm, spectral_derivative, xsb_norm, Field, GridSpec, SpaceTimeField, SpectralField};
pub use solitons::{
    build_linearized_operator, ode_residuals, soliton_profile, soliton_speed, Branch,
    LinearizedOperator, SolitonParams,
};
