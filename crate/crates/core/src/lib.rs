//! Phase-field simulation of mean curvature flow with obstacles on the
//! flat torus [0,1)^d, d = 2 or 3.
//!
//! The evolving field phi solves a forced Allen-Cahn equation
//!
//! ```text
//! phi_t = lap(phi) - W'(phi)/eps^2 + g * (1 - phi^2) / eps
//! ```
//!
//! where W(s) = (1 - s^2)^2 / 2 is the double well and g is a static
//! forcing field built from obstacle balls: positive obstacles repel the
//! phi = -1 phase, negative obstacles repel the phi = +1 phase.  The
//! interface { phi ~ 0 } then moves by mean curvature away from the
//! obstacles and is blocked near them.
//!
//! Module map:
//! - [`grid`]: periodic grids, stencils, quadrature, torus metric
//! - [`geometry`]: balls, CSG initial surfaces, signed distances, forcing
//! - [`solver`]: the explicit time stepper and run loop
//! - [`barriers`]: radial comparison profiles pinned to obstacle balls
//! - [`measures`]: surface-measure, discrepancy and monotonicity diagnostics

pub mod barriers;
pub mod geometry;
pub mod grid;
pub mod measures;
pub mod solver;
