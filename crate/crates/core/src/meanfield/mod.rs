//! Reference solutions of the mean-field dynamics.
//!
//! [`grid`] evolves one-dimensional densities by the explicit Euler scheme,
//! [`ensemble`] advances the nonlinear particle system that shares its
//! randomness with the genetic algorithm, and [`moments`] checks moment growth
//! against its a priori bound.

pub mod ensemble;
pub mod grid;
pub mod moments;

pub use ensemble::{nonlinear_step_ensemble, ReferenceEnsemble};
pub use grid::{euler_step_grid, gain_apply_1d, grid_bounds, grid_trajectory, GridDensity1D, MASS_TOL};
pub use moments::{moment_bound_check, MomentBoundReport};
