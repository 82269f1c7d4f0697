//! Continuous genetic algorithm viewed as a Boltzmann-type interacting
//! particle system.
//!
//! The crate contains the particle system itself ([`ga`]), exact discrete
//! optimal transport for the bounded-Lipschitz metric ([`transport`]), the
//! optimal-coupling sampler that links the particle system to its mean-field
//! limit ([`coupling`]), reference solvers for the limit ([`meanfield`]) and
//! the experiment harness that measures propagation-of-chaos rates ([`lab`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod fitness;
pub mod ga;
pub mod lab;
pub mod meanfield;
pub mod measures;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
pub use fitness::{FitnessConfig, FitnessSpec};
pub use measures::{Point, WeightedEmpiricalMeasure};
