//! The nonlinear particle system driven by the same auxiliary draws as the
//! genetic algorithm, with parents taken from a reference measure instead of
//! the population.

use rayon::prelude::*;

use crate::coupling::ParentSampler;
use crate::error::{Error, Result};
use crate::ga::{offspring, AuxiliaryDraws};
use crate::measures::{Point, WeightedEmpiricalMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEnsemble {
    pub step: usize,
    pub particles: Vec<Point>,
}

impl ReferenceEnsemble {
    pub fn new(step: usize, particles: Vec<Point>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        Ok(Self { step, particles })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn empirical(&self) -> WeightedEmpiricalMeasure {
        WeightedEmpiricalMeasure::uniform(self.particles.clone()).expect("nonempty ensemble")
    }
}

/// Particle `i` keeps its position when its gate is closed and otherwise
/// becomes `(1 - gamma_i) X*(alpha_i^1) + gamma_i X*(alpha_i^2) + sigma xi_i`,
/// where `X*` is read from `sampler`.
pub fn nonlinear_step_ensemble(
    ensemble: &ReferenceEnsemble,
    draws: &AuxiliaryDraws,
    sampler: &dyn ParentSampler,
    sigma: f64,
) -> Result<ReferenceEnsemble> {
    if draws.n != ensemble.len() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.len(),
            found: draws.n,
        });
    }
    if sampler.slots() != draws.n {
        return Err(Error::DimensionMismatch {
            expected: draws.n,
            found: sampler.slots(),
        });
    }
    let dim = ensemble.particles[0].dim();
    if draws.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: draws.dim,
        });
    }
    let particles = (0..ensemble.len())
        .into_par_iter()
        .map(|i| {
            if !draws.gate[i] {
                return ensemble.particles[i].clone();
            }
            let a = sampler.parent(draws.alpha1[i]);
            let b = sampler.parent(draws.alpha2[i]);
            Point::from_vec_unchecked(offspring(a, b, draws.gamma(i), sigma, draws.xi(i)))
        })
        .collect();
    Ok(ReferenceEnsemble {
        step: ensemble.step + 1,
        particles,
    })
}
