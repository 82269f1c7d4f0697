//! Reference solutions `f_n` used in place of the exact mean-field law.

use crate::error::Result;
use crate::ga::{draw_auxiliaries, ga_step, AuxStream, PopulationState};
use crate::meanfield::grid::{grid_bounds, grid_trajectory, GridDensity1D};
use crate::measures::{moment_q, WeightedEmpiricalMeasure};
use crate::rng::{Domain, StreamKey};
use crate::transport::concentration_rate;

use super::config::{ExperimentConfig, ReferenceKind};

/// Steps at which the supremum over `t_n <= T` is evaluated: every step up
/// to 200 steps, otherwise every fifth step and the last one.
pub fn snapshot_steps(n_max: usize) -> Vec<usize> {
    let stride = snapshot_stride(n_max);
    let mut steps: Vec<usize> = (0..=n_max).step_by(stride).collect();
    if *steps.last().unwrap() != n_max {
        steps.push(n_max);
    }
    steps
}

pub fn snapshot_stride(n_max: usize) -> usize {
    if n_max <= 200 {
        1
    } else {
        5
    }
}

/// `f_0, ..., f_{n_max}` from the grid solver or from a large independent
/// particle run.
#[derive(Debug, Clone)]
pub enum Reference {
    Grid(Vec<GridDensity1D>),
    Ensemble {
        size: usize,
        steps: Vec<WeightedEmpiricalMeasure>,
    },
}

impl Reference {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let fitness = cfg.fitness_spec()?;
        let law = cfg.initial_law()?;
        let n_max = cfg.n_max();
        match cfg.reference_kind() {
            ReferenceKind::Grid => {
                let (lo, hi) = grid_bounds(&law, cfg.sigma, n_max)?;
                let f0 = GridDensity1D::from_law(&law, lo, hi, cfg.reference.cells)?;
                Ok(Reference::Grid(grid_trajectory(f0, cfg.tau, n_max, &fitness, cfg.sigma)?))
            }
            ReferenceKind::Ensemble => {
                let size = cfg.ensemble_size();
                let params = cfg.sim_params(size);
                let key = StreamKey::new(cfg.seed, Domain::Reference, 0);
                let mut stream = AuxStream::with_domain(cfg.seed, Domain::Reference, 0);
                let mut state = PopulationState::new(0, law.sample_n(&key, size), &fitness)?;
                let mut steps = Vec::with_capacity(n_max + 1);
                for _ in 0..n_max {
                    let draws = draw_auxiliaries(&mut stream, &params);
                    let next = ga_step(&state, &draws, &fitness, &params)?;
                    steps.push(state.empirical());
                    state = next;
                }
                steps.push(state.empirical());
                Ok(Reference::Ensemble { size, steps })
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Reference::Grid(g) => g.len(),
            Reference::Ensemble { steps, .. } => steps.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `f_n` as a discrete measure. Grid cells with zero mass are dropped.
    pub fn measure(&self, n: usize) -> Result<WeightedEmpiricalMeasure> {
        match self {
            Reference::Grid(g) => g[n].to_measure(0.0),
            Reference::Ensemble { steps, .. } => Ok(steps[n].clone()),
        }
    }

    /// `M_q(f_n)` for every step.
    pub fn moments(&self, q: f64) -> Result<Vec<f64>> {
        match self {
            Reference::Grid(g) => Ok(g.iter().map(|f| f.moment(q)).collect()),
            Reference::Ensemble { steps, .. } => {
                steps.iter().map(|m| moment_q(m, q).map(|r| r.value)).collect()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Reference::Grid(g) => format!(
                "grid with {} cells on [{}, {}]",
                g[0].m(),
                g[0].lo(),
                g[0].hi()
            ),
            Reference::Ensemble { size, .. } => format!("independent ensemble of {size} particles"),
        }
    }

    /// Concentration rate of the reference itself, for ensembles.
    pub fn own_error(&self, dim: usize) -> Option<f64> {
        match self {
            Reference::Grid(_) => None,
            Reference::Ensemble { size, .. } => concentration_rate(*size, dim).ok(),
        }
    }

    /// Largest mass lost by the grid over the run.
    pub fn lost_mass(&self) -> f64 {
        match self {
            Reference::Grid(g) => g.last().map_or(0.0, |f| f.lost_mass()),
            Reference::Ensemble { .. } => 0.0,
        }
    }
}
