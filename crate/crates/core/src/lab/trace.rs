//! The coupled pair of particle systems: the genetic algorithm and the
//! nonlinear system driven by the same draws, with parents of the latter
//! taken from an optimal coupling between the reweighted reference and the
//! weighted population.

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::build_sampler;
use crate::error::Result;
use crate::ga::{draw_auxiliaries, ga_step, AuxStream, PopulationState};
use crate::meanfield::ensemble::{nonlinear_step_ensemble, ReferenceEnsemble};
use crate::measures::{reweight_by_fitness, truncated, WeightedEmpiricalMeasure};
use crate::rng::{Domain, StreamKey};
use crate::transport::{bl_distance, CostKind};

use super::config::ExperimentConfig;
use super::reference::Reference;

/// Grid cells lighter than this are left out of the coupling problems.
const COUPLING_MIN_MASS: f64 = 1e-15;

/// Slack allowed in the exact coupling bound, for rounding in the two sums.
pub const COUPLING_BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    /// Mean over replicas of `(1/N) sum_i min(|X_i - Xbar_i|, 1)`.
    pub e_n: f64,
    /// Mean over replicas of `||f^N_n - fbar^N_n||_BL`.
    pub bl_emp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceTable {
    pub n_particles: usize,
    pub replicas: usize,
    pub rows: Vec<TraceRow>,
    /// Whether `E_0 = 0` held exactly in every replica.
    pub e0_zero: bool,
    /// `(replica, step)` pairs where the BL distance exceeded the coupling
    /// cost by more than [`COUPLING_BOUND_TOL`].
    pub bound_violations: Vec<(usize, usize)>,
    /// Largest `bl - coupling cost` over all replicas and steps.
    pub max_bound_excess: f64,
    /// Per replica and step: `(coupling cost, BL distance)`.
    pub per_replica: Vec<Vec<(f64, f64)>>,
}

impl TraceTable {
    /// CSV with header `step,E_n,bl_emp`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,E_n,bl_emp\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.step, r.e_n, r.bl_emp));
        }
        s
    }

    pub fn pass(&self) -> bool {
        self.e0_zero && self.bound_violations.is_empty()
    }
}

fn reweighted_reference(
    reference: &Reference,
    step: usize,
    fitness: &crate::fitness::FitnessSpec,
) -> Result<WeightedEmpiricalMeasure> {
    let f = match reference {
        Reference::Grid(g) => g[step].to_measure(COUPLING_MIN_MASS)?,
        Reference::Ensemble { .. } => reference.measure(step)?,
    };
    reweight_by_fitness(&f, fitness)
}

fn coupled_replica(
    cfg: &ExperimentConfig,
    reference: &Reference,
    n: usize,
    replica: u64,
) -> Result<Vec<(f64, f64)>> {
    let fitness = cfg.fitness_spec()?;
    let law = cfg.initial_law()?;
    let params = cfg.sim_params(n);
    let key = StreamKey::new(cfg.seed, Domain::Initial, replica);
    let mut stream = AuxStream::new(cfg.seed, replica);
    let mut state = PopulationState::new(0, law.sample_n(&key, n), &fitness)?;
    let mut bar = ReferenceEnsemble::new(0, state.positions.clone())?;
    let mut out = Vec::with_capacity(params.n_max + 1);
    for step in 0..=params.n_max {
        let cost = state
            .positions
            .iter()
            .zip(&bar.particles)
            .map(|(x, y)| truncated(x, y))
            .sum::<f64>()
            / n as f64;
        let bl = bl_distance(&state.empirical(), &bar.empirical())?;
        out.push((cost, bl));
        if step == params.n_max {
            break;
        }
        let draws = draw_auxiliaries(&mut stream, &params);
        let target = reweighted_reference(reference, step, &fitness)?;
        let sampler = build_sampler(&target, &state.positions, &state.weights, CostKind::Truncated)?;
        bar = nonlinear_step_ensemble(&bar, &draws, &sampler, cfg.sigma)?;
        state = ga_step(&state, &draws, &fitness, &params)?;
    }
    Ok(out)
}

/// Runs the coupled systems for the configured trace population size and
/// replica count.
pub fn coupled_error_trace(cfg: &ExperimentConfig) -> Result<TraceTable> {
    let reference = Reference::build(cfg)?;
    coupled_error_trace_with(cfg, &reference)
}

pub fn coupled_error_trace_with(cfg: &ExperimentConfig, reference: &Reference) -> Result<TraceTable> {
    let n = cfg.trace.n.unwrap_or(cfg.n_list[0]);
    let replicas = cfg.trace.replicas.unwrap_or(cfg.replicas);
    let per_replica: Vec<Vec<(f64, f64)>> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| coupled_replica(cfg, reference, n, k))
        .collect::<Result<_>>()?;
    let steps = per_replica[0].len();
    let k = replicas as f64;
    let rows = (0..steps)
        .map(|s| TraceRow {
            step: s,
            e_n: per_replica.iter().map(|r| r[s].0).sum::<f64>() / k,
            bl_emp: per_replica.iter().map(|r| r[s].1).sum::<f64>() / k,
        })
        .collect();
    let e0_zero = per_replica.iter().all(|r| r[0].0 == 0.0);
    let mut bound_violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for (rep, r) in per_replica.iter().enumerate() {
        for (s, &(cost, bl)) in r.iter().enumerate() {
            max_excess = max_excess.max(bl - cost);
            if bl > cost + COUPLING_BOUND_TOL {
                bound_violations.push((rep, s));
            }
        }
    }
    Ok(TraceTable {
        n_particles: n,
        replicas,
        rows,
        e0_zero,
        bound_violations,
        max_bound_excess: max_excess,
        per_replica,
    })
}
