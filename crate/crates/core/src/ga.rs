//! The genetic algorithm written with explicit auxiliary random variables.
//!
//! Each step draws, for every particle `i`, a crossover vector
//! `gamma_i ~ Unif[0,1]^d`, a mutation vector `xi_i ~ N(0, I_d)`, a gate
//! `~ Bern(tau)` and two selection variables `alpha_i^1, alpha_i^2 ~
//! Unif[0, N)`. The particle is replaced, when its gate is open, by
//!
//! ```text
//! (1 - gamma_i) * X^{j(w, alpha_i^1)} + gamma_i * X^{j(w, alpha_i^2)} + sigma xi_i
//! ```
//!
//! where `j` is the fitness-proportional index map. The same draws can be
//! replayed by the coupled nonlinear system in [`crate::meanfield`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::measures::{Point, WeightedEmpiricalMeasure};
use crate::rng::{Domain, Slot, StreamKey};

/// Tolerance on `sum w = 1` for selection weights.
const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n_particles: usize,
    pub tau: f64,
    pub sigma: f64,
    pub n_max: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidParameter {
                name: "n_particles",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must lie in (0, 1], got {}", self.tau),
            });
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be >= 0, got {}", self.sigma),
            });
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Cumulative selection table for a weight vector in the open simplex.
///
/// Stores `N * sum_{l <= j} w_l` computed left to right, with the last entry
/// clamped to `N`. Indices are zero-based.
#[derive(Debug, Clone)]
pub struct SelectionTable {
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl SelectionTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("selection weights"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "selection weight {w} is not strictly positive"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidWeights(format!(
                "selection weights sum to {total}"
            )));
        }
        let n = weights.len() as f64;
        let mut acc = 0.0;
        let mut cum: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                n * acc
            })
            .collect();
        *cum.last_mut().unwrap() = n;
        Ok(Self {
            weights: weights.to_vec(),
            cum,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha >= 0.0 && alpha < self.len() as f64) {
            return Err(Error::AlphaOutOfRange {
                alpha,
                n: self.len(),
            });
        }
        Ok(())
    }

    /// The smallest zero-based `j` with `alpha < N * sum_{l <= j} w_l`.
    pub fn index(&self, alpha: f64) -> Result<usize> {
        self.check_alpha(alpha)?;
        Ok(self.index_unchecked(alpha))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, alpha: f64) -> usize {
        self.cum.partition_point(|&c| c <= alpha).min(self.cum.len() - 1)
    }

    /// Selected index together with `beta = (alpha - N S_{j-1}) / (N w_j)`,
    /// which is uniform on `[0, 1)` conditionally on the index.
    pub fn beta(&self, alpha: f64) -> Result<(usize, f64)> {
        self.check_alpha(alpha)?;
        Ok(self.beta_unchecked(alpha))
    }

    #[inline]
    pub(crate) fn beta_unchecked(&self, alpha: f64) -> (usize, f64) {
        let j = self.index_unchecked(alpha);
        let lower = if j == 0 { 0.0 } else { self.cum[j - 1] };
        let width = self.len() as f64 * self.weights[j];
        let beta = ((alpha - lower) / width).clamp(0.0, 1.0 - f64::EPSILON / 2.0);
        (j, beta)
    }
}

/// Fitness-proportional index map. Returns a zero-based index.
pub fn index_map(weights: &[f64], alpha: f64) -> Result<usize> {
    SelectionTable::new(weights)?.index(alpha)
}

/// Per-particle draws for one step, stored coordinate-major per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryDraws {
    pub n: usize,
    pub dim: usize,
    pub gamma: Vec<f64>,
    pub xi: Vec<f64>,
    pub gate: Vec<bool>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
}

impl AuxiliaryDraws {
    pub fn gamma(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.dim..(i + 1) * self.dim]
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        &self.xi[i * self.dim..(i + 1) * self.dim]
    }

    /// Draws with every gate closed, for testing the identity branch.
    pub fn closed(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            gamma: vec![0.5; n * dim],
            xi: vec![0.0; n * dim],
            gate: vec![false; n],
            alpha1: vec![0.0; n],
            alpha2: vec![0.0; n],
        }
    }
}

/// Position in the auxiliary stream of one replica.
#[derive(Debug, Clone)]
pub struct AuxStream {
    key: StreamKey,
    step: u64,
}

impl AuxStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self {
            key: StreamKey::new(seed, Domain::Auxiliary, replica),
            step: 0,
        }
    }

    pub fn with_domain(seed: u64, domain: Domain, replica: u64) -> Self {
        Self {
            key: StreamKey::new(seed, domain, replica),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Uniform on `[0, n)`; the product is clamped below `n`.
pub(crate) fn uniform_below<R: Rng>(rng: &mut R, n: usize) -> f64 {
    let n = n as f64;
    let a = rng.random::<f64>() * n;
    if a < n {
        a
    } else {
        n.next_down()
    }
}

/// Draws the auxiliaries for the current step and advances the stream.
pub fn draw_auxiliaries(stream: &mut AuxStream, params: &SimParams) -> AuxiliaryDraws {
    let draws = draws_at(&stream.key, stream.step, params.n_particles, params.dim, params.tau);
    stream.step += 1;
    draws
}

pub(crate) fn draws_at(key: &StreamKey, step: u64, n: usize, dim: usize, tau: f64) -> AuxiliaryDraws {
    struct One {
        gamma: Vec<f64>,
        xi: Vec<f64>,
        gate: bool,
        alpha1: f64,
        alpha2: f64,
    }
    let per: Vec<One> = (0..n)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let mut g = key.rng(step, i, Slot::Gamma);
            let mut x = key.rng(step, i, Slot::Xi);
            One {
                gamma: (0..dim).map(|_| g.random::<f64>()).collect(),
                xi: (0..dim).map(|_| x.sample(StandardNormal)).collect(),
                gate: key.rng(step, i, Slot::Gate).random::<f64>() < tau,
                alpha1: uniform_below(&mut key.rng(step, i, Slot::Alpha1), n),
                alpha2: uniform_below(&mut key.rng(step, i, Slot::Alpha2), n),
            }
        })
        .collect();
    let mut out = AuxiliaryDraws {
        n,
        dim,
        gamma: Vec::with_capacity(n * dim),
        xi: Vec::with_capacity(n * dim),
        gate: Vec::with_capacity(n),
        alpha1: Vec::with_capacity(n),
        alpha2: Vec::with_capacity(n),
    };
    for one in per {
        out.gamma.extend(one.gamma);
        out.xi.extend(one.xi);
        out.gate.push(one.gate);
        out.alpha1.push(one.alpha1);
        out.alpha2.push(one.alpha2);
    }
    out
}

/// `(1 - gamma) * x + gamma * x_star + sigma * xi`, componentwise.
pub fn offspring(x: &[f64], x_star: &[f64], gamma: &[f64], sigma: f64, xi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(x_star)
        .zip(gamma.iter().zip(xi))
        .map(|((a, b), (g, z))| (1.0 - g) * a + g * b + sigma * z)
        .collect()
}

/// Particle positions and their normalized fitness weights at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub step: usize,
    pub positions: Vec<Point>,
    pub weights: Vec<f64>,
}

impl PopulationState {
    pub fn new(step: usize, positions: Vec<Point>, fitness: &FitnessSpec) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Empty("population"));
        }
        let weights = fitness_weights(&positions, fitness)?;
        Ok(Self {
            step,
            positions,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions[0].dim()
    }

    /// `(1/N) sum_i delta_{X_i}`.
    pub fn empirical(&self) -> WeightedEmpiricalMeasure {
        WeightedEmpiricalMeasure::uniform(self.positions.clone()).expect("nonempty population")
    }

    /// `sum_i w_i delta_{X_i}`.
    pub fn weighted(&self) -> WeightedEmpiricalMeasure {
        WeightedEmpiricalMeasure::new(self.positions.clone(), self.weights.clone())
            .expect("fitness weights form a probability vector")
    }
}

pub fn fitness_weights(positions: &[Point], fitness: &FitnessSpec) -> Result<Vec<f64>> {
    let mut w = Vec::with_capacity(positions.len());
    for (i, x) in positions.iter().enumerate() {
        let f = fitness.eval(x);
        if !(f > 0.0) {
            return Err(Error::NonPositiveFitness { index: i, value: f });
        }
        w.push(f);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(w)
}

fn check_draws(draws: &AuxiliaryDraws, n: usize, dim: usize) -> Result<()> {
    if draws.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: draws.n,
        });
    }
    if draws.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: draws.dim,
        });
    }
    Ok(())
}

/// One synchronous sweep: every parent is read from `state`.
pub fn ga_step(
    state: &PopulationState,
    draws: &AuxiliaryDraws,
    fitness: &FitnessSpec,
    params: &SimParams,
) -> Result<PopulationState> {
    let dim = state.dim();
    check_draws(draws, state.len(), dim)?;
    let table = SelectionTable::new(&state.weights)?;
    let positions: Vec<Point> = (0..state.len())
        .into_par_iter()
        .map(|i| {
            if !draws.gate[i] {
                return state.positions[i].clone();
            }
            let a = table.index_unchecked(draws.alpha1[i]);
            let b = table.index_unchecked(draws.alpha2[i]);
            Point::from_vec_unchecked(offspring(
                &state.positions[a],
                &state.positions[b],
                draws.gamma(i),
                params.sigma,
                draws.xi(i),
            ))
        })
        .collect();
    PopulationState::new(state.step + 1, positions, fitness)
}

/// Law of the initial particles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// Independent normal coordinates.
    Normal { mean: Vec<f64>, std: f64 },
    Dirac(Point),
    /// Independent uniform coordinates on `[lo, hi)`.
    Uniform { lo: f64, hi: f64, dim: usize },
    /// I.i.d. draws from a discrete measure.
    Discrete(WeightedEmpiricalMeasure),
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Normal { mean, .. } => mean.len(),
            InitialLaw::Dirac(p) => p.dim(),
            InitialLaw::Uniform { dim, .. } => *dim,
            InitialLaw::Discrete(mu) => mu.dim(),
        }
    }

    /// Sample number `index` of the stream `key`.
    pub fn sample(&self, key: &StreamKey, index: u64) -> Point {
        let mut rng = key.rng(0, index, Slot::Position);
        match self {
            InitialLaw::Normal { mean, std } => Point::from_vec_unchecked(
                mean.iter()
                    .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
            InitialLaw::Dirac(p) => p.clone(),
            InitialLaw::Uniform { lo, hi, dim } => Point::from_vec_unchecked(
                (0..*dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect(),
            ),
            InitialLaw::Discrete(mu) => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                for (x, w) in mu.atoms() {
                    acc += w;
                    if u < acc {
                        return x.clone();
                    }
                }
                mu.support()[mu.len() - 1].clone()
            }
        }
    }

    pub fn sample_n(&self, key: &StreamKey, n: usize) -> Vec<Point> {
        (0..n as u64).into_par_iter().map(|i| self.sample(key, i)).collect()
    }
}

/// A full run: `n_max + 1` states and the `n_max` draws that produced them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<PopulationState>,
    pub draws: Vec<AuxiliaryDraws>,
}

/// Runs the algorithm for replica `replica` of `params.seed`.
pub fn run(
    params: &SimParams,
    fitness: &FitnessSpec,
    initial: &InitialLaw,
    replica: u64,
) -> Result<Trajectory> {
    run_with_streams(
        params,
        fitness,
        initial,
        &StreamKey::new(params.seed, Domain::Initial, replica),
        AuxStream::new(params.seed, replica),
    )
}

/// Like [`run`] with explicit streams for the initial sample and the
/// auxiliary draws.
pub fn run_with_streams(
    params: &SimParams,
    fitness: &FitnessSpec,
    initial: &InitialLaw,
    init_key: &StreamKey,
    mut stream: AuxStream,
) -> Result<Trajectory> {
    params.validate()?;
    if initial.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: initial.dim(),
        });
    }
    let positions = initial.sample_n(init_key, params.n_particles);
    let mut state = PopulationState::new(0, positions, fitness)?;
    let mut states = Vec::with_capacity(params.n_max + 1);
    let mut draws = Vec::with_capacity(params.n_max);
    for _ in 0..params.n_max {
        let d = draw_auxiliaries(&mut stream, params);
        let next = ga_step(&state, &d, fitness, params)?;
        states.push(std::mem::replace(&mut state, next));
        draws.push(d);
    }
    states.push(state);
    Ok(Trajectory { states, draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(n: usize, tau: f64, sigma: f64, n_max: usize) -> SimParams {
        SimParams {
            n_particles: n,
            tau,
            sigma,
            n_max,
            dim: 1,
            seed: 11,
        }
    }

    #[test]
    fn index_map_examples() {
        // One-based indices 1, 2, 3 in the usual notation.
        assert_eq!(index_map(&[0.5, 0.5], 0.3).unwrap(), 0);
        let w = [1.0 / 6.0, 1.0 / 3.0, 0.5];
        assert_eq!(index_map(&w, 0.5).unwrap(), 1);
        assert_eq!(index_map(&w, 2.9).unwrap(), 2);
        assert_eq!(index_map(&w, 0.0).unwrap(), 0);
        assert_eq!(index_map(&w, 3.0f64.next_down()).unwrap(), 2);
    }

    #[test]
    fn index_map_errors() {
        assert!(matches!(
            index_map(&[0.5, 0.5], 2.0),
            Err(Error::AlphaOutOfRange { .. })
        ));
        assert!(index_map(&[0.5, 0.5], -0.1).is_err());
        assert!(index_map(&[1.0, 0.0], 0.1).is_err());
        assert!(index_map(&[0.6, 0.6], 0.1).is_err());
    }

    #[test]
    fn beta_examples() {
        let t = SelectionTable::new(&[1.0 / 6.0, 1.0 / 3.0, 0.5]).unwrap();
        let (j, b) = t.beta(1.0).unwrap();
        assert_eq!(j, 1);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-14);
        assert_eq!(t.beta(0.0).unwrap(), (0, 0.0));
        let t = SelectionTable::new(&[0.5, 0.5]).unwrap();
        assert_eq!(t.beta(1.5).unwrap(), (1, 0.5));
    }

    #[test]
    fn index_map_marginal_law() {
        let w = [0.1, 0.2, 0.3, 0.4];
        let t = SelectionTable::new(&w).unwrap();
        let key = StreamKey::new(5, Domain::Suite, 0);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for i in 0..draws {
            let a = uniform_below(&mut key.rng(0, i, Slot::Misc), 4);
            counts[t.index(a).unwrap()] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = c as f64 / draws as f64;
            let tol = 4.0 * (w[k] * (1.0 - w[k]) / draws as f64).sqrt();
            assert!((p - w[k]).abs() < tol, "index {k}: {p} vs {}", w[k]);
        }
    }

    #[test]
    fn gates_with_tau_one_are_open() {
        let p = params(200, 1.0, 0.1, 1);
        let d = draw_auxiliaries(&mut AuxStream::new(1, 0), &p);
        assert!(d.gate.iter().all(|&g| g));
    }

    #[test]
    fn draw_marginals() {
        let p = params(100_000, 0.25, 0.1, 1);
        let d = draw_auxiliaries(&mut AuxStream::new(3, 0), &p);
        let n = p.n_particles as f64;
        let gate_mean = d.gate.iter().filter(|&&g| g).count() as f64 / n;
        assert!((gate_mean - 0.25).abs() < 3.0 * (0.25 * 0.75 / n).sqrt());
        let g_mean = d.gamma.iter().sum::<f64>() / n;
        assert!((g_mean - 0.5).abs() < 3.0 * (1.0 / 12.0 / n).sqrt());
        assert!(d.gamma.iter().all(|g| (0.0..=1.0).contains(g)));
        assert!(d.alpha1.iter().chain(&d.alpha2).all(|a| *a >= 0.0 && *a < n));
        let xi_mean = d.xi.iter().sum::<f64>() / n;
        assert!(xi_mean.abs() < 4.0 / n.sqrt());
    }

    #[test]
    fn draws_are_reproducible_and_advance() {
        let p = params(50, 0.5, 0.1, 2);
        let mut s1 = AuxStream::new(9, 2);
        let mut s2 = AuxStream::new(9, 2);
        let a = draw_auxiliaries(&mut s1, &p);
        assert_eq!(a, draw_auxiliaries(&mut s2, &p));
        assert_ne!(a, draw_auxiliaries(&mut s1, &p));
        assert_eq!(s1.step(), 2);
    }

    #[test]
    fn closed_gates_are_identity() {
        let f = FitnessSpec::gaussian_bump(1.0, 2.0, 1.0, vec![0.0]).unwrap();
        let pos: Vec<Point> = [0.3, -1.0, 2.0].iter().map(|&x| Point::scalar(x)).collect();
        let s = PopulationState::new(4, pos.clone(), &f).unwrap();
        let next = ga_step(&s, &AuxiliaryDraws::closed(3, 1), &f, &params(3, 0.5, 1.0, 1)).unwrap();
        assert_eq!(next.positions, pos);
        assert_eq!(next.step, 5);
    }

    #[test]
    fn single_particle_self_crossover() {
        let f = FitnessSpec::constant(1.0).unwrap();
        let s = PopulationState::new(0, vec![Point::scalar(1.7)], &f).unwrap();
        let d = AuxiliaryDraws {
            n: 1,
            dim: 1,
            gamma: vec![0.37],
            xi: vec![2.0],
            gate: vec![true],
            alpha1: vec![0.2],
            alpha2: vec![0.9],
        };
        let next = ga_step(&s, &d, &f, &params(1, 1.0, 0.0, 1)).unwrap();
        assert_abs_diff_eq!(next.positions[0][0], 1.7, epsilon = 1e-15);
    }

    #[test]
    fn two_particle_hand_example() {
        let f = FitnessSpec::constant(1.0).unwrap();
        let s = PopulationState::new(0, vec![Point::scalar(0.0), Point::scalar(2.0)], &f).unwrap();
        let d = AuxiliaryDraws {
            n: 2,
            dim: 1,
            gamma: vec![0.25, 0.9],
            xi: vec![5.0, 5.0],
            gate: vec![true, false],
            alpha1: vec![0.5, 0.0],
            alpha2: vec![1.5, 0.0],
        };
        let next = ga_step(&s, &d, &f, &params(2, 0.5, 0.0, 1)).unwrap();
        assert_abs_diff_eq!(next.positions[0][0], 0.5, epsilon = 1e-15);
        assert_eq!(next.positions[1][0], 2.0);
    }

    #[test]
    fn run_lengths_and_replay() {
        let f = FitnessSpec::gaussian_bump(1.0, 2.0, 1.0, vec![0.0]).unwrap();
        let init = InitialLaw::Normal {
            mean: vec![0.0],
            std: 1.0,
        };
        let p = params(64, 0.3, 0.2, 5);
        let a = run(&p, &f, &init, 0).unwrap();
        assert_eq!(a.states.len(), 6);
        assert_eq!(a.draws.len(), 5);
        let b = run(&p, &f, &init, 0).unwrap();
        assert_eq!(a.states, b.states);
        let c = run(&SimParams { n_max: 0, ..p.clone() }, &f, &init, 0).unwrap();
        assert_eq!(c.states.len(), 1);
        assert_eq!(c.states[0], a.states[0]);
    }

    #[test]
    fn dirac_initial_is_absorbing_without_mutation() {
        let f = FitnessSpec::gaussian_bump(1.0, 2.0, 1.0, vec![0.3]).unwrap();
        let p = params(32, 0.7, 0.0, 10);
        let t = run(&p, &f, &InitialLaw::Dirac(Point::scalar(0.0)), 0).unwrap();
        for s in &t.states {
            assert!(s.positions.iter().all(|x| x[0] == 0.0));
        }
    }

    #[test]
    fn variance_fixed_point() {
        // v_{n+1} = (1 - tau/3) v_n + tau sigma^2 has fixed point 3 sigma^2.
        let f = FitnessSpec::constant(1.0).unwrap();
        let p = params(100_000, 1.0, 0.1, 100);
        let t = run(&p, &f, &InitialLaw::Dirac(Point::scalar(0.0)), 0).unwrap();
        let last = &t.states.last().unwrap().positions;
        let n = last.len() as f64;
        let mean = last.iter().map(|x| x[0]).sum::<f64>() / n;
        let var = last.iter().map(|x| (x[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 0.03 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn params_validation() {
        assert!(params(0, 0.5, 0.1, 1).validate().is_err());
        assert!(params(3, 0.0, 0.1, 1).validate().is_err());
        assert!(params(3, 1.5, 0.1, 1).validate().is_err());
        assert!(params(3, 0.5, -0.1, 1).validate().is_err());
        assert!(params(3, 1.0, 0.0, 0).validate().is_ok());
    }
}
