//! Randomized checks of the two stability inequalities behind the
//! propagation-of-chaos estimate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::fitness::FitnessSpec;
use crate::ga::offspring;
use crate::measures::{reweight_by_fitness, truncated, Point, WeightedEmpiricalMeasure};
use crate::rng::{Domain, Slot, StreamKey};
use crate::transport::bl_distance;

/// Absolute slack for rounding in both suites.
pub const SUITE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs` over cases with `rhs > 0`.
    pub max_ratio: f64,
    /// The constant the ratio is compared with.
    pub bound: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

fn suite_rng(seed: u64, case: u64) -> ChaCha8Rng {
    StreamKey::new(seed, Domain::Suite, 0).rng(0, case, Slot::Misc)
}

fn normal_point<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Point {
    Point::new((0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .expect("finite coordinates")
}

/// A random measure with `1..=10` atoms, positions `3 N(0, I)` and
/// symmetric Dirichlet(1) weights.
pub fn random_measure<R: Rng>(rng: &mut R, dim: usize) -> WeightedEmpiricalMeasure {
    let k = rng.random_range(1..=10);
    let support = (0..k).map(|_| normal_point(rng, dim, 3.0)).collect();
    let weights = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    WeightedEmpiricalMeasure::from_unnormalized(support, weights).expect("valid random measure")
}

/// A small random perturbation of `mu`: atoms moved by `N(0, s^2 I)` with
/// `s` log-uniform in `[1e-3, 1]` and weights multiplied by `exp(N(0, s^2))`.
fn perturb<R: Rng>(rng: &mut R, mu: &WeightedEmpiricalMeasure) -> WeightedEmpiricalMeasure {
    let s = 10f64.powf(-3.0 * rng.random::<f64>());
    let support = mu
        .support()
        .iter()
        .map(|x| {
            Point::new(
                x.iter()
                    .map(|c| c + s * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            )
            .expect("finite coordinates")
        })
        .collect();
    let weights = mu
        .weights()
        .iter()
        .map(|w| w * (s * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    WeightedEmpiricalMeasure::from_unnormalized(support, weights).expect("valid perturbed measure")
}

/// Checks `W(F f / <F, f>, F g / <F, g>) <= C_F W(f, g)` in the truncated
/// metric on `n_cases` random pairs. Even cases draw `f` and `g`
/// independently; odd cases take `g` as a small perturbation of `f`.
pub fn selection_stability_suite(fitness: &FitnessSpec, n_cases: usize, seed: u64) -> Result<SuiteReport> {
    let dim = fitness.dim().unwrap_or(1);
    let c_f = fitness.c_f();
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for case in 0..n_cases {
        let mut rng = suite_rng(seed, case as u64);
        let f = random_measure(&mut rng, dim);
        let g = if case % 2 == 0 {
            random_measure(&mut rng, dim)
        } else {
            perturb(&mut rng, &f)
        };
        let rhs = bl_distance(&f, &g)?;
        let lhs = bl_distance(&reweight_by_fitness(&f, fitness)?, &reweight_by_fitness(&g, fitness)?)?;
        if lhs > c_f * rhs + SUITE_TOL {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(SuiteReport {
        name: format!("selection stability ({})", fitness.name()),
        cases: n_cases,
        violations,
        max_ratio,
        bound: c_f,
    })
}

/// Checks `D(x', y') <= D(x, y) + D(x_*, y_*)` for offspring built with
/// shared `gamma`, `sigma` and `xi`, where `D = min(|.|, 1)`. Cases cycle
/// through `dims`.
pub fn crossover_lipschitz_suite(n_cases: usize, dims: &[usize], seed: u64) -> SuiteReport {
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for case in 0..n_cases {
        let dim = dims[case % dims.len()];
        let mut rng = suite_rng(seed ^ 0x5eed, case as u64);
        let scale = [0.1, 1.0, 3.0][rng.random_range(0..3)];
        let x = normal_point(&mut rng, dim, scale);
        let xs = normal_point(&mut rng, dim, scale);
        // Partners are either independent or close to the first pair.
        let near = rng.random::<bool>();
        let partner = |p: &Point, rng: &mut ChaCha8Rng| {
            if near {
                let eps = 10f64.powf(-3.0 * rng.random::<f64>());
                Point::new(p.iter().map(|c| c + eps * rng.sample::<f64, _>(StandardNormal)).collect())
                    .expect("finite coordinates")
            } else {
                normal_point(rng, dim, scale)
            }
        };
        let y = partner(&x, &mut rng);
        let ys = partner(&xs, &mut rng);
        let gamma: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let xi: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let sigma = 2.0 * rng.random::<f64>();
        let xp = offspring(&x, &xs, &gamma, sigma, &xi);
        let yp = offspring(&y, &ys, &gamma, sigma, &xi);
        let lhs = truncated(&xp, &yp);
        let rhs = truncated(&x, &y) + truncated(&xs, &ys);
        if lhs > rhs + SUITE_TOL {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    SuiteReport {
        name: format!("crossover-mutation stability (d in {dims:?})"),
        cases: n_cases,
        violations,
        max_ratio,
        bound: 1.0,
    }
}
