//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use kinetic_ga::coupling::{build_sampler, coupling_cost_check, joint_check};
use kinetic_ga::ga::{self, InitialLaw, SimParams};
use kinetic_ga::lab::rates::rate_in_n_with;
use kinetic_ga::lab::trace::coupled_error_trace_with;
use kinetic_ga::lab::{
    crossover_lipschitz_suite, rate_in_tau, selection_stability_suite, ExperimentConfig, RateTable,
    Reference,
};
use kinetic_ga::meanfield::{grid_bounds, grid_trajectory, GridDensity1D};
use kinetic_ga::transport::{solve_ot, verify_plan, CostKind};
use kinetic_ga::{FitnessSpec, Point, WeightedEmpiricalMeasure};

const CRITERION_CONFIG: &str = r#"
seed = 2024
dim = 1
sigma = 0.25
tau = 0.1
T = 2.0
n_list = [64, 128, 256, 512, 1024, 2048]
replicas = 20

[fitness]
kind = "gaussian_bump"
f_lo = 1.0
f_hi = 2.0
s = 1.0

[initial]
kind = "normal"
mean = [0.0]
std = 1.0

[reference]
kind = "grid"
cells = 2048

[rate_tau]
tau_list = [0.2, 0.1, 0.05, 0.025]
refine = 8

[trace]
n = 128
replicas = 10
"#;

const SMALL_CONFIG: &str = r#"
seed = 99
dim = 1
sigma = 0.25
tau = 0.2
T = 1.0
n_list = [32, 64, 128]
replicas = 10

[fitness]
kind = "gaussian_bump"
f_lo = 1.0
f_hi = 2.0
s = 1.0

[initial]
kind = "normal"

[reference]
cells = 512

[rate_tau]
tau_list = [0.2, 0.1]
refine = 2

[trace]
n = 64
replicas = 3
"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<(usize, &'static str, Outcome)>, id: usize, name: &'static str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = f();
    println!(
        "criterion {id} [{}] {name}: {} ({:.1}s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        start.elapsed().as_secs_f64()
    );
    results.push((id, name, outcome));
}

fn slope_outcome(table: &RateTable) -> Outcome {
    match &table.fit {
        Some(fit) => Outcome {
            pass: table.pass(),
            detail: format!(
                "slope {:.4} in [{:.2}, {:.2}], 95% CI {:?}, insufficient rows {:?}",
                fit.slope, table.band.0, table.band.1, fit.ci, table.insufficient_replicas
            ),
        },
        None => Outcome {
            pass: false,
            detail: "no slope fit".into(),
        },
    }
}

fn pts(rng: &mut ChaCha8Rng, n: usize, dim: usize, lattice: bool) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let c = (0..dim)
                .map(|_| {
                    if lattice {
                        0.5 * rng.random_range(0..4) as f64
                    } else {
                        2.0 * rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect();
            Point::new(c).unwrap()
        })
        .collect()
}

/// Minimum of `(1/n) sum_i c(x_i, y_perm(i))` over all permutations.
fn brute_force(xs: &[Point], ys: &[Point], cost: CostKind) -> f64 {
    fn go(k: usize, perm: &mut Vec<usize>, xs: &[Point], ys: &[Point], cost: CostKind, best: &mut f64) {
        if k == perm.len() {
            let v: f64 = perm.iter().enumerate().map(|(i, &j)| cost.eval(&xs[i], &ys[j])).sum();
            *best = best.min(v / perm.len() as f64);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(k + 1, perm, xs, ys, cost, best);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..xs.len()).collect();
    let mut best = f64::INFINITY;
    go(0, &mut perm, xs, ys, cost, &mut best);
    best
}

fn transport_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut mismatches, mut bad_certs, mut solves) = (0.0f64, 0, 0, 0);
    for case in 0..200 {
        let n = rng.random_range(1..=6);
        let dim = rng.random_range(1..=3);
        let lattice = case % 2 == 1;
        let xs = pts(&mut rng, n, dim, lattice);
        let ys = pts(&mut rng, n, dim, lattice);
        let mu = WeightedEmpiricalMeasure::uniform(xs.clone()).unwrap();
        let nu = WeightedEmpiricalMeasure::uniform(ys.clone()).unwrap();
        for cost in [CostKind::Euclidean, CostKind::Truncated, CostKind::Indicator] {
            let plan = solve_ot(&mu, &nu, cost).unwrap();
            let err = (plan.cost_value - brute_force(&xs, &ys, cost)).abs();
            worst = worst.max(err);
            mismatches += usize::from(err > 1e-10);
            bad_certs += usize::from(!verify_plan(&plan, &mu, &nu, cost).ok);
            solves += 1;
        }
    }
    Outcome {
        pass: mismatches == 0 && bad_certs == 0,
        detail: format!(
            "{solves} solves, max |solve - brute force| {worst:.2e}, {mismatches} mismatches, {bad_certs} failed certificates"
        ),
    }
}

fn coupling_realization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut instances = vec![(
        WeightedEmpiricalMeasure::new(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![0.5, 0.5]).unwrap(),
        vec![Point::scalar(0.0), Point::scalar(1.0)],
        vec![0.75, 0.25],
    )];
    while instances.len() < 21 {
        let dim = rng.random_range(1..=2);
        let k = rng.random_range(1..=6);
        let n = rng.random_range(1..=6);
        let f = WeightedEmpiricalMeasure::from_unnormalized(
            pts(&mut rng, k, dim, false),
            (0..k).map(|_| rng.random_range(0.1..1.0)).collect(),
        )
        .unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        instances.push((f, pts(&mut rng, n, dim, false), w.iter().map(|x| x / total).collect()));
    }
    let (mut worst_tv, mut worst_z, mut max_cells, mut failures) = (0.0f64, 0.0f64, 0, 0);
    for (i, (f, x, w)) in instances.iter().enumerate() {
        let sampler = build_sampler(f, x, w, CostKind::Truncated).unwrap();
        let cells = sampler.plan().entries.len();
        if cells > 12 {
            // Basic solutions have at most k + n - 1 cells.
            failures += 1;
        }
        let joint = joint_check(&sampler, 100_000, 50 + i as u64).unwrap();
        let cost = coupling_cost_check(&sampler, 100_000, 50 + i as u64).unwrap();
        worst_tv = worst_tv.max(joint.tv);
        worst_z = worst_z.max(cost.z_score().abs());
        max_cells = max_cells.max(cells);
        if joint.tv >= 0.02 || cost.z_score().abs() > 4.0 {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{} instances (max {max_cells} plan cells), max TV {worst_tv:.4}, max |z| {worst_z:.2}",
            instances.len()
        ),
    }
}

fn selection_stability() -> Outcome {
    let specs = [
        FitnessSpec::gaussian_bump(1.0, 2.0, 1.0, vec![0.0]).unwrap(),
        FitnessSpec::gaussian_bump(0.5, 3.0, 0.5, vec![1.0, -1.0]).unwrap(),
        FitnessSpec::reciprocal_rastrigin(0.1, 10.0, 1).unwrap(),
        FitnessSpec::reciprocal_rastrigin(0.1, 10.0, 2).unwrap(),
        FitnessSpec::constant(1.5).unwrap(),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, spec) in specs.iter().enumerate() {
        let r = selection_stability_suite(spec, 1000, 600 + k as u64).unwrap();
        pass &= r.pass();
        parts.push(format!(
            "{} d={}: {} violations, max ratio {:.3} <= C_F {:.3}",
            spec.name(),
            spec.dim().unwrap_or(1),
            r.violations,
            r.max_ratio,
            r.bound
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn crossover_stability() -> Outcome {
    let r = crossover_lipschitz_suite(10_000, &[1, 2, 5], 7);
    Outcome {
        pass: r.pass(),
        detail: format!("{} tuples, {} violations, max ratio {:.4}", r.cases, r.violations, r.max_ratio),
    }
}

/// Constant fitness in d = 1: the variance recursion
/// `V' = (1 - tau/3) V + tau sigma^2` has fixed point `3 sigma^2`.
fn constant_fitness_variance() -> (bool, String) {
    let sigma = 0.25;
    let tau = 0.5;
    let steps = 60;
    let target = 3.0 * sigma * sigma;
    let fitness = FitnessSpec::constant(1.0).unwrap();
    let law = InitialLaw::Normal {
        mean: vec![0.0],
        std: 1.0,
    };
    let (lo, hi) = grid_bounds(&law, sigma, steps).unwrap();
    let f0 = GridDensity1D::from_law(&law, lo, hi, 2048).unwrap();
    let grid = grid_trajectory(f0, tau, steps, &fitness, sigma).unwrap();
    let grid_var = grid.last().unwrap().variance();

    let params = SimParams {
        n_particles: 20_000,
        tau,
        sigma,
        n_max: steps,
        dim: 1,
        seed: 8,
    };
    let traj = ga::run(&params, &fitness, &law, 0).unwrap();
    let tail = &traj.states[steps - 19..];
    let particle_var = tail
        .iter()
        .map(|s| {
            let n = s.positions.len() as f64;
            let m = s.positions.iter().map(|x| x[0]).sum::<f64>() / n;
            s.positions.iter().map(|x| (x[0] - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / tail.len() as f64;
    let rel = |v: f64| (v / target - 1.0).abs();
    (
        rel(grid_var) <= 0.02 && rel(particle_var) <= 0.02,
        format!(
            "constant fitness variance: grid {grid_var:.5}, particles {particle_var:.5}, target {target:.5}"
        ),
    )
}

fn moments(tables: &[&RateTable]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in tables {
        let m = &t.moments;
        pass &= m.ok();
        parts.push(format!(
            "{:?}: {} reference trajectories, {} particle trajectories, {} envelope violations, max M_q^(1/q)/envelope {:.3}",
            t.variable,
            m.reference.len(),
            m.particle_trajectories,
            m.particle_envelope_violations + m.reference.iter().map(|r| r.envelope_violations.len()).sum::<usize>(),
            m.max_envelope_ratio
        ));
    }
    let (var_ok, var_detail) = constant_fitness_variance();
    parts.push(var_detail);
    Outcome {
        pass: pass && var_ok,
        detail: parts.join("; "),
    }
}

fn csv_outputs(cfg: &ExperimentConfig) -> (String, String, String) {
    let reference = Reference::build(cfg).unwrap();
    let n = rate_in_n_with(cfg, &reference).unwrap().to_csv();
    let t = rate_in_tau(cfg).unwrap().to_csv();
    let tr = coupled_error_trace_with(cfg, &reference).unwrap().to_csv();
    (n, t, tr)
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(SMALL_CONFIG).unwrap();
    let runs: Vec<_> = [1, 1, 3]
        .iter()
        .map(|&threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| csv_outputs(&cfg))
        })
        .collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    let mut ens_cfg = cfg.clone();
    ens_cfg.reference.kind = Some(kinetic_ga::lab::ReferenceKind::Ensemble);
    ens_cfg.reference.ensemble_size = Some(2000);
    let ens: Vec<_> = [1, 2]
        .iter()
        .map(|&threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let r = Reference::build(&ens_cfg).unwrap();
                    coupled_error_trace_with(&ens_cfg, &r).unwrap().to_csv()
                })
        })
        .collect();
    let ens_same = ens[0] == ens[1];
    Outcome {
        pass: same && ens_same,
        detail: format!(
            "rate-n, rate-tau and trace CSVs identical across 3 runs at 1 and 3 threads: {same}; ensemble-reference trace identical at 1 and 2 threads: {ens_same}"
        ),
    }
}

fn main() {
    let cfg = ExperimentConfig::from_toml_str(CRITERION_CONFIG).expect("criterion config parses");
    let mut results = Vec::new();

    let reference = Reference::build(&cfg).expect("grid reference");
    let mut n_table = None;
    record(&mut results, 1, "error rate in N", || {
        let t = rate_in_n_with(&cfg, &reference).expect("rate in N runs");
        let o = slope_outcome(&t);
        n_table = Some(t);
        o
    });
    let mut tau_table = None;
    record(&mut results, 2, "error rate in tau", || {
        let t = rate_in_tau(&cfg).expect("rate in tau runs");
        let o = slope_outcome(&t);
        tau_table = Some(t);
        o
    });
    record(&mut results, 3, "coupled error structure", || {
        let t = coupled_error_trace_with(&cfg, &reference).expect("trace runs");
        Outcome {
            pass: t.pass(),
            detail: format!(
                "N = {}, {} replicas, E_0 = 0 in all replicas: {}, coupling bound violations {} (max excess {:.1e})",
                t.n_particles,
                t.replicas,
                t.e0_zero,
                t.bound_violations.len(),
                t.max_bound_excess
            ),
        }
    });
    record(&mut results, 4, "transport exactness", transport_exactness);
    record(&mut results, 5, "coupling sampler realizes the optimal plan", coupling_realization);
    record(&mut results, 6, "selection stability", selection_stability);
    record(&mut results, 7, "crossover-mutation stability", crossover_stability);
    record(&mut results, 8, "moment envelope", || {
        moments(&[n_table.as_ref().unwrap(), tau_table.as_ref().unwrap()])
    });
    record(&mut results, 9, "determinism", determinism);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
