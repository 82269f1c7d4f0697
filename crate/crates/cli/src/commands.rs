use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use kinetic_ga::coupling::{build_sampler, coupling_cost_check, joint_check};
use kinetic_ga::ga::{self, Trajectory};
use kinetic_ga::lab::config::ReferenceKind;
use kinetic_ga::lab::report::{write_atomic, write_json};
use kinetic_ga::lab::trace::coupled_error_trace_with;
use kinetic_ga::lab::{
    config_hash, crossover_lipschitz_suite, emit_report, rate_in_n, rate_in_tau,
    selection_stability_suite, ExperimentConfig, Reference, SuiteReport,
};
use kinetic_ga::meanfield::moment_bound_check;
use kinetic_ga::transport::solve_ot;
use kinetic_ga::{FitnessSpec, WeightedEmpiricalMeasure};

use crate::manifest::RunManifest;
use crate::{Cli, Command, Failure, Global};

type CmdResult = std::result::Result<(), Failure>;

pub fn dispatch(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate {
            n,
            reference,
            snapshot_stride,
        } => simulate(g, *n, reference.as_deref(), *snapshot_stride),
        Command::RateN => rate(g, "rate-n"),
        Command::RateTau => rate(g, "rate-tau"),
        Command::CoupleTest {
            reference,
            population,
            cost,
            draws,
        } => couple_test(g, reference, population, *cost, *draws),
        Command::Dist { a, b, cost, plan } => dist(g, a, b, *cost, plan.as_deref()),
        Command::Suite {
            selection_cases,
            crossover_cases,
        } => suite(g, *selection_cases, *crossover_cases),
    }
}

struct Loaded {
    cfg: ExperimentConfig,
    path: PathBuf,
    hash: String,
}

fn load_config(g: &Global) -> std::result::Result<Loaded, Failure> {
    let path = g
        .config
        .clone()
        .ok_or_else(|| Failure::Validation("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.fitness_spec()?;
    cfg.initial_law()?;
    let hash = config_hash(&text)?;
    Ok(Loaded { cfg, path, hash })
}

fn out_dir(g: &Global, command: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from("out").join(command))
}

fn manifest_for(command: &str, loaded: Option<&Loaded>, seed: Option<u64>) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.seed = seed;
    if let Some(l) = loaded {
        m.seed = Some(l.cfg.seed);
        m.config_path = Some(l.path.clone());
        m.config_hash = Some(l.hash.clone());
        m.resolved_config = Some(l.cfg.to_toml());
    }
    m
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> CmdResult {
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes())?;
    files.push(path);
    Ok(())
}

fn read_measure(path: &Path) -> std::result::Result<WeightedEmpiricalMeasure, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    WeightedEmpiricalMeasure::from_text(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn rate(g: &Global, command: &str) -> CmdResult {
    let loaded = load_config(g)?;
    let table = if command == "rate-n" {
        rate_in_n(&loaded.cfg)?
    } else {
        loaded.cfg.nested_tau_list()?;
        rate_in_tau(&loaded.cfg)?
    };
    let dir = out_dir(g, command);
    create_dir(&dir)?;
    let name = command.replace('-', "_");
    let files = emit_report(&dir, &name, &table)?;
    manifest_for(command, Some(&loaded), None).write(&dir, &files)?;
    match &table.fit {
        Some(fit) => println!(
            "slope {:.4} (expected {:.4}, band [{:.4}, {:.4}]) {}",
            fit.slope,
            table.expected_slope,
            table.band.0,
            table.band.1,
            if table.pass() { "PASS" } else { "FAIL" }
        ),
        None => println!("no slope fit: too few usable rows"),
    }
    Ok(())
}

/// `step,mean_1..mean_d,m2,mq,best_fitness` for every step of a run.
fn trajectory_csv(traj: &Trajectory, fitness: &FitnessSpec, q: f64, dim: usize) -> String {
    let mut out = String::from("step");
    for k in 1..=dim {
        let _ = write!(out, ",mean_{k}");
    }
    out.push_str(",m2,mq,best_fitness\n");
    for state in &traj.states {
        let n = state.positions.len() as f64;
        let mut mean = vec![0.0; dim];
        let (mut m2, mut mq) = (0.0, 0.0);
        let mut best = f64::NEG_INFINITY;
        for x in &state.positions {
            for (m, c) in mean.iter_mut().zip(x.coords()) {
                *m += c;
            }
            let r = x.norm();
            m2 += r * r;
            mq += r.powf(q);
            best = best.max(fitness.eval(x.coords()));
        }
        let _ = write!(out, "{}", state.step);
        for m in mean {
            let _ = write!(out, ",{:e}", m / n);
        }
        let _ = writeln!(out, ",{:e},{:e},{:e}", m2 / n, mq / n, best);
    }
    out
}

#[derive(Serialize)]
struct SimulateSummary {
    n_particles: usize,
    steps: usize,
    reference: String,
    reference_lost_mass: f64,
    e0_zero: bool,
    coupling_bound_violations: usize,
    max_coupling_bound_excess: f64,
    final_e_n: f64,
    final_bl_emp: f64,
    pass: bool,
}

fn simulate(g: &Global, n: Option<usize>, reference: Option<&str>, stride: usize) -> CmdResult {
    let mut loaded = load_config(g)?;
    let cfg = &mut loaded.cfg;
    if let Some(kind) = reference {
        let kind: ReferenceKind = kind.parse()?;
        if kind == ReferenceKind::Grid && cfg.dim != 1 {
            return Err(Failure::Validation("--reference grid requires dim = 1".into()));
        }
        cfg.reference.kind = Some(kind);
    }
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Validation("--n must be >= 1".into()));
        }
        cfg.trace.n = Some(n);
    }
    let n = cfg.trace.n.unwrap_or(cfg.n_list[0]);
    let fitness = cfg.fitness_spec()?;
    let law = cfg.initial_law()?;
    let params = cfg.sim_params(n);
    params.validate()?;

    let traj = ga::run(&params, &fitness, &law, 0)?;
    let reference = Reference::build(cfg)?;
    let trace = coupled_error_trace_with(cfg, &reference)?;
    let ref_moments = moment_bound_check(
        &reference.moments(cfg.q)?,
        cfg.q,
        fitness.kappa(),
        cfg.sigma,
        cfg.tau,
        cfg.dim,
    )?;
    let ga_moments: Vec<f64> = traj
        .states
        .iter()
        .map(|s| s.positions.iter().map(|x| x.norm().powf(cfg.q)).sum::<f64>() / n as f64)
        .collect();
    let ga_moments = moment_bound_check(&ga_moments, cfg.q, fitness.kappa(), cfg.sigma, cfg.tau, cfg.dim)?;

    let dir = out_dir(g, "simulate");
    create_dir(&dir)?;
    let mut files = Vec::new();
    write_file(&dir, "trajectory.csv", &trajectory_csv(&traj, &fitness, cfg.q, cfg.dim), &mut files)?;
    write_file(&dir, "trace.csv", &trace.to_csv(), &mut files)?;
    match &reference {
        Reference::Grid(g) => {
            let last = g.last().expect("grid trajectory is never empty");
            write_file(&dir, "reference_final.csv", &last.to_csv(), &mut files)?;
        }
        Reference::Ensemble { steps, .. } => {
            let last = steps.last().expect("ensemble trajectory is never empty");
            write_file(&dir, "reference_final.msr", &last.to_text(), &mut files)?;
        }
    }
    if stride > 0 {
        let snap = dir.join("snapshots");
        create_dir(&snap)?;
        for state in traj.states.iter().step_by(stride) {
            let name = format!("step_{:05}.msr", state.step);
            write_file(&snap, &name, &state.empirical().to_text(), &mut files)?;
        }
    }
    let moments_path = dir.join("moments.json");
    write_json(
        &moments_path,
        &serde_json::json!({ "reference": ref_moments, "particles": ga_moments }),
    )?;
    files.push(moments_path);
    let last = trace.rows.last();
    let summary = SimulateSummary {
        n_particles: n,
        steps: cfg.n_max(),
        reference: reference.describe(),
        reference_lost_mass: reference.lost_mass(),
        e0_zero: trace.e0_zero,
        coupling_bound_violations: trace.bound_violations.len(),
        max_coupling_bound_excess: trace.max_bound_excess,
        final_e_n: last.map_or(0.0, |r| r.e_n),
        final_bl_emp: last.map_or(0.0, |r| r.bl_emp),
        pass: trace.pass(),
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    files.push(summary_path);
    manifest_for("simulate", Some(&loaded), None).write(&dir, &files)?;
    println!(
        "E_n at step {}: {:e}; coupling bound {}",
        summary.steps,
        summary.final_e_n,
        if summary.pass { "holds" } else { "VIOLATED" }
    );
    Ok(())
}

fn couple_test(
    g: &Global,
    reference: &Path,
    population: &Path,
    cost: kinetic_ga::transport::CostKind,
    draws: usize,
) -> CmdResult {
    if draws == 0 {
        return Err(Failure::Validation("--draws must be >= 1".into()));
    }
    let f_ref = read_measure(reference)?;
    let pop = read_measure(population)?;
    let seed = g.seed.unwrap_or(0);
    let sampler = build_sampler(&f_ref, pop.support(), pop.weights(), cost)?;
    let joint = joint_check(&sampler, draws, seed)?;
    let cost_check = coupling_cost_check(&sampler, draws, seed)?;

    let plan_csv = sampler.plan().to_csv();
    let mut joint_csv = String::from("ref_atom,partner,mass\n");
    for (i, j, m) in &joint.empirical {
        let _ = writeln!(joint_csv, "{i},{j},{m:e}");
    }
    let worst_ks = joint.beta_ks.iter().map(|b| b.1).fold(0.0, f64::max);

    match &g.out {
        Some(dir) => {
            create_dir(dir)?;
            let mut files = Vec::new();
            write_file(dir, "plan.csv", &plan_csv, &mut files)?;
            write_file(dir, "joint.csv", &joint_csv, &mut files)?;
            let path = dir.join("couple_test.json");
            write_json(
                &path,
                &serde_json::json!({
                    "cost": cost,
                    "draws": draws,
                    "plan_cost": sampler.plan().cost_value,
                    "tv": joint.tv,
                    "max_beta_ks": worst_ks,
                    "mean_cost": cost_check.mean,
                    "cost_stderr": cost_check.stderr,
                    "cost_z": cost_check.z_score(),
                }),
            )?;
            files.push(path);
            manifest_for("couple-test", None, Some(seed)).write(dir, &files)?;
        }
        None => {
            print!("# plan\n{plan_csv}# empirical joint\n{joint_csv}");
        }
    }
    println!(
        "tv {:e} plan_cost {:e} mean_cost {:e} z {:.3}",
        joint.tv,
        sampler.plan().cost_value,
        cost_check.mean,
        cost_check.z_score()
    );
    Ok(())
}

fn dist(
    g: &Global,
    a: &Path,
    b: &Path,
    cost: kinetic_ga::transport::CostKind,
    plan_path: Option<&Path>,
) -> CmdResult {
    let mu = read_measure(a)?;
    let nu = read_measure(b)?;
    let plan = solve_ot(&mu, &nu, cost)?;
    let mut files = Vec::new();
    if let Some(p) = plan_path {
        write_atomic(p, plan.to_csv().as_bytes())?;
        files.push(p.to_path_buf());
    }
    if let Some(dir) = &g.out {
        create_dir(dir)?;
        manifest_for("dist", None, None).write(dir, &files)?;
    }
    println!("{:.17e}", plan.cost_value);
    Ok(())
}

#[derive(Serialize)]
struct SuiteOutput {
    seed: u64,
    reports: Vec<SuiteReport>,
    pass: bool,
}

fn default_suite_fitness() -> kinetic_ga::Result<Vec<FitnessSpec>> {
    Ok(vec![
        FitnessSpec::constant(1.0)?,
        FitnessSpec::gaussian_bump(0.5, 2.0, 1.0, vec![0.0])?,
        FitnessSpec::reciprocal_rastrigin(0.1, 10.0, 1)?,
    ])
}

fn suite(g: &Global, selection_cases: usize, crossover_cases: usize) -> CmdResult {
    if selection_cases == 0 || crossover_cases == 0 {
        return Err(Failure::Validation("case counts must be >= 1".into()));
    }
    let loaded = match g.config {
        Some(_) => Some(load_config(g)?),
        None => None,
    };
    let seed = loaded.as_ref().map_or(g.seed.unwrap_or(0), |l| l.cfg.seed);
    let specs = match &loaded {
        Some(l) => vec![l.cfg.fitness_spec()?],
        None => default_suite_fitness()?,
    };
    let mut reports = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        reports.push(selection_stability_suite(spec, selection_cases, seed.wrapping_add(k as u64))?);
    }
    reports.push(crossover_lipschitz_suite(crossover_cases, &[1, 2, 5], seed));
    let pass = reports.iter().all(SuiteReport::pass);

    let dir = out_dir(g, "suite");
    create_dir(&dir)?;
    let path = dir.join("suite.json");
    write_json(&path, &SuiteOutput { seed, reports: reports.clone(), pass })?;
    manifest_for("suite", loaded.as_ref(), Some(seed)).write(&dir, &[path])?;
    for r in &reports {
        println!(
            "{}: {} cases, {} violations, max ratio {:.4} (bound {:.4}) {}",
            r.name,
            r.cases,
            r.violations,
            r.max_ratio,
            r.bound,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
