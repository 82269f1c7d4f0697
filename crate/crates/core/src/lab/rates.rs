//! Convergence-rate experiments: error against population size and against
//! time step, with least-squares slopes on log-log axes.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ga::{draw_auxiliaries, ga_step, AuxStream, PopulationState};
use crate::meanfield::grid::{grid_bounds, grid_trajectory, GridDensity1D};
use crate::meanfield::moments::{moment_bound_check, MomentBoundReport};
use crate::measures::moment_q;
use crate::rng::{Domain, StreamKey};
use crate::transport::{bl_distance, concentration_rate};

use super::config::ExperimentConfig;
use super::reference::{snapshot_steps, snapshot_stride, Reference};

/// Half-width of the acceptance band around the expected slope.
pub const SLOPE_BAND: f64 = 0.15;
/// Half-width of the band for the slope in `tau`.
pub const TAU_SLOPE_BAND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateVariable {
    N,
    Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    /// `N` or `tau`.
    pub param: f64,
    pub mean_err: f64,
    pub stderr: f64,
    /// `eps_1(N)` for population sweeps, `tau` for time-step sweeps.
    pub epsilon: f64,
    pub replicas: usize,
    /// Log-log slope between this row and the previous one.
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t interval; absent with fewer than three points.
    pub ci: Option<(f64, f64)>,
    /// Parameters of the rows used in the fit.
    pub used: Vec<f64>,
}

/// Ordinary least squares of `ln y` on `ln x`. Needs two points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let k = pts.len();
    if k < 2 {
        return None;
    }
    let kf = k as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ci = if k >= 3 {
        let ssr: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (ssr / (kf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, kf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        Some((slope - t * se, slope + t * se))
    } else {
        None
    };
    Some(SlopeFit {
        slope,
        intercept,
        ci,
        used: points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|p| p.0)
            .collect(),
    })
}

/// Moment checks gathered over all trajectories of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    /// One-step and envelope checks of the reference trajectories.
    pub reference: Vec<MomentBoundReport>,
    /// Number of particle trajectories checked against their envelope.
    pub particle_trajectories: usize,
    /// Particle trajectories whose `M_q^{1/q}` crosses the envelope.
    pub particle_envelope_violations: usize,
    /// Largest `M_q^{1/q}(f_n) / envelope_n` seen in any trajectory.
    pub max_envelope_ratio: f64,
}

impl MomentSummary {
    pub fn ok(&self) -> bool {
        self.particle_envelope_violations == 0
            && self.reference.iter().all(|r| r.one_step_ok() && r.envelope_ok())
    }
}

fn envelope_ratio(r: &MomentBoundReport) -> f64 {
    r.roots
        .iter()
        .zip(&r.recursion_envelope)
        .map(|(m, e)| if *e > 0.0 { m / e } else if *m > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub variable: RateVariable,
    pub rows: Vec<RateRow>,
    pub fit: Option<SlopeFit>,
    pub expected_slope: f64,
    pub band: (f64, f64),
    /// Rows whose standard error exceeds half the gap to a neighbouring
    /// fitted value.
    pub insufficient_replicas: Vec<f64>,
    /// Stride of the steps over which the supremum is taken.
    pub stride: usize,
    pub reference: String,
    /// Sampling error of an ensemble reference, `eps_1(M)`.
    pub reference_error: Option<f64>,
    pub moments: MomentSummary,
}

impl RateTable {
    pub fn pass(&self) -> bool {
        self.fit
            .as_ref()
            .is_some_and(|f| f.slope >= self.band.0 && f.slope <= self.band.1)
    }

    /// CSV with header `param,mean_err,stderr,epsilon,slope_running`.
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("param,mean_err,stderr,epsilon,slope_running\n");
    for r in rows {
        let running = r.slope_running.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.param, r.mean_err, r.stderr, r.epsilon, running
        ));
    }
    s
}

fn fill_running_slopes(rows: &mut [RateRow]) {
    for k in 1..rows.len() {
        let (a, b) = (&rows[k - 1], &rows[k]);
        rows[k].slope_running = if a.mean_err > 0.0 && b.mean_err > 0.0 {
            Some((b.mean_err / a.mean_err).ln() / (b.param / a.param).ln())
        } else {
            None
        };
    }
}

fn flag_insufficient(rows: &[RateRow], fit: Option<&SlopeFit>) -> Vec<f64> {
    let Some(fit) = fit else {
        return Vec::new();
    };
    let fitted: Vec<f64> = rows
        .iter()
        .map(|r| (fit.intercept + fit.slope * r.param.ln()).exp())
        .collect();
    let mut out = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let mut gap = f64::INFINITY;
        if k > 0 {
            gap = gap.min((fitted[k] - fitted[k - 1]).abs());
        }
        if k + 1 < rows.len() {
            gap = gap.min((fitted[k] - fitted[k + 1]).abs());
        }
        if gap.is_finite() && r.stderr > 0.5 * gap {
            out.push(r.param);
        }
    }
    out
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Expected exponent of `eps_1(N)` in dimension `d`.
pub fn expected_n_slope(dim: usize) -> f64 {
    if dim <= 2 {
        -0.5
    } else {
        -1.0 / dim as f64
    }
}

struct ReplicaOutcome {
    sup_error: f64,
    moments: Vec<f64>,
}

fn replica_sup_error(
    cfg: &ExperimentConfig,
    n: usize,
    replica: u64,
    reference: &Reference,
    snapshots: &[bool],
) -> Result<ReplicaOutcome> {
    let fitness = cfg.fitness_spec()?;
    let law = cfg.initial_law()?;
    let params = cfg.sim_params(n);
    let key = StreamKey::new(cfg.seed, Domain::Initial, replica);
    let mut stream = AuxStream::new(cfg.seed, replica);
    let mut state = PopulationState::new(0, law.sample_n(&key, n), &fitness)?;
    let mut sup: f64 = 0.0;
    let mut moments = Vec::with_capacity(params.n_max + 1);
    for step in 0..=params.n_max {
        let emp = state.empirical();
        moments.push(moment_q(&emp, cfg.q)?.value);
        if snapshots[step] {
            sup = sup.max(bl_distance(&emp, &reference.measure(step)?)?);
        }
        if step < params.n_max {
            let draws = draw_auxiliaries(&mut stream, &params);
            state = ga_step(&state, &draws, &fitness, &params)?;
        }
    }
    Ok(ReplicaOutcome {
        sup_error: sup,
        moments,
    })
}

/// Mean over replicas of `sup_{t_n <= T} ||f^N_n - f_n||_BL` for every `N`
/// in the config, against the configured reference.
pub fn rate_in_n(cfg: &ExperimentConfig) -> Result<RateTable> {
    let reference = Reference::build(cfg)?;
    rate_in_n_with(cfg, &reference)
}

pub fn rate_in_n_with(cfg: &ExperimentConfig, reference: &Reference) -> Result<RateTable> {
    let n_max = cfg.n_max();
    let fitness = cfg.fitness_spec()?;
    let mut snapshots = vec![false; n_max + 1];
    for s in snapshot_steps(n_max) {
        snapshots[s] = true;
    }
    let kappa = fitness.kappa();

    let mut rows = Vec::with_capacity(cfg.n_list.len());
    let mut particle_reports = Vec::new();
    for &n in &cfg.n_list {
        let outcomes: Vec<ReplicaOutcome> = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|k| replica_sup_error(cfg, n, k, reference, &snapshots))
            .collect::<Result<_>>()?;
        let errs: Vec<f64> = outcomes.iter().map(|o| o.sup_error).collect();
        let (mean, stderr) = mean_and_stderr(&errs);
        rows.push(RateRow {
            param: n as f64,
            mean_err: mean,
            stderr,
            epsilon: concentration_rate(n, cfg.dim)?,
            replicas: cfg.replicas,
            slope_running: None,
        });
        for o in &outcomes {
            particle_reports.push(moment_bound_check(&o.moments, cfg.q, kappa, cfg.sigma, cfg.tau, cfg.dim)?);
        }
    }
    fill_running_slopes(&mut rows);

    let mut points: Vec<(f64, f64)> = rows.iter().map(|r| (r.param, r.mean_err)).collect();
    if rows.len() > 2 && rows[0].stderr > 0.25 * rows[0].mean_err {
        points.remove(0);
    }
    let fit = fit_loglog(&points);
    let mut insufficient = flag_insufficient(&rows, fit.as_ref());
    if cfg.replicas < 10 {
        insufficient = rows.iter().map(|r| r.param).collect();
    }

    let ref_report = moment_bound_check(&reference.moments(cfg.q)?, cfg.q, kappa, cfg.sigma, cfg.tau, cfg.dim)?;
    let moments = summarize_moments(vec![ref_report], &particle_reports);
    let expected = expected_n_slope(cfg.dim);
    Ok(RateTable {
        variable: RateVariable::N,
        rows,
        fit,
        expected_slope: expected,
        band: (expected - SLOPE_BAND, expected + SLOPE_BAND),
        insufficient_replicas: insufficient,
        stride: snapshot_stride(n_max),
        reference: reference.describe(),
        reference_error: reference.own_error(cfg.dim),
        moments,
    })
}

fn summarize_moments(reference: Vec<MomentBoundReport>, particles: &[MomentBoundReport]) -> MomentSummary {
    let max_ratio = reference
        .iter()
        .chain(particles)
        .map(envelope_ratio)
        .fold(0.0, f64::max);
    MomentSummary {
        reference,
        particle_trajectories: particles.len(),
        particle_envelope_violations: particles.iter().filter(|r| !r.envelope_ok()).count(),
        max_envelope_ratio: max_ratio,
    }
}

/// Grid trajectories for each `tau` in the nested list against a finer
/// reference trajectory at `min(tau) / refine`, compared at the multiples of
/// the largest `tau`. Requires `dim = 1`.
pub fn rate_in_tau(cfg: &ExperimentConfig) -> Result<RateTable> {
    if cfg.dim != 1 {
        return Err(Error::Config("rate-tau needs the grid solver, which requires dim = 1".into()));
    }
    let taus = cfg.nested_tau_list()?;
    let fitness = cfg.fitness_spec()?;
    let law = cfg.initial_law()?;
    let (lo, hi) = grid_bounds(&law, cfg.sigma, cfg.n_max())?;
    let f0 = GridDensity1D::from_law(&law, lo, hi, cfg.reference.cells)?;
    let coarsest = taus[0];
    let finest = *taus.last().unwrap();
    let tau_ref = finest / cfg.rate_tau.refine as f64;
    let steps = |tau: f64| (cfg.horizon / tau).round() as usize;
    let checkpoints = steps(coarsest);

    let run = |tau: f64| grid_trajectory(f0.clone(), tau, steps(tau), &fitness, cfg.sigma);
    let reference = run(tau_ref)?;
    let ref_stride = (coarsest / tau_ref).round() as usize;
    let ref_measures: Vec<_> = (0..=checkpoints)
        .map(|c| reference[c * ref_stride].to_measure(0.0))
        .collect::<Result<_>>()?;

    let kappa = fitness.kappa();
    let mut reports = vec![moment_bound_check(
        &reference.iter().map(|f| f.moment(cfg.q)).collect::<Vec<_>>(),
        cfg.q,
        kappa,
        cfg.sigma,
        tau_ref,
        1,
    )?];
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let traj = run(tau)?;
        let stride = (coarsest / tau).round() as usize;
        let mut sup: f64 = 0.0;
        for (c, r) in ref_measures.iter().enumerate() {
            sup = sup.max(bl_distance(&traj[c * stride].to_measure(0.0)?, r)?);
        }
        reports.push(moment_bound_check(
            &traj.iter().map(|f| f.moment(cfg.q)).collect::<Vec<_>>(),
            cfg.q,
            kappa,
            cfg.sigma,
            tau,
            1,
        )?);
        rows.push(RateRow {
            param: tau,
            mean_err: sup,
            stderr: 0.0,
            epsilon: tau,
            replicas: 1,
            slope_running: None,
        });
    }
    fill_running_slopes(&mut rows);
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.param, r.mean_err)).collect();
    let fit = fit_loglog(&points);
    Ok(RateTable {
        variable: RateVariable::Tau,
        rows,
        fit,
        expected_slope: 1.0,
        band: (1.0 - TAU_SLOPE_BAND, 1.0 + TAU_SLOPE_BAND),
        insufficient_replicas: Vec::new(),
        stride: 1,
        reference: format!(
            "grid with {} cells on [{lo}, {hi}] at tau = {tau_ref}",
            cfg.reference.cells
        ),
        reference_error: None,
        moments: summarize_moments(reports, &[]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fit_exact_power_law() {
        let pts: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(-0.5)))
            .collect();
        let f = fit_loglog(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 3f64.ln(), epsilon = 1e-12);
        let (lo, hi) = f.ci.unwrap();
        assert!(lo <= -0.5 + 1e-9 && hi >= -0.5 - 1e-9);
        assert!(fit_loglog(&pts[..1]).is_none());
        assert!(fit_loglog(&pts[..2]).unwrap().ci.is_none());
    }

    #[test]
    fn running_slopes_and_csv() {
        let mut rows: Vec<RateRow> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&p: &f64| RateRow {
                param: p,
                mean_err: 1.0 / p,
                stderr: 0.0,
                epsilon: p,
                replicas: 1,
                slope_running: None,
            })
            .collect();
        fill_running_slopes(&mut rows);
        assert!(rows[0].slope_running.is_none());
        assert_abs_diff_eq!(rows[2].slope_running.unwrap(), -1.0, epsilon = 1e-12);
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("param,mean_err,stderr,epsilon,slope_running\n1,1,0,1,\n"));
        assert_eq!(rows_to_csv(&[]), "param,mean_err,stderr,epsilon,slope_running\n");
    }

    #[test]
    fn insufficient_flags() {
        let rows: Vec<RateRow> = [(64.0, 0.1, 0.001), (128.0, 0.07, 0.05)]
            .iter()
            .map(|&(p, m, s)| RateRow {
                param: p,
                mean_err: m,
                stderr: s,
                epsilon: 0.0,
                replicas: 10,
                slope_running: None,
            })
            .collect();
        let fit = fit_loglog(&[(64.0, 0.1), (128.0, 0.07)]).unwrap();
        assert_eq!(flag_insufficient(&rows, Some(&fit)), vec![128.0]);
    }
}
