//! Exact optimal transport between discrete measures.
//!
//! [`solve_ot`] rounds both marginals to integers on a common grid of
//! `2^-50`, solves the transportation problem with the network simplex in
//! [`simplex`], and returns the plan together with dual potentials that
//! certify optimality. With the truncated cost `min(|x - y|, 1)` the optimal
//! value is the bounded-Lipschitz distance.

mod line;
pub(crate) mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{euclidean, truncated, WeightedEmpiricalMeasure};

pub use line::{bl_distance_1d, w1_euclidean_1d};

/// Common denominator used to rationalize weights.
pub const MASS_SCALE: i64 = 1 << 50;

/// Tolerance used by [`verify_plan`].
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `|x - y|`.
    Euclidean,
    /// `min(|x - y|, 1)`.
    Truncated,
    /// `1` if `x != y`, else `0`.
    Indicator,
}

impl CostKind {
    #[inline]
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            CostKind::Euclidean => euclidean(x, y),
            CostKind::Truncated => truncated(x, y),
            CostKind::Indicator => {
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Euclidean => "euclidean",
            CostKind::Truncated => "truncated",
            CostKind::Indicator => "indicator",
        })
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(CostKind::Euclidean),
            "truncated" => Ok(CostKind::Truncated),
            "indicator" => Ok(CostKind::Indicator),
            other => Err(Error::InvalidParameter {
                name: "cost",
                reason: format!("unknown cost {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

/// A coupling between two discrete measures with dual potentials.
///
/// Only cells with positive mass are stored, sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<PlanEntry>,
    pub cost_value: f64,
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for e in &self.entries {
            s[e.row] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for e in &self.entries {
            s[e.col] += e.mass;
        }
        s
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.cols]; self.rows];
        for e in &self.entries {
            m[e.row][e.col] += e.mass;
        }
        m
    }

    /// `sum_i mu_i u_i + sum_j nu_j v_j`.
    pub fn dual_objective(&self, mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> f64 {
        let a: f64 = mu.weights().iter().zip(&self.dual_u).map(|(w, u)| w * u).sum();
        let b: f64 = nu.weights().iter().zip(&self.dual_v).map(|(w, v)| w * v).sum();
        a + b
    }

    /// CSV with header `i,j,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,mass\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{}\n", e.row, e.col, e.mass));
        }
        s
    }
}

fn check_same_dim(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(())
}

/// Optimal plan for the given ground cost, with certified duals.
pub fn solve_ot(
    mu: &WeightedEmpiricalMeasure,
    nu: &WeightedEmpiricalMeasure,
    cost: CostKind,
) -> Result<TransportPlan> {
    check_same_dim(mu, nu)?;
    let a = simplex::integer_masses(mu.weights(), MASS_SCALE);
    let b = simplex::integer_masses(nu.weights(), MASS_SCALE);
    let rows: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0).collect();
    let cols: Vec<usize> = (0..b.len()).filter(|&j| b[j] > 0).collect();
    let (m, k) = (rows.len(), cols.len());

    let mut supply: Vec<i64> = rows.iter().map(|&i| a[i]).collect();
    supply.extend(cols.iter().map(|&j| -b[j]));
    let mut net = simplex::FlowNetwork::with_nodes(supply);
    net.src.reserve(m * k);
    net.dst.reserve(m * k);
    net.cost.reserve(m * k);
    for (ri, &i) in rows.iter().enumerate() {
        let x = &mu.support()[i];
        for (cj, &j) in cols.iter().enumerate() {
            net.add_arc(ri, m + cj, cost.eval(x, &nu.support()[j]));
        }
    }
    let sol = simplex::solve(&net)?;

    let scale = MASS_SCALE as f64;
    let mut entries = Vec::new();
    let mut cost_value = 0.0;
    for (e, &f) in sol.flow.iter().enumerate() {
        if f > 0 {
            let (ri, cj) = (e / k, e % k);
            let mass = f as f64 / scale;
            cost_value += mass * net.cost[e];
            entries.push(PlanEntry {
                row: rows[ri],
                col: cols[cj],
                mass,
            });
        }
    }

    // Duals of the active atoms come from the tree potentials; inactive
    // (zero-mass) atoms get the tightest feasible value.
    let mut dual_u = vec![f64::NAN; mu.len()];
    let mut dual_v = vec![f64::NAN; nu.len()];
    for (ri, &i) in rows.iter().enumerate() {
        dual_u[i] = -sol.potential[ri];
    }
    for (cj, &j) in cols.iter().enumerate() {
        dual_v[j] = sol.potential[m + cj];
    }
    for i in 0..mu.len() {
        if a[i] == 0 {
            let x = &mu.support()[i];
            dual_u[i] = cols
                .iter()
                .map(|&j| cost.eval(x, &nu.support()[j]) - dual_v[j])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for j in 0..nu.len() {
        if b[j] == 0 {
            let y = &nu.support()[j];
            dual_v[j] = (0..mu.len())
                .map(|i| cost.eval(&mu.support()[i], y) - dual_u[i])
                .fold(f64::INFINITY, f64::min);
        }
    }
    // Center the potentials; u + v is unchanged.
    let shift = dual_u.iter().sum::<f64>() / dual_u.len() as f64;
    dual_u.iter_mut().for_each(|u| *u -= shift);
    dual_v.iter_mut().for_each(|v| *v += shift);

    Ok(TransportPlan {
        rows: mu.len(),
        cols: nu.len(),
        entries,
        cost_value,
        dual_u,
        dual_v,
    })
}

/// The bounded-Lipschitz distance, i.e. optimal transport with the truncated
/// cost. One-dimensional inputs use the exact line formulation in
/// [`bl_distance_1d`]; other dimensions use [`solve_ot`].
pub fn bl_distance(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<f64> {
    check_same_dim(mu, nu)?;
    if mu.dim() == 1 {
        bl_distance_1d(mu, nu)
    } else {
        Ok(solve_ot(mu, nu, CostKind::Truncated)?.cost_value)
    }
}

/// Outcome of [`verify_plan`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanReport {
    pub ok: bool,
    pub max_marginal_error: f64,
    pub max_dual_violation: f64,
    pub max_slackness_gap: f64,
    /// `cost_value - (sum mu u + sum nu v)`.
    pub duality_gap: f64,
    pub violations: Vec<String>,
}

/// Checks marginal feasibility, dual feasibility and complementary slackness
/// within [`CERTIFICATE_TOL`].
pub fn verify_plan(
    plan: &TransportPlan,
    mu: &WeightedEmpiricalMeasure,
    nu: &WeightedEmpiricalMeasure,
    cost: CostKind,
) -> PlanReport {
    let mut report = PlanReport::default();
    let tol = CERTIFICATE_TOL;
    if plan.rows != mu.len()
        || plan.cols != nu.len()
        || plan.dual_u.len() != mu.len()
        || plan.dual_v.len() != nu.len()
        || plan.entries.iter().any(|e| e.row >= plan.rows || e.col >= plan.cols)
    {
        report.violations.push("plan shape does not match the measures".into());
        return report;
    }
    for e in &plan.entries {
        if !(e.mass >= 0.0) {
            report
                .violations
                .push(format!("negative mass {} at ({}, {})", e.mass, e.row, e.col));
        }
    }
    for (i, (s, w)) in plan.row_sums().iter().zip(mu.weights()).enumerate() {
        let err = (s - w).abs();
        report.max_marginal_error = report.max_marginal_error.max(err);
        if err > tol {
            report
                .violations
                .push(format!("row {i}: sum {s} differs from weight {w}"));
        }
    }
    for (j, (s, w)) in plan.col_sums().iter().zip(nu.weights()).enumerate() {
        let err = (s - w).abs();
        report.max_marginal_error = report.max_marginal_error.max(err);
        if err > tol {
            report
                .violations
                .push(format!("column {j}: sum {s} differs from weight {w}"));
        }
    }
    let mut dual_bad = 0usize;
    for (i, x) in mu.support().iter().enumerate() {
        for (j, y) in nu.support().iter().enumerate() {
            let excess = plan.dual_u[i] + plan.dual_v[j] - cost.eval(x, y);
            if excess > report.max_dual_violation {
                report.max_dual_violation = excess;
            }
            if !(excess <= tol) {
                dual_bad += 1;
            }
        }
    }
    if dual_bad > 0 {
        report.violations.push(format!(
            "dual feasibility violated on {dual_bad} cells (max excess {})",
            report.max_dual_violation
        ));
    }
    let mut slack_bad = 0usize;
    for e in plan.entries.iter().filter(|e| e.mass > 0.0) {
        let c = cost.eval(&mu.support()[e.row], &nu.support()[e.col]);
        let gap = (c - plan.dual_u[e.row] - plan.dual_v[e.col]).abs();
        report.max_slackness_gap = report.max_slackness_gap.max(gap);
        if !(gap <= tol) {
            slack_bad += 1;
        }
    }
    if slack_bad > 0 {
        report.violations.push(format!(
            "complementary slackness violated on {slack_bad} cells (max gap {})",
            report.max_slackness_gap
        ));
    }
    report.duality_gap = plan.cost_value - plan.dual_objective(mu, nu);
    report.ok = report.violations.is_empty();
    report
}

/// Empirical-measure concentration rate: `N^{-1/2}` for `d = 1`,
/// `N^{-1/2} log(1 + N)` for `d = 2` and `N^{-1/d}` for `d > 2`.
pub fn concentration_rate(n: usize, d: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be >= 1".into(),
        });
    }
    if d < 1 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "must be >= 1".into(),
        });
    }
    let n = n as f64;
    Ok(match d {
        1 => n.powf(-0.5),
        2 => n.powf(-0.5) * (1.0 + n).ln(),
        _ => n.powf(-1.0 / d as f64),
    })
}
