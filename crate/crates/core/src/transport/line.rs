//! Distances between measures on the real line.

use crate::error::{Error, Result};
use crate::measures::WeightedEmpiricalMeasure;

use super::simplex::{self, FlowNetwork};
use super::MASS_SCALE;

fn require_line(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<()> {
    for m in [mu, nu] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    Ok(())
}

/// Signed mass `mu - nu` on the merged, sorted support.
fn signed_masses(
    mu: &WeightedEmpiricalMeasure,
    nu: &WeightedEmpiricalMeasure,
    a: &[i64],
    b: &[i64],
) -> Vec<(f64, i64)> {
    let mut atoms: Vec<(f64, i64)> = Vec::with_capacity(mu.len() + nu.len());
    atoms.extend(mu.support().iter().zip(a).map(|(p, &m)| (p[0], m)));
    atoms.extend(nu.support().iter().zip(b).map(|(p, &m)| (p[0], -m)));
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, i64)> = Vec::with_capacity(atoms.len());
    for (x, m) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => merged.push((x, m)),
        }
    }
    merged
}

/// Exact `W1` with cost `min(|x - y|, 1)` for `d = 1`.
///
/// On the line this cost is the shortest-path metric of the graph whose
/// consecutive support points are joined by arcs of length equal to their
/// gap, plus a hub joined to every point by arcs of length `1/2`. The
/// transport problem therefore reduces to a min-cost flow on `O(n)` arcs.
pub fn bl_distance_1d(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<f64> {
    require_line(mu, nu)?;
    let a = simplex::integer_masses(mu.weights(), MASS_SCALE);
    let b = simplex::integer_masses(nu.weights(), MASS_SCALE);
    let merged = signed_masses(mu, nu, &a, &b);

    // Points with zero net mass can be skipped: a gap across them is the sum
    // of the two adjacent gaps.
    let nodes: Vec<(f64, i64)> = merged.into_iter().filter(|&(_, m)| m != 0).collect();
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let k = nodes.len();
    let hub = k;
    let mut supply: Vec<i64> = nodes.iter().map(|&(_, m)| m).collect();
    supply.push(0);
    let mut net = FlowNetwork::with_nodes(supply);
    for i in 0..k {
        if i + 1 < k {
            let gap = nodes[i + 1].0 - nodes[i].0;
            if gap < 1.0 {
                net.add_arc(i, i + 1, gap);
                net.add_arc(i + 1, i, gap);
            }
        }
        net.add_arc(i, hub, 0.5);
        net.add_arc(hub, i, 0.5);
    }
    let sol = simplex::solve(&net)?;
    let total: f64 = sol
        .flow
        .iter()
        .zip(&net.cost)
        .filter(|(f, _)| **f > 0)
        .map(|(&f, &c)| f as f64 * c)
        .sum();
    Ok(total / MASS_SCALE as f64)
}

/// Exact `W1` with Euclidean cost for `d = 1`, as the integral of the
/// absolute difference of the two distribution functions.
pub fn w1_euclidean_1d(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<f64> {
    require_line(mu, nu)?;
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    atoms.extend(mu.support().iter().zip(mu.weights()).map(|(p, &w)| (p[0], w)));
    atoms.extend(nu.support().iter().zip(nu.weights()).map(|(p, &w)| (p[0], -w)));
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cdf_diff = 0.0;
    let mut total = 0.0;
    for w in atoms.windows(2) {
        cdf_diff += w[0].1;
        total += cdf_diff.abs() * (w[1].0 - w[0].0);
    }
    Ok(total)
}
