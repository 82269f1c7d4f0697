//! Cell-mass representation of one-dimensional densities and the explicit
//! Euler step `f_{n+1} = (1 - tau) f_n + tau Q+(f_n, f_n)`.
//!
//! Masses sit at cell midpoints. The crossover law is assembled by
//! Gauss-Legendre quadrature in `gamma` over all pairs of occupied cells.
//! Because midpoints are equally spaced, the offspring of cells `i` and `j`
//! lands at fractional index `i + gamma (j - i)` and is split linearly
//! between the two neighbouring cells, which preserves the mean exactly.
//! Mutation is a convolution with the sampled Gaussian kernel, truncated at
//! eight standard deviations and normalized.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::ga::InitialLaw;
use crate::measures::{Point, WeightedEmpiricalMeasure};

/// Largest probability mass a single step may push off the grid.
pub const MASS_TOL: f64 = 1e-6;

/// Number of Gauss-Legendre nodes in `gamma`.
pub const GAMMA_NODES: usize = 16;

/// Reweighted cell masses below this are not propagated; their mass is
/// booked as lost.
const PRUNE_MASS: f64 = 1e-18;

/// Kernel half-width in standard deviations.
const KERNEL_SIGMAS: f64 = 8.0;

/// Pairs of occupied cells are processed in chunks of this many rows; the
/// chunk partial sums are added in order, so results do not depend on the
/// thread count.
const ROW_CHUNK: usize = 16;

/// Nodes and weights on `[0, 1]`.
pub fn gamma_quadrature(nodes: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(nodes.max(1)).unwrap();
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity1D {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    /// Mass pushed off the grid or pruned since construction.
    lost: f64,
}

impl GridDensity1D {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "grid bounds",
                reason: format!("need finite lo < hi, got [{lo}, {hi}]"),
            });
        }
        if values.is_empty() {
            return Err(Error::Empty("grid cells"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "grid values",
                reason: format!("cell mass {v} is not a finite nonnegative number"),
            });
        }
        Ok(Self {
            lo,
            hi,
            values,
            lost: 0.0,
        })
    }

    pub fn zeros(lo: f64, hi: f64, m: usize) -> Result<Self> {
        Self::new(lo, hi, vec![0.0; m])
    }

    /// Cell masses of `law` on `m` cells of `[lo, hi]`. Mass outside the
    /// interval is recorded as lost.
    pub fn from_law(law: &InitialLaw, lo: f64, hi: f64, m: usize) -> Result<Self> {
        if law.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: law.dim(),
            });
        }
        let mut g = Self::zeros(lo, hi, m)?;
        let h = g.width();
        match law {
            InitialLaw::Normal { mean, std } => {
                if *std == 0.0 {
                    g.deposit(mean[0], 1.0);
                } else {
                    let nd = Normal::new(mean[0], *std).map_err(|e| Error::InvalidParameter {
                        name: "initial.std",
                        reason: e.to_string(),
                    })?;
                    let mut prev = nd.cdf(lo);
                    for k in 0..m {
                        let next = nd.cdf(lo + (k + 1) as f64 * h);
                        g.values[k] = next - prev;
                        prev = next;
                    }
                }
            }
            InitialLaw::Dirac(p) => g.deposit(p[0], 1.0),
            InitialLaw::Uniform { lo: a, hi: b, .. } => {
                let len = b - a;
                for k in 0..m {
                    let (c0, c1) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
                    let overlap = (c1.min(*b) - c0.max(*a)).max(0.0);
                    g.values[k] = overlap / len;
                }
            }
            InitialLaw::Discrete(mu) => {
                for (x, w) in mu.atoms() {
                    g.deposit(x[0], w);
                }
            }
        }
        g.lost = (1.0 - g.mass()).max(0.0);
        Ok(g)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.values.len() as f64
    }

    #[inline]
    pub fn midpoint(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn lost_mass(&self) -> f64 {
        self.lost
    }

    /// Splits `mass` at `x` linearly between the two nearest midpoints.
    /// Points beyond the outer midpoints but inside the grid go to the edge
    /// cell; points outside the grid are lost.
    pub fn deposit(&mut self, x: f64, mass: f64) {
        if !(x >= self.lo && x <= self.hi) {
            self.lost += mass;
            return;
        }
        let u = ((x - self.lo) / self.width() - 0.5).clamp(0.0, (self.m() - 1) as f64);
        let k = u.floor() as usize;
        let fr = u - k as f64;
        self.values[k] += mass * (1.0 - fr);
        if fr > 0.0 {
            self.values[k + 1] += mass * fr;
        }
    }

    fn normalized_stats(&self) -> (f64, f64) {
        let total = self.mass();
        let mean = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.midpoint(k))
            .sum::<f64>()
            / total;
        (total, mean)
    }

    /// Mean of the normalized cell masses.
    pub fn mean(&self) -> f64 {
        self.normalized_stats().1
    }

    /// Variance of the normalized cell masses.
    pub fn variance(&self) -> f64 {
        let (total, mean) = self.normalized_stats();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * (self.midpoint(k) - mean).powi(2))
            .sum::<f64>()
            / total
    }

    /// `sum_k v_k |x_k|^q / sum_k v_k`.
    pub fn moment(&self, q: f64) -> f64 {
        let total = self.mass();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.midpoint(k).abs().powf(q))
            .sum::<f64>()
            / total
    }

    /// The normalized cell masses as a measure on the midpoints. Cells with
    /// mass not above `min_mass` are left out.
    pub fn to_measure(&self, min_mass: f64) -> Result<WeightedEmpiricalMeasure> {
        let (support, weights): (Vec<Point>, Vec<f64>) = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > min_mass)
            .map(|(k, &v)| (Point::scalar(self.midpoint(k)), v))
            .unzip();
        if support.is_empty() {
            return Err(Error::Empty("grid density has no cell above the mass threshold"));
        }
        WeightedEmpiricalMeasure::from_unnormalized(support, weights)
    }

    /// Distribution function of the normalized density, with each cell's
    /// mass spread uniformly over the cell.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let total = self.mass();
        let u = (x - self.lo) / self.width();
        let k = (u.floor() as usize).min(self.m() - 1);
        let below: f64 = self.values[..k].iter().sum();
        (below + self.values[k] * (u - k as f64)) / total
    }

    /// Kolmogorov-Smirnov distance between [`GridDensity1D::cdf`] and the
    /// empirical distribution of `samples`.
    pub fn ks_to_samples(&self, samples: &[f64]) -> f64 {
        let mut xs = samples.to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let total = self.mass();
        let h = self.width();
        // Walk the sorted samples and the cells together.
        let mut k = 0usize;
        let mut below = 0.0;
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = if x <= self.lo {
                0.0
            } else if x >= self.hi {
                1.0
            } else {
                let u = (x - self.lo) / h;
                let cell = (u.floor() as usize).min(self.m() - 1);
                while k < cell {
                    below += self.values[k];
                    k += 1;
                }
                (below + self.values[cell] * (u - cell as f64)) / total
            };
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        d
    }

    /// CSV with header `cell_midpoint,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell_midpoint,mass\n");
        for (k, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.midpoint(k), v));
        }
        s
    }
}

/// Grid bounds covering the bulk of `law`, widened by `12 sigma sqrt(n_max)`
/// on each side. The bulk of a normal law is its mean plus or minus six
/// standard deviations.
pub fn grid_bounds(law: &InitialLaw, sigma: f64, n_max: usize) -> Result<(f64, f64)> {
    if law.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: law.dim(),
        });
    }
    let (a, b) = match law {
        InitialLaw::Normal { mean, std } => (mean[0] - 6.0 * std, mean[0] + 6.0 * std),
        InitialLaw::Dirac(p) => (p[0], p[0]),
        InitialLaw::Uniform { lo, hi, .. } => (*lo, *hi),
        InitialLaw::Discrete(mu) => mu.support().iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(a, b), p| (a.min(p[0]), b.max(p[0])),
        ),
    };
    let pad = (12.0 * sigma * (n_max as f64).sqrt()).max(0.5);
    Ok((a - pad, b + pad))
}

fn check_resolution(f: &GridDensity1D, sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be finite and >= 0, got {sigma}"),
        });
    }
    if sigma > 0.0 && f.width() > sigma / 2.0 {
        return Err(Error::GridTooCoarse {
            width: f.width(),
            limit: sigma / 2.0,
        });
    }
    Ok(())
}

/// The offspring law `Q+(f, f)`, scaled to the mass of `f`.
pub fn gain_apply_1d(f: &GridDensity1D, fitness: &FitnessSpec, sigma: f64) -> Result<GridDensity1D> {
    gain_with_nodes(f, fitness, sigma, &gamma_quadrature(GAMMA_NODES))
}

pub(crate) fn gain_with_nodes(
    f: &GridDensity1D,
    fitness: &FitnessSpec,
    sigma: f64,
    nodes: &[(f64, f64)],
) -> Result<GridDensity1D> {
    check_resolution(f, sigma)?;
    let m = f.m();
    let input_mass = f.mass();
    if !(input_mass > 0.0) {
        return Err(Error::Empty("grid density has zero mass"));
    }

    let mut p = Vec::with_capacity(m);
    for k in 0..m {
        let x = f.midpoint(k);
        let fx = fitness.eval(&[x]);
        if !(fx > 0.0) {
            return Err(Error::NonPositiveFitness { index: k, value: fx });
        }
        p.push(f.values[k] * fx);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let active: Vec<usize> = (0..m).filter(|&k| p[k] >= PRUNE_MASS).collect();
    let pruned: f64 = (0..m).filter(|&k| p[k] > 0.0 && p[k] < PRUNE_MASS).map(|k| p[k]).sum();

    // The rule is symmetric about 1/2 and the pair (i, j, gamma) lands where
    // (j, i, 1 - gamma) does, so mirrored nodes are merged.
    let folded = fold_nodes(nodes);
    let partials: Vec<Vec<f64>> = active
        .par_chunks(ROW_CHUNK)
        .map(|rows| {
            let mut acc = vec![0.0; m];
            for &i in rows {
                let pi = p[i];
                for &(g, w) in &folded {
                    let pw = pi * w;
                    for &j in &active {
                        let mass = pw * p[j];
                        let u = i as f64 + g * (j as f64 - i as f64);
                        let k = (u.floor() as usize).min(m - 1);
                        let fr = u - k as f64;
                        acc[k] += mass * (1.0 - fr);
                        if fr > 0.0 {
                            acc[k + 1] += mass * fr;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut crossed = vec![0.0; m];
    for part in &partials {
        for (c, v) in crossed.iter_mut().zip(part) {
            *c += v;
        }
    }

    let (out, off_grid) = if sigma > 0.0 {
        convolve_gaussian(&crossed, f.width(), sigma)
    } else {
        (crossed, 0.0)
    };
    let step_loss = pruned + off_grid;
    if step_loss > MASS_TOL {
        return Err(Error::MassLoss {
            lost: step_loss,
            tol: MASS_TOL,
        });
    }
    Ok(GridDensity1D {
        lo: f.lo,
        hi: f.hi,
        values: out.into_iter().map(|v| v * input_mass).collect(),
        lost: f.lost + step_loss * input_mass,
    })
}

fn fold_nodes(nodes: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = nodes.len();
    let mut sorted = nodes.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let symmetric = (0..n).all(|k| {
        let (a, b) = (sorted[k], sorted[n - 1 - k]);
        (a.0 + b.0 - 1.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14
    });
    if !symmetric {
        return sorted;
    }
    let mut out: Vec<(f64, f64)> = (0..n / 2)
        .map(|k| (sorted[k].0, sorted[k].1 + sorted[n - 1 - k].1))
        .collect();
    if n % 2 == 1 {
        out.push(sorted[n / 2]);
    }
    out
}

/// Convolution with the normalized sampled Gaussian kernel; returns the
/// result and the mass that fell outside the grid.
fn convolve_gaussian(values: &[f64], h: f64, sigma: f64) -> (Vec<f64>, f64) {
    let m = values.len();
    let half = (KERNEL_SIGMAS * sigma / h).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|d| {
            let z = (d as f64 - half as f64) * h / sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    let ksum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= ksum);

    let mut out = vec![0.0; m];
    let mut lost = 0.0;
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (d, &kd) in kernel.iter().enumerate() {
            let target = k as isize + d as isize - half as isize;
            if target < 0 || target >= m as isize {
                lost += v * kd;
            } else {
                out[target as usize] += v * kd;
            }
        }
    }
    (out, lost)
}

/// `(1 - tau) f + tau Q+(f, f)`.
pub fn euler_step_grid(
    f: &GridDensity1D,
    tau: f64,
    fitness: &FitnessSpec,
    sigma: f64,
) -> Result<GridDensity1D> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must lie in (0, 1], got {tau}"),
        });
    }
    let g = gain_apply_1d(f, fitness, sigma)?;
    let values = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (1.0 - tau) * a + tau * b)
        .collect();
    Ok(GridDensity1D {
        lo: f.lo,
        hi: f.hi,
        values,
        lost: f.lost + tau * (g.lost - f.lost),
    })
}

/// `f_0, ..., f_{n_max}` under [`euler_step_grid`].
pub fn grid_trajectory(
    f0: GridDensity1D,
    tau: f64,
    n_max: usize,
    fitness: &FitnessSpec,
    sigma: f64,
) -> Result<Vec<GridDensity1D>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(f0);
    for n in 0..n_max {
        let next = euler_step_grid(&out[n], tau, fitness, sigma)?;
        out.push(next);
    }
    Ok(out)
}
