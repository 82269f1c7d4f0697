//! Optimal coupling between a reference measure and a weighted population,
//! realized as a deterministic function of a single uniform variable.
//!
//! Given a reference `f` and a population `(x, w)`, [`build_sampler`] solves
//! the transport problem between `f` and `sum_i w_i delta_{x_i}`. Column `i`
//! of the plan, divided by its mass, is a distribution `G_i` on the
//! reference atoms. For `alpha ~ Unif[0, N)` the map
//!
//! ```text
//! alpha -> (j, beta) = (j(w, alpha), (alpha - N S_{j-1}) / (N w_j))
//!       -> X* = G_j^{-1}(beta)
//! ```
//!
//! yields a pair `(X*, x_j)` whose joint law is the optimal plan.

use crate::error::{Error, Result};
use crate::ga::{uniform_below, SelectionTable};
use crate::measures::{Point, WeightedEmpiricalMeasure};
use crate::rng::{Domain, Slot, StreamKey};
use crate::transport::{solve_ot, verify_plan, CostKind, PlanReport, TransportPlan};

/// Selected index together with the position inside its selection interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRescale {
    /// Zero-based index `j(w, alpha)`.
    pub j: usize,
    pub beta: f64,
}

pub fn beta_rescale(weights: &[f64], alpha: f64) -> Result<BetaRescale> {
    let (j, beta) = SelectionTable::new(weights)?.beta(alpha)?;
    Ok(BetaRescale { j, beta })
}

/// Anything that maps `alpha in [0, N)` to a parent position.
pub trait ParentSampler: Sync {
    /// Number `N` of selection slots.
    fn slots(&self) -> usize;

    fn parent(&self, alpha: f64) -> &Point;
}

/// Discrete conditional law `G_i` as an inverse-CDF table over reference
/// atoms, kept in increasing atom order.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub atoms: Vec<usize>,
    /// Cumulative probabilities; the last entry is exactly 1.
    pub cdf: Vec<f64>,
}

impl Conditional {
    fn from_column(mut cells: Vec<(usize, f64)>) -> Self {
        cells.sort_by_key(|c| c.0);
        let total: f64 = cells.iter().map(|c| c.1).sum();
        let mut acc = 0.0;
        let mut atoms = Vec::with_capacity(cells.len());
        let mut cdf = Vec::with_capacity(cells.len());
        for (k, m) in cells {
            acc += m;
            atoms.push(k);
            cdf.push(acc / total);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { atoms, cdf }
    }

    /// Reference atom selected by `beta in [0, 1)`.
    #[inline]
    pub fn invert(&self, beta: f64) -> usize {
        let k = self.cdf.partition_point(|&c| c <= beta).min(self.atoms.len() - 1);
        self.atoms[k]
    }

    pub fn probability(&self, atom: usize) -> f64 {
        match self.atoms.binary_search(&atom) {
            Ok(0) => self.cdf[0],
            Ok(k) => self.cdf[k] - self.cdf[k - 1],
            Err(_) => 0.0,
        }
    }
}

/// The coupling map for one reference measure and one population.
#[derive(Debug, Clone)]
pub struct CouplingSampler {
    reference: WeightedEmpiricalMeasure,
    positions: Vec<Point>,
    table: SelectionTable,
    plan: TransportPlan,
    certificate: PlanReport,
    cost: CostKind,
    conditionals: Vec<Conditional>,
}

/// Builds the sampler from a certified optimal plan between `f_ref` and
/// `sum_i w_i delta_{x_i}`.
pub fn build_sampler(
    f_ref: &WeightedEmpiricalMeasure,
    positions: &[Point],
    weights: &[f64],
    cost: CostKind,
) -> Result<CouplingSampler> {
    if positions.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: positions.len(),
            found: weights.len(),
        });
    }
    let table = SelectionTable::new(weights)?;
    let population = WeightedEmpiricalMeasure::new(positions.to_vec(), weights.to_vec())?;
    let plan = solve_ot(f_ref, &population, cost)?;
    let certificate = verify_plan(&plan, f_ref, &population, cost);
    if !certificate.ok {
        return Err(Error::Certificate(certificate.violations.join("; ")));
    }
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); positions.len()];
    for e in &plan.entries {
        columns[e.col].push((e.row, e.mass));
    }
    let conditionals = columns
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_empty() {
                Err(Error::Certificate(format!("population atom {i} receives no mass")))
            } else {
                Ok(Conditional::from_column(c))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingSampler {
        reference: f_ref.clone(),
        positions: positions.to_vec(),
        table,
        plan,
        certificate,
        cost,
        conditionals,
    })
}

impl CouplingSampler {
    pub fn reference(&self) -> &WeightedEmpiricalMeasure {
        &self.reference
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        self.table.weights()
    }

    pub fn plan(&self) -> &TransportPlan {
        &self.plan
    }

    pub fn certificate(&self) -> &PlanReport {
        &self.certificate
    }

    pub fn cost(&self) -> CostKind {
        self.cost
    }

    pub fn conditionals(&self) -> &[Conditional] {
        &self.conditionals
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Reference atom index and partner index for `alpha`, without range
    /// checking.
    #[inline]
    pub(crate) fn locate(&self, alpha: f64) -> (usize, usize, f64) {
        let (j, beta) = self.table.beta_unchecked(alpha);
        (self.conditionals[j].invert(beta), j, beta)
    }

    /// `(X*, j(w, alpha))`.
    pub fn sample_xstar(&self, alpha: f64) -> Result<(&Point, usize)> {
        self.table.beta(alpha)?;
        let (k, j, _) = self.locate(alpha);
        Ok((&self.reference.support()[k], j))
    }

    /// `sum_i w_i G_i` as a weight vector over the reference atoms.
    pub fn mixture(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.reference.len()];
        for (g, w) in self.conditionals.iter().zip(self.table.weights()) {
            let mut prev = 0.0;
            for (&k, &c) in g.atoms.iter().zip(&g.cdf) {
                out[k] += w * (c - prev);
                prev = c;
            }
        }
        out
    }
}

impl ParentSampler for CouplingSampler {
    fn slots(&self) -> usize {
        self.len()
    }

    fn parent(&self, alpha: f64) -> &Point {
        &self.reference.support()[self.locate(alpha).0]
    }
}

/// Draws parents directly from a weighted measure: `alpha in [0, slots)` is
/// mapped to `alpha * M / slots` and then through the index map of the
/// measure's `M` weights.
#[derive(Debug, Clone)]
pub struct WeightedAtomSampler {
    support: Vec<Point>,
    table: SelectionTable,
    slots: usize,
}

impl WeightedAtomSampler {
    /// Atoms with zero weight are dropped.
    pub fn new(measure: &WeightedEmpiricalMeasure, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::InvalidParameter {
                name: "slots",
                reason: "must be >= 1".into(),
            });
        }
        let (support, weights): (Vec<Point>, Vec<f64>) = measure
            .atoms()
            .filter(|(_, w)| *w > 0.0)
            .map(|(x, w)| (x.clone(), w))
            .unzip();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            support,
            table: SelectionTable::new(&weights)?,
            slots,
        })
    }
}

impl ParentSampler for WeightedAtomSampler {
    fn slots(&self) -> usize {
        self.slots
    }

    fn parent(&self, alpha: f64) -> &Point {
        let m = self.support.len() as f64;
        let a = (alpha * m / self.slots as f64).min(m.next_down());
        &self.support[self.table.index_unchecked(a)]
    }
}

/// Monte Carlo estimate of `E c(X*, x_{j(w, alpha)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCheck {
    pub mean: f64,
    pub stderr: f64,
    pub plan_cost: f64,
    pub draws: usize,
}

impl CostCheck {
    /// Distance from the plan cost in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.mean - self.plan_cost).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

pub fn coupling_cost_check(sampler: &CouplingSampler, n_draws: usize, seed: u64) -> Result<CostCheck> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter {
            name: "n_draws",
            reason: "must be >= 1".into(),
        });
    }
    let mut rng = StreamKey::new(seed, Domain::Coupling, 0).rng(0, 0, Slot::Misc);
    let n = sampler.len();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_draws {
        let (k, j, _) = sampler.locate(uniform_below(&mut rng, n));
        let c = sampler
            .cost
            .eval(&sampler.reference.support()[k], &sampler.positions[j]);
        sum += c;
        sum_sq += c * c;
    }
    let nd = n_draws as f64;
    let mean = sum / nd;
    let var = if n_draws > 1 {
        ((sum_sq - nd * mean * mean) / (nd - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(CostCheck {
        mean,
        stderr: (var / nd).sqrt(),
        plan_cost: sampler.plan.cost_value,
        draws: n_draws,
    })
}

/// Empirical joint law of `(reference atom, partner)` over `n_draws`
/// uniform draws of `alpha`, compared to the plan in total variation.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCheck {
    /// Sparse cells `(reference atom, partner, frequency)`.
    pub empirical: Vec<(usize, usize, f64)>,
    pub tv: f64,
    /// `(partner, KS statistic of beta against Unif[0, 1), sample size)` for
    /// every partner drawn at least once.
    pub beta_ks: Vec<(usize, f64, usize)>,
}

pub fn joint_check(sampler: &CouplingSampler, n_draws: usize, seed: u64) -> Result<JointCheck> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter {
            name: "n_draws",
            reason: "must be >= 1".into(),
        });
    }
    let mut rng = StreamKey::new(seed, Domain::Coupling, 1).rng(0, 0, Slot::Misc);
    let n = sampler.len();
    let mut counts: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    let mut betas: Vec<Vec<f64>> = vec![Vec::new(); n];
    for _ in 0..n_draws {
        let alpha = uniform_below(&mut rng, n);
        let (k, j, beta) = sampler.locate(alpha);
        *counts.entry((k, j)).or_default() += 1;
        betas[j].push(beta);
    }
    let nd = n_draws as f64;
    let empirical: Vec<(usize, usize, f64)> =
        counts.iter().map(|(&(k, j), &c)| (k, j, c as f64 / nd)).collect();
    let mut plan_cells: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for e in &sampler.plan.entries {
        *plan_cells.entry((e.row, e.col)).or_default() += e.mass;
    }
    let mut diff = 0.0;
    for (key, p) in &plan_cells {
        let q = counts.get(key).map_or(0.0, |&c| c as f64 / nd);
        diff += (p - q).abs();
    }
    for (key, &c) in &counts {
        if !plan_cells.contains_key(key) {
            diff += c as f64 / nd;
        }
    }
    let beta_ks = betas
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(j, b)| {
            let (d, len) = ks_uniform(b);
            (j, d, len)
        })
        .collect();
    Ok(JointCheck {
        empirical,
        tv: 0.5 * diff,
        beta_ks,
    })
}

/// KS statistic of a sample against `Unif[0, 1)`, with the sample size.
fn ks_uniform(mut xs: Vec<f64>) -> (f64, usize) {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - x).max(x - i as f64 / n);
    }
    (d, xs.len())
}

/// `count` reproducible draws of `alpha ~ Unif[0, n)`.
pub fn uniform_alphas(seed: u64, n: usize, count: usize) -> Vec<f64> {
    let mut rng = StreamKey::new(seed, Domain::Coupling, 2).rng(0, 0, Slot::Misc);
    (0..count).map(|_| uniform_below(&mut rng, n)).collect::<Vec<_>>()
}
