//! Discrete probability measures on R^d.

use std::fmt::Write as _;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;

/// Tolerance on the total mass accepted by [`WeightedEmpiricalMeasure::new`].
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A point of the search space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(coords))
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Self::scalar(x)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `min(|x - y|, 1)` without dimension checks.
#[inline]
pub(crate) fn truncated(x: &[f64], y: &[f64]) -> f64 {
    euclidean(x, y).min(1.0)
}

/// The bounded ground cost `min(|x - y|, 1)`.
pub fn truncated_cost(x: &Point, y: &Point) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(truncated(x, y))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `sum_i w_i delta_{x_i}` with nonnegative weights summing to one.
///
/// Atoms are indexed by construction order and are never merged, even when
/// two support points coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEmpiricalMeasure {
    support: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedEmpiricalMeasure {
    /// Validates and renormalizes. The weights must already sum to one within
    /// [`WEIGHT_SUM_TOL`].
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total = validate_weights(&support, &weights)?;
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::normalized(support, weights, total))
    }

    /// Accepts any nonnegative weights with positive total and normalizes them.
    pub fn from_unnormalized(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total = validate_weights(&support, &weights)?;
        Ok(Self::normalized(support, weights, total))
    }

    /// Divides by `total` unless the weights already sum to one up to
    /// summation rounding, so stored measures reload bit for bit.
    fn normalized(support: Vec<Point>, mut weights: Vec<f64>, total: f64) -> Self {
        if (total - 1.0).abs() > f64::EPSILON * weights.len() as f64 {
            for w in &mut weights {
                *w /= total;
            }
        }
        Self { support, weights }
    }

    /// Equal weights `1/N` on the given points.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dirac(point: Point) -> Self {
        Self {
            support: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (x, w) in self.atoms() {
            for (mk, xk) in m.iter_mut().zip(x.iter()) {
                *mk += w * xk;
            }
        }
        m
    }

    /// Serializes to the text format: one line per atom,
    /// `weight coord_1 ... coord_d`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (x, w) in self.atoms() {
            write!(out, "{w:e}").unwrap();
            for c in x.iter() {
                write!(out, " {c:e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format. Blank lines and lines starting with `#` are
    /// ignored. Weights are renormalized when their sum is within 1e-6 of one.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace().map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    reason: format!("{tok:?}: {e}"),
                })
            });
            let w = fields.next().unwrap()?;
            let coords = fields.collect::<Result<Vec<f64>>>()?;
            if coords.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: "atom has no coordinates".into(),
                });
            }
            weights.push(w);
            support.push(Point::new(coords).map_err(|e| Error::Parse {
                line: lineno + 1,
                reason: e.to_string(),
            })?);
        }
        let total = validate_weights(&support, &weights)?;
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::normalized(support, weights, total))
    }
}

fn validate_weights(support: &[Point], weights: &[f64]) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::Empty("measure support"));
    }
    if support.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} atoms but {} weights",
            support.len(),
            weights.len()
        )));
    }
    let d = support[0].dim();
    for p in support {
        check_dim(d, p.dim())?;
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or non-finite")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidWeights("total mass is zero".into()));
    }
    Ok(total)
}

/// The empirical measure `(1/N) sum_i delta_{x_i}`. Duplicates stay separate.
pub fn uniform_empirical(points: Vec<Point>) -> Result<WeightedEmpiricalMeasure> {
    WeightedEmpiricalMeasure::uniform(points)
}

/// `M_q = sum_i w_i |x_i|^q` and its `q`-th root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub q: f64,
    pub value: f64,
    pub root: f64,
}

pub fn moment_q(mu: &WeightedEmpiricalMeasure, q: f64) -> Result<MomentReport> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("moment order must be >= 1, got {q}"),
        });
    }
    let value: f64 = mu.atoms().map(|(x, w)| w * x.norm().powf(q)).sum();
    Ok(MomentReport {
        q,
        value,
        root: value.powf(1.0 / q),
    })
}

/// `F mu / <F, mu>`: same support, weights proportional to `w_i F(x_i)`.
pub fn reweight_by_fitness(
    mu: &WeightedEmpiricalMeasure,
    fitness: &FitnessSpec,
) -> Result<WeightedEmpiricalMeasure> {
    let mut weights = Vec::with_capacity(mu.len());
    for (i, (x, w)) in mu.atoms().enumerate() {
        let f = fitness.eval(x);
        if !(f > 0.0) {
            return Err(Error::NonPositiveFitness { index: i, value: f });
        }
        weights.push(w * f);
    }
    let total: f64 = weights.iter().sum();
    Ok(WeightedEmpiricalMeasure::normalized(
        mu.support.clone(),
        weights,
        total,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::scalar(x)).collect()
    }

    #[test]
    fn uniform_two_atoms() {
        let mu = uniform_empirical(pts(&[0.0, 2.0])).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.5]);
        assert_eq!(mu.support()[1].coords(), &[2.0]);
    }

    #[test]
    fn uniform_single_atom() {
        let mu = uniform_empirical(vec![Point::new(vec![1.0, 1.0]).unwrap()]).unwrap();
        assert_eq!(mu.weights(), &[1.0]);
    }

    #[test]
    fn duplicates_are_not_merged() {
        let mu = uniform_empirical(pts(&[1.0, 1.0, 3.0])).unwrap();
        assert_eq!(mu.len(), 3);
        for w in mu.weights() {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_errors() {
        assert!(matches!(uniform_empirical(vec![]), Err(Error::Empty(_))));
        let mixed = vec![Point::scalar(0.0), Point::new(vec![0.0, 1.0]).unwrap()];
        assert!(matches!(
            uniform_empirical(mixed),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn truncated_cost_examples() {
        let c = |a: &[f64], b: &[f64]| {
            truncated_cost(&Point::new(a.to_vec()).unwrap(), &Point::new(b.to_vec()).unwrap())
                .unwrap()
        };
        assert_abs_diff_eq!(c(&[0.0], &[0.4]), 0.4);
        assert_eq!(c(&[0.0], &[3.0]), 1.0);
        assert_eq!(c(&[0.0, 0.0], &[0.6, 0.8]), 1.0);
        assert!(truncated_cost(&Point::scalar(0.0), &Point::zeros(2)).is_err());
    }

    #[test]
    fn moment_examples() {
        let delta0 = WeightedEmpiricalMeasure::dirac(Point::scalar(0.0));
        assert_eq!(moment_q(&delta0, 2.0).unwrap().value, 0.0);

        let sym = uniform_empirical(pts(&[-1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(moment_q(&sym, 4.0).unwrap().value, 1.0);

        let mu = WeightedEmpiricalMeasure::new(pts(&[0.0, 2.0]), vec![0.25, 0.75]).unwrap();
        let m = moment_q(&mu, 2.0).unwrap();
        assert_abs_diff_eq!(m.value, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.root, 3.0f64.sqrt(), epsilon = 1e-14);

        assert!(moment_q(&mu, 0.5).is_err());
    }

    #[test]
    fn reweight_examples() {
        let mu = uniform_empirical(pts(&[-1.0, 4.0])).unwrap();
        let same = reweight_by_fitness(&mu, &FitnessSpec::constant(2.5).unwrap()).unwrap();
        assert_eq!(same.weights(), mu.weights());

        // A fitness that is 1 at -1 and 3 at 4 (gaussian bump centred at 4 would
        // not hit those values exactly, so use a bump with tiny width).
        let spec = FitnessSpec::gaussian_bump(1.0, 3.0, 1e-3, vec![4.0]).unwrap();
        let rw = reweight_by_fitness(&mu, &spec).unwrap();
        assert_abs_diff_eq!(rw.weights()[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(rw.weights()[1], 0.75, epsilon = 1e-12);

        let single = WeightedEmpiricalMeasure::dirac(Point::scalar(7.0));
        assert_eq!(reweight_by_fitness(&single, &spec).unwrap().weights(), &[1.0]);
    }

    #[test]
    fn text_round_trip() {
        let mu = WeightedEmpiricalMeasure::new(
            vec![Point::new(vec![0.1, -3.0]).unwrap(), Point::new(vec![1e-17, 2.5]).unwrap()],
            vec![0.3, 0.7],
        )
        .unwrap();
        let back = WeightedEmpiricalMeasure::from_text(&mu.to_text()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn text_errors() {
        assert!(WeightedEmpiricalMeasure::from_text("0.5 1\n0.2 3\n").is_err());
        assert!(WeightedEmpiricalMeasure::from_text("1.0 abc\n").is_err());
        assert!(WeightedEmpiricalMeasure::from_text("1.0\n").is_err());
        assert!(WeightedEmpiricalMeasure::from_text("# only comment\n").is_err());
    }
}
