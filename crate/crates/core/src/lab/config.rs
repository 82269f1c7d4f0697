//! Experiment configuration files.
//!
//! Configs are TOML. Top-level keys: `seed`, `dim`, `sigma`, `tau`, `T`,
//! `n_list`, `replicas` (default 10), `q` (default 3). Tables: `[fitness]`
//! (required), `[initial]`, `[reference]`, `[rate_tau]`, `[trace]`. See the
//! README for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitness::{FitnessConfig, FitnessSpec};
use crate::ga::{InitialLaw, SimParams};
use crate::measures::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Independent `N(mean_k, std^2)` coordinates. A one-element `mean` is
    /// broadcast.
    Normal {
        #[serde(default = "zero_vec")]
        mean: Vec<f64>,
        #[serde(default = "one")]
        std: f64,
    },
    Dirac {
        #[serde(default = "zero_vec")]
        point: Vec<f64>,
    },
    /// Independent `Unif[lo, hi)` coordinates.
    Uniform { lo: f64, hi: f64 },
}

fn zero_vec() -> Vec<f64> {
    vec![0.0]
}

fn one() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Normal {
            mean: zero_vec(),
            std: 1.0,
        }
    }
}

fn broadcast(v: &[f64], dim: usize, field: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(Error::Config(format!(
            "{field} has {n} entries but dim = {dim}"
        ))),
    }
}

impl InitialConfig {
    pub fn to_law(&self, dim: usize) -> Result<InitialLaw> {
        match self {
            InitialConfig::Normal { mean, std } => {
                if !(*std >= 0.0 && std.is_finite()) {
                    return Err(Error::Config(format!(
                        "initial.std must be finite and >= 0, got {std}"
                    )));
                }
                Ok(InitialLaw::Normal {
                    mean: broadcast(mean, dim, "initial.mean")?,
                    std: *std,
                })
            }
            InitialConfig::Dirac { point } => Ok(InitialLaw::Dirac(Point::new(broadcast(
                point,
                dim,
                "initial.point",
            )?)?)),
            InitialConfig::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Config(format!(
                        "initial.lo must be below initial.hi, got [{lo}, {hi})"
                    )));
                }
                Ok(InitialLaw::Uniform {
                    lo: *lo,
                    hi: *hi,
                    dim,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Grid,
    Ensemble,
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(ReferenceKind::Grid),
            "ensemble" => Ok(ReferenceKind::Ensemble),
            other => Err(Error::Config(format!("unknown reference kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Defaults to `grid` in dimension one and `ensemble` otherwise.
    #[serde(default)]
    pub kind: Option<ReferenceKind>,
    /// Grid cells.
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Ensemble size as a multiple of the largest population size.
    #[serde(default = "default_factor")]
    pub ensemble_factor: usize,
    /// Explicit ensemble size; overrides `ensemble_factor`.
    #[serde(default)]
    pub ensemble_size: Option<usize>,
}

fn default_cells() -> usize {
    2048
}

fn default_factor() -> usize {
    100
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            kind: None,
            cells: default_cells(),
            ensemble_factor: default_factor(),
            ensemble_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTauConfig {
    /// Defaults to `tau, tau/2, tau/4, tau/8`.
    #[serde(default)]
    pub tau_list: Vec<f64>,
    /// The reference trajectory uses `min(tau_list) / refine`.
    #[serde(default = "default_refine")]
    pub refine: usize,
}

fn default_refine() -> usize {
    8
}

impl Default for RateTauConfig {
    fn default() -> Self {
        Self {
            tau_list: Vec::new(),
            refine: default_refine(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Population size of the coupled run; defaults to the first entry of
    /// `n_list`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Replicas of the coupled run; defaults to `replicas`.
    #[serde(default)]
    pub replicas: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    dim: usize,
    #[serde(default)]
    sigma: Option<f64>,
    tau: f64,
    #[serde(rename = "T")]
    horizon: f64,
    n_list: Vec<usize>,
    #[serde(default = "default_replicas")]
    replicas: usize,
    #[serde(default = "default_q")]
    q: f64,
    fitness: FitnessConfig,
    #[serde(default)]
    initial: InitialConfig,
    #[serde(default)]
    reference: ReferenceConfig,
    #[serde(default)]
    rate_tau: RateTauConfig,
    #[serde(default)]
    trace: TraceConfig,
}

fn default_replicas() -> usize {
    10
}

fn default_q() -> f64 {
    3.0
}

/// A validated experiment description with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dim: usize,
    pub sigma: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_list: Vec<usize>,
    pub replicas: usize,
    pub q: f64,
    pub fitness: FitnessConfig,
    pub initial: InitialConfig,
    pub reference: ReferenceConfig,
    pub rate_tau: RateTauConfig,
    pub trace: TraceConfig,
}

/// Tolerance for `T / tau` being an integer.
const STEP_TOL: f64 = 1e-9;

fn steps_for(horizon: f64, tau: f64) -> usize {
    (horizon / tau).round() as usize
}

fn is_integer_ratio(a: f64, b: f64) -> bool {
    let r = a / b;
    (r - r.round()).abs() <= STEP_TOL * r.abs().max(1.0) && r.round() >= 1.0
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let range = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if raw.dim < 1 {
            return range("dim", "must be >= 1".into());
        }
        if !(raw.tau > 0.0 && raw.tau <= 1.0) {
            return range("tau", format!("must lie in (0, 1], got {}", raw.tau));
        }
        let sigma = raw.sigma.unwrap_or(0.0);
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return range("sigma", format!("must be finite and >= 0, got {sigma}"));
        }
        if !(raw.horizon > 0.0 && raw.horizon.is_finite()) {
            return range("T", format!("must be positive, got {}", raw.horizon));
        }
        if raw.n_list.is_empty() {
            return range("n_list", "must not be empty".into());
        }
        if raw.n_list.contains(&0) {
            return range("n_list", "population sizes must be >= 1".into());
        }
        for w in raw.n_list.windows(2) {
            if w[0] == w[1] {
                return range("n_list", format!("duplicate entry {}", w[0]));
            }
            if w[0] > w[1] {
                return range("n_list", "must be strictly increasing".into());
            }
        }
        if raw.replicas < 1 {
            return range("replicas", "must be >= 1".into());
        }
        if !(raw.q >= 1.0) {
            return range("q", format!("must be >= 1, got {}", raw.q));
        }
        FitnessSpec::from_config(&raw.fitness, raw.dim).map_err(|e| Error::Config(format!("fitness: {e}")))?;
        raw.initial.to_law(raw.dim)?;

        let mut reference = raw.reference;
        let kind = reference.kind.unwrap_or(if raw.dim == 1 {
            ReferenceKind::Grid
        } else {
            ReferenceKind::Ensemble
        });
        if kind == ReferenceKind::Grid && raw.dim != 1 {
            return range("reference.kind", "the grid reference requires dim = 1".into());
        }
        reference.kind = Some(kind);
        if reference.cells < 2 {
            return range("reference.cells", "must be >= 2".into());
        }
        if reference.ensemble_factor < 1 {
            return range("reference.ensemble_factor", "must be >= 1".into());
        }
        if reference.ensemble_size == Some(0) {
            return range("reference.ensemble_size", "must be >= 1".into());
        }

        let mut rate_tau = raw.rate_tau;
        if rate_tau.tau_list.is_empty() {
            rate_tau.tau_list = (0..4).map(|k| raw.tau / f64::powi(2.0, k)).collect();
        }
        if rate_tau.refine < 1 {
            return range("rate_tau.refine", "must be >= 1".into());
        }
        for &t in &rate_tau.tau_list {
            if !(t > 0.0 && t <= 1.0) {
                return range("rate_tau.tau_list", format!("entries must lie in (0, 1], got {t}"));
            }
        }

        let trace = TraceConfig {
            n: Some(raw.trace.n.unwrap_or(raw.n_list[0])),
            replicas: Some(raw.trace.replicas.unwrap_or(raw.replicas)),
        };
        if trace.n == Some(0) || trace.replicas == Some(0) {
            return range("trace", "n and replicas must be >= 1".into());
        }

        Ok(Self {
            seed: raw.seed,
            dim: raw.dim,
            sigma,
            tau: raw.tau,
            horizon: raw.horizon,
            n_list: raw.n_list,
            replicas: raw.replicas,
            q: raw.q,
            fitness: raw.fitness,
            initial: raw.initial,
            reference,
            rate_tau,
            trace,
        })
    }

    pub fn n_max(&self) -> usize {
        steps_for(self.horizon, self.tau)
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        self.reference.kind.unwrap_or(ReferenceKind::Grid)
    }

    pub fn fitness_spec(&self) -> Result<FitnessSpec> {
        FitnessSpec::from_config(&self.fitness, self.dim)
    }

    pub fn initial_law(&self) -> Result<InitialLaw> {
        self.initial.to_law(self.dim)
    }

    pub fn sim_params(&self, n_particles: usize) -> SimParams {
        SimParams {
            n_particles,
            tau: self.tau,
            sigma: self.sigma,
            n_max: self.n_max(),
            dim: self.dim,
            seed: self.seed,
        }
    }

    /// Size of the reference ensemble.
    pub fn ensemble_size(&self) -> usize {
        let largest = self.n_list.iter().copied().max().unwrap_or(1);
        self.reference
            .ensemble_size
            .unwrap_or(largest * self.reference.ensemble_factor)
    }

    /// The `tau` values of the rate-in-`tau` experiment in decreasing order,
    /// checked to be nested: every value divides the largest one and `T`.
    pub fn nested_tau_list(&self) -> Result<Vec<f64>> {
        let mut taus = self.rate_tau.tau_list.clone();
        taus.sort_by(|a, b| b.total_cmp(a));
        taus.dedup();
        let coarsest = taus[0];
        for &t in &taus {
            if !is_integer_ratio(coarsest, t) {
                return Err(Error::Config(format!(
                    "rate_tau.tau_list: {t} does not divide {coarsest}; the tau grid must be nested"
                )));
            }
            if !is_integer_ratio(self.horizon, t) {
                return Err(Error::Config(format!(
                    "rate_tau.tau_list: T = {} is not a multiple of {t}",
                    self.horizon
                )));
            }
        }
        Ok(taus)
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}

/// SHA-256 of the config after parsing into a key-sorted TOML table, so the
/// hash ignores key order, whitespace and comments.
pub fn config_hash(text: &str) -> Result<String> {
    let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let canonical = toml::to_string(&value).map_err(|e| Error::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}
