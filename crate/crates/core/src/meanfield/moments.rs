//! Moment growth along a trajectory compared with the bound
//! `M_q(f_{n+1}) <= (1 + tau C kappa) M_q(f_n) + tau C kappa sigma^q`.
//!
//! With `x' = (1 - gamma) x + gamma x_* + sigma xi` one has
//! `|x'|^q <= 3^{q-1} (|x|^q + |x_*|^q + sigma^q |xi|^q)`, and reweighting by
//! the fitness multiplies moments by at most `kappa`. Hence
//! `C = 3^{q-1} max(2, E|xi|^q)` is admissible, where
//! `E|xi|^q = 2^{q/2} Gamma((d + q)/2) / Gamma(d/2)` for `xi ~ N(0, I_d)`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `E|xi|^q` for a standard normal vector in dimension `d`.
pub fn gaussian_abs_moment(q: f64, d: usize) -> f64 {
    let d = d as f64;
    (0.5 * q * 2f64.ln() + ln_gamma(0.5 * (d + q)) - ln_gamma(0.5 * d)).exp()
}

/// `3^{q-1} max(2, E|xi|^q)`.
pub fn admissible_constant(q: f64, d: usize) -> f64 {
    3f64.powf(q - 1.0) * gaussian_abs_moment(q, d).max(2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBoundReport {
    pub q: f64,
    pub kappa: f64,
    pub tau: f64,
    pub sigma: f64,
    /// The admissible constant used for the bound.
    pub c_admissible: f64,
    /// Smallest constant for which every observed one-step inequality holds.
    pub c_empirical: f64,
    /// `M_q(f_n)`.
    pub moments: Vec<f64>,
    /// `M_q(f_n)^{1/q}`.
    pub roots: Vec<f64>,
    /// Iterated one-step bound, as a root: `B_0 = M_q(f_0)`,
    /// `B_{n+1} = (1 + tau C kappa) B_n + tau C kappa sigma^q`.
    pub recursion_envelope: Vec<f64>,
    /// `exp(C kappa n tau / q) (M_q(f_0)^{1/q} + sigma)`.
    pub closed_envelope: Vec<f64>,
    /// Steps `n` where the one-step inequality from `n` to `n + 1` fails.
    pub one_step_violations: Vec<usize>,
    /// Steps where a root exceeds either envelope.
    pub envelope_violations: Vec<usize>,
}

impl MomentBoundReport {
    pub fn one_step_ok(&self) -> bool {
        self.one_step_violations.is_empty()
    }

    pub fn envelope_ok(&self) -> bool {
        self.envelope_violations.is_empty()
    }
}

/// Checks the one-step inequality and both envelopes on the moment sequence
/// `M_q(f_0), M_q(f_1), ...` of a trajectory in dimension `dim`.
pub fn moment_bound_check(
    moments: &[f64],
    q: f64,
    kappa: f64,
    sigma: f64,
    tau: f64,
    dim: usize,
) -> Result<MomentBoundReport> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("moment order must be >= 1, got {q}"),
        });
    }
    if moments.is_empty() {
        return Err(Error::Empty("moment trajectory"));
    }
    if let Some(m) = moments.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "moments",
            reason: format!("moment {m} is not finite and nonnegative"),
        });
    }
    let c = admissible_constant(q, dim);
    let a = tau * c * kappa;
    let sq = sigma.powf(q);
    // Relative slack for rounding in the moment sums.
    let slack = 1e-12;

    let mut one_step_violations = Vec::new();
    let mut c_empirical = 0.0f64;
    for n in 0..moments.len() - 1 {
        let (m0, m1) = (moments[n], moments[n + 1]);
        let bound = (1.0 + a) * m0 + a * sq;
        if m1 > bound * (1.0 + slack) + f64::MIN_POSITIVE {
            one_step_violations.push(n);
        }
        let denom = tau * kappa * (m0 + sq);
        if m1 > m0 {
            c_empirical = c_empirical.max(if denom > 0.0 {
                (m1 - m0) / denom
            } else {
                f64::INFINITY
            });
        }
    }

    let root0 = moments[0].powf(1.0 / q);
    let mut recursion_envelope = Vec::with_capacity(moments.len());
    let mut closed_envelope = Vec::with_capacity(moments.len());
    let mut b = moments[0];
    let mut envelope_violations = Vec::new();
    for (n, &m) in moments.iter().enumerate() {
        if n > 0 {
            b = (1.0 + a) * b + a * sq;
        }
        let rec = b.powf(1.0 / q);
        let closed = (c * kappa * n as f64 * tau / q).exp() * (root0 + sigma);
        let root = m.powf(1.0 / q);
        if root > rec * (1.0 + slack) + f64::MIN_POSITIVE || root > closed * (1.0 + slack) + f64::MIN_POSITIVE
        {
            envelope_violations.push(n);
        }
        recursion_envelope.push(rec);
        closed_envelope.push(closed);
    }

    Ok(MomentBoundReport {
        q,
        kappa,
        tau,
        sigma,
        c_admissible: c,
        c_empirical,
        moments: moments.to_vec(),
        roots: moments.iter().map(|m| m.powf(1.0 / q)).collect(),
        recursion_envelope,
        closed_envelope,
        one_step_violations,
        envelope_violations,
    })
}
