//! Spectrally negative Lévy models with rational Laplace exponents.
//!
//! The supported family is a linear drift, an optional Gaussian part and a
//! finite mixture of exponential downward jumps,
//!
//! ```text
//! psi(l) = d*l + sigma^2 l^2 / 2 - sum_i eta_i * l / (alpha_i + l)
//! ```
//!
//! where `d` is the premium rate `c` for bounded variation (`sigma = 0`) and
//! the drift `mu` otherwise. The Lévy density `sum_i eta_i alpha_i e^{-alpha_i z}`
//! is completely monotone by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ROOT_REL_TOL};

/// One exponential component of the jump density: `rate * alpha * e^{-alpha z}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpTerm {
    /// Arrival intensity `eta` of jumps from this component.
    pub rate: f64,
    /// Decay `alpha` of the jump size density (mean size `1/alpha`).
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    Bounded,
    Unbounded,
}

/// A spectrally negative Lévy process from the supported family.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    sigma: f64,
    drift: f64,
    jumps: Vec<JumpTerm>,
}

impl LevyModel {
    /// Compound Poisson surplus `X_t = c t - S_t` (bounded variation).
    pub fn cramer_lundberg(c: f64, jumps: Vec<JumpTerm>) -> Result<Self> {
        Self::build(0.0, c, jumps)
    }

    /// Brownian motion with drift `mu` and volatility `sigma > 0`.
    pub fn brownian(sigma: f64, mu: f64) -> Result<Self> {
        Self::jump_diffusion(sigma, mu, Vec::new())
    }

    /// Brownian part plus exponential-mixture jumps (unbounded variation).
    pub fn jump_diffusion(sigma: f64, mu: f64, jumps: Vec<JumpTerm>) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidModel(format!(
                "jump diffusion needs sigma > 0, got {sigma}"
            )));
        }
        Self::build(sigma, mu, jumps)
    }

    /// Generic constructor: `drift` is `c` when `sigma == 0`, `mu` otherwise.
    pub fn new(sigma: f64, drift: f64, jumps: Vec<JumpTerm>) -> Result<Self> {
        Self::build(sigma, drift, jumps)
    }

    fn build(sigma: f64, drift: f64, mut jumps: Vec<JumpTerm>) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be >= 0, got {sigma}")));
        }
        if !drift.is_finite() {
            return Err(Error::InvalidModel(format!("drift must be finite, got {drift}")));
        }
        if sigma == 0.0 && !(drift > 0.0) {
            return Err(Error::InvalidModel(format!(
                "bounded-variation model needs premium rate c > 0, got {drift}"
            )));
        }
        for (i, j) in jumps.iter().enumerate() {
            if !(j.rate > 0.0 && j.rate.is_finite() && j.alpha > 0.0 && j.alpha.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "jump term {i} needs rate > 0 and alpha > 0, got ({}, {})",
                    j.rate, j.alpha
                )));
            }
        }
        jumps.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        if jumps.windows(2).any(|w| w[0].alpha == w[1].alpha) {
            return Err(Error::InvalidModel(
                "jump decays alpha must be pairwise distinct".into(),
            ));
        }
        Ok(Self {
            sigma,
            drift,
            jumps,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Linear coefficient of the reduced Laplace exponent (`c` or `mu`).
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Jump components, sorted by increasing `alpha`.
    pub fn jumps(&self) -> &[JumpTerm] {
        &self.jumps
    }

    /// Total jump intensity `sum_i eta_i`.
    pub fn jump_intensity(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).sum()
    }

    pub fn variation(&self) -> Variation {
        if self.sigma == 0.0 {
            Variation::Bounded
        } else {
            Variation::Unbounded
        }
    }

    /// Premium rate `c` for bounded-variation models.
    pub fn premium_rate(&self) -> Option<f64> {
        match self.variation() {
            Variation::Bounded => Some(self.drift),
            Variation::Unbounded => None,
        }
    }

    /// Laplace exponent `psi(lambda)` for `lambda >= 0`.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "Laplace exponent needs lambda >= 0, got {lambda}"
            )));
        }
        Ok(self.psi(lambda))
    }

    /// Rational continuation of `psi`, valid away from the poles `-alpha_i`.
    pub fn psi(&self, theta: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|j| j.rate * theta / (j.alpha + theta))
            .sum();
        self.drift * theta + 0.5 * self.sigma * self.sigma * theta * theta - jumps
    }

    /// Derivative of the rational continuation of `psi`.
    pub fn psi_prime(&self, theta: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|j| j.rate * j.alpha / ((j.alpha + theta) * (j.alpha + theta)))
            .sum();
        self.drift + self.sigma * self.sigma * theta - jumps
    }

    /// Right inverse `Phi(q)`: the largest root of `psi(lambda) = q`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("Phi needs q >= 0, got {q}")));
        }
        let f = |l: f64| self.psi(l) - q;
        // psi is convex with psi(0) = 0, so the largest root lies right of
        // the minimizer of psi on [0, inf).
        let lo = if q > 0.0 {
            0.0
        } else {
            if self.psi_prime(0.0) >= 0.0 {
                return Ok(0.0);
            }
            numerics::argmin_convex(|l| self.psi_prime(l), 0.0, 1e-15)?
        };
        let hi = numerics::expand_until(lo.max(1.0), 2.0, |h| f(h) > 0.0)?;
        numerics::brent(f, lo, hi, ROOT_REL_TOL * 1e-2, 0.0)
    }

    /// All real roots of `psi(theta) = q` for `q > 0`, in decreasing order.
    ///
    /// The first entry is `Phi(q)`; the others are negative and interlace
    /// with the poles `-alpha_i`, one per gap, plus one left of the last
    /// pole when a Gaussian part is present.
    pub fn rate_roots(&self, q: f64) -> Result<Vec<f64>> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("scale roots need q > 0, got {q}")));
        }
        let f = |t: f64| self.psi(t) - q;
        let tol = ROOT_REL_TOL * 1e-2;
        let mut roots = vec![self.phi(q)?];

        // Poles ordered from the right: -alpha_1 > -alpha_2 > ...
        let poles: Vec<f64> = self.jumps.iter().map(|j| -j.alpha).collect();
        let mut right_end = 0.0;
        let mut right_is_pole = false;
        for &pole in &poles {
            let gap = right_end - pole;
            let lo = pole_side(&f, pole, gap, 1.0)?;
            let hi = if right_is_pole {
                pole_side(&f, right_end, gap, -1.0)?
            } else {
                right_end
            };
            roots.push(numerics::brent(f, lo, hi, tol, 1e-300)?);
            right_end = pole;
            right_is_pole = true;
        }
        if self.sigma > 0.0 {
            let hi = if right_is_pole {
                pole_side(&f, right_end, right_end.abs().max(1.0), -1.0)?
            } else {
                right_end
            };
            let span = numerics::expand_until(1.0, 2.0, |s| f(hi - s) > 0.0)?;
            roots.push(numerics::brent(f, hi - span, hi, tol, 1e-300)?);
        }

        for (i, &r) in roots.iter().enumerate() {
            let slope = self.psi_prime(r);
            if !(slope.abs() > 1e-12 * (1.0 + q)) {
                return Err(Error::Unsupported(format!(
                    "psi(theta) = {q} has a repeated root near {r} (root {i}); perturb the jump decays"
                )));
            }
        }
        Ok(roots)
    }

    /// Model of `Y_t = X_t - K t`; its `phi` is `Phi_K`.
    pub fn refract(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Admissibility(format!(
                "dividend rate K must be positive, got {k}"
            )));
        }
        if let Some(c) = self.premium_rate() {
            if k >= c {
                return Err(Error::Admissibility(format!(
                    "bounded variation requires K < c, got K = {k} >= c = {c}"
                )));
            }
        }
        Ok(Self {
            sigma: self.sigma,
            drift: self.drift - k,
            jumps: self.jumps.clone(),
        })
    }

    /// `W^(q)(0)`: `1/c` for bounded variation, `0` otherwise.
    pub fn w_at_zero(&self) -> f64 {
        match self.premium_rate() {
            Some(c) => 1.0 / c,
            None => 0.0,
        }
    }
}

/// A point strictly on one side of `pole` where `f` has the sign it takes at
/// that side of the pole (`+inf` on the right, `-inf` on the left).
fn pole_side<F: Fn(f64) -> f64>(f: &F, pole: f64, gap: f64, side: f64) -> Result<f64> {
    let mut delta = 0.25 * gap;
    for _ in 0..1100 {
        let t = pole + side * delta;
        let v = f(t);
        if v.is_finite() && v * side > 0.0 {
            return Ok(t);
        }
        delta *= 0.5;
    }
    Err(Error::RootFinding(format!(
        "could not separate a root from the pole {pole}"
    )))
}

/// Discount, Parisian and maximal-dividend rates of the control problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub q: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl ControlParams {
    pub fn new(q: f64, p: f64, k: f64) -> Self {
        Self { q, p, k }
    }

    /// Positivity of all rates and `K < c` for bounded-variation models.
    pub fn validate(&self, model: &LevyModel) -> Result<()> {
        for (name, v) in [("q", self.q), ("p", self.p), ("K", self.k)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Admissibility(format!("{name} must be positive, got {v}")));
            }
        }
        model.refract(self.k).map(|_| ())
    }
}
