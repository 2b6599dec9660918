//! Scale functions of the supported models in exponential-sum form.
//!
//! For a rational Laplace exponent, `1/(psi(theta) - q)` is a proper
//! rational function whose poles are the simple real roots `theta_k` of
//! `psi = q`, so partial fractions give
//!
//! ```text
//! W^(q)(x) = sum_k e^{theta_k x} / psi'(theta_k),   x >= 0.
//! ```
//!
//! Every other function here (`Z_q(., theta)`, `Z_{q,p}`, the refracted
//! scale function, the auxiliary `w_b`) is obtained from that sum by exact
//! term-wise operations.

use crate::error::{Error, Result};
use crate::expsum::{ExpSum, Term};
use crate::levy_model::{ControlParams, LevyModel};
use crate::numerics;

/// Cancellation tolerance for coefficients that vanish analytically.
const CANCEL_REL: f64 = 1e-9;

/// `W^(q)` as an exponential sum vanishing on `(-inf, 0)`.
pub fn build_w(model: &LevyModel, q: f64) -> Result<ExpSum> {
    let roots = model.rate_roots(q)?;
    Ok(ExpSum::from_exponentials(roots.iter().map(|&r| (1.0 / model.psi_prime(r), r)))
        .vanishing_below(0.0))
}

/// Exponential-sum form of `Z_q(x, theta)` on `[0, inf)` given `W^(q)`.
///
/// The coefficient of `e^{theta x}` equals `1 - (psi(theta) - q) L_W(theta)`,
/// which is zero by the partial-fraction identity unless `theta` is itself a
/// root; it is checked and removed.
fn z_from_w(model: &LevyModel, w: &ExpSum, q: f64, theta: f64) -> Result<ExpSum> {
    let gap = model.psi(theta) - q;
    if w.terms().iter().any(|t| t.rate == theta) || gap.abs() <= 1e-14 * q.max(1.0) {
        return Ok(ExpSum::from_exponentials([(1.0, theta)]));
    }
    let mut lead = 1.0;
    let mut lead_mag = 1.0;
    let mut terms = Vec::with_capacity(w.terms().len());
    for t in w.terms() {
        let c = gap * t.coef / (theta - t.rate);
        lead -= c;
        lead_mag += c.abs();
        terms.push(Term::exp(c, t.rate));
    }
    if lead.abs() > CANCEL_REL * lead_mag {
        return Err(Error::Consistency(format!(
            "Z_q(., {theta}) leading coefficient {lead} failed to cancel"
        )));
    }
    Ok(ExpSum::new(terms))
}

/// `Z_q(x, theta)`; equals `e^{theta x}` for `x <= 0`.
pub fn z_general(model: &LevyModel, q: f64, theta: f64, x: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("Z_q(x, theta) needs theta >= 0, got {theta}")));
    }
    if x <= 0.0 {
        return Ok((theta * x).exp());
    }
    let w = build_w(model, q)?;
    Ok(z_from_w(model, &w, q, theta)?.eval_terms(x))
}

/// `Z_{q,p}(x)`.
pub fn z_qp(model: &LevyModel, q: f64, p: f64, x: f64) -> Result<f64> {
    Ok(ParisianScales::new(model, q, p)?.z_qp(x))
}

/// `Z_{q,p}'(x)` (right derivative at `0`).
pub fn z_qp_prime(model: &LevyModel, q: f64, p: f64, x: f64) -> Result<f64> {
    Ok(ParisianScales::new(model, q, p)?.z_qp_prime(x))
}

/// `a*`: the minimizer of `W^(q)'` over `[0, inf)`.
pub fn landmark_a_star(model: &LevyModel, q: f64) -> Result<f64> {
    let w = build_w(model, q)?;
    let w2 = w.derivative().derivative();
    numerics::argmin_convex(|x| w2.eval_terms(x), 0.0, 1e-14)
}

/// `c*`: the minimizer of `Z_{q,p}'` over `[0, inf)`.
pub fn landmark_c_star(model: &LevyModel, q: f64, p: f64) -> Result<f64> {
    Ok(ParisianScales::new(model, q, p)?.c_star)
}

/// `w_b^(q)(x; y)` for the given model and control parameters.
pub fn w_aux(model: &LevyModel, params: &ControlParams, b: f64, x: f64, y: f64) -> Result<f64> {
    ScaleSet::new(model, params)?.w_aux(b, x, y)
}

/// Scale functions of `X` that depend on `(q, p)` only.
#[derive(Debug, Clone)]
pub struct ParisianScales {
    pub q: f64,
    pub p: f64,
    pub phi_q: f64,
    /// `Phi(p + q)`.
    pub phi_pq: f64,
    w: ExpSum,
    w_d1: ExpSum,
    w_d2: ExpSum,
    z_q: ExpSum,
    z_qp: ExpSum,
    z_qp_d1: ExpSum,
    z_qp_d2: ExpSum,
    pub a_star: f64,
    pub c_star: f64,
}

impl ParisianScales {
    pub fn new(model: &LevyModel, q: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("Parisian rate must be positive, got {p}")));
        }
        let w = build_w(model, q)?;
        let phi_q = model.phi(q)?;
        let phi_pq = model.phi(p + q)?;
        let w_d1 = w.derivative();
        let w_d2 = w_d1.derivative();
        let z_q = z_from_w(model, &w, q, 0.0)?;
        let z_qp = z_from_w(model, &w, q, phi_pq)?;
        let z_qp_d1 = z_qp.derivative();
        let z_qp_d2 = z_qp_d1.derivative();
        let a_star = numerics::argmin_convex(|x| w_d2.eval_terms(x), 0.0, 1e-14)?;
        let c_star = numerics::argmin_convex(|x| z_qp_d2.eval_terms(x), 0.0, 1e-14)?;
        Ok(Self {
            q,
            p,
            phi_q,
            phi_pq,
            w,
            w_d1,
            w_d2,
            z_q,
            z_qp,
            z_qp_d1,
            z_qp_d2,
            a_star,
            c_star,
        })
    }

    pub fn w_sum(&self) -> &ExpSum {
        &self.w
    }

    pub fn z_qp_sum(&self) -> &ExpSum {
        &self.z_qp
    }

    pub fn z_qp_prime_sum(&self) -> &ExpSum {
        &self.z_qp_d1
    }

    pub fn w_prime_sum(&self) -> &ExpSum {
        &self.w_d1
    }

    /// `W^(q)(x)`, zero for `x < 0` and `W^(q)(0)` at the origin.
    pub fn w(&self, x: f64) -> f64 {
        self.w.eval(x)
    }

    /// Density of `W^(q)` on `(0, inf)`; right limit at `0`, zero below.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w_d1.eval_terms(x)
        }
    }

    pub fn w_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w_d2.eval_terms(x)
        }
    }

    /// `Z^(q)(x) = 1 + q int_0^x W^(q)`.
    pub fn z_q(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            self.z_q.eval_terms(x)
        }
    }

    pub fn z_qp(&self, x: f64) -> f64 {
        if x <= 0.0 {
            (self.phi_pq * x).exp()
        } else {
            self.z_qp.eval_terms(x)
        }
    }

    /// `Z_{q,p}'`, the right derivative at `0`.
    pub fn z_qp_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.phi_pq * (self.phi_pq * x).exp()
        } else {
            self.z_qp_d1.eval_terms(x)
        }
    }

    pub fn z_qp_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.phi_pq * self.phi_pq * (self.phi_pq * x).exp()
        } else {
            self.z_qp_d2.eval_terms(x)
        }
    }
}

/// All scale functions needed by the control problem with rates `(q, p, K)`.
#[derive(Debug, Clone)]
pub struct ScaleSet {
    pub model: LevyModel,
    pub refracted: LevyModel,
    pub params: ControlParams,
    pub x: ParisianScales,
    /// `Phi_K(q)`, right inverse of the refracted exponent.
    pub phi_k: f64,
    w_ref: ExpSum,
    w_ref_d1: ExpSum,
    w_ref_d2: ExpSum,
    z_ref: ExpSum,
}

impl ScaleSet {
    pub fn new(model: &LevyModel, params: &ControlParams) -> Result<Self> {
        params.validate(model)?;
        let x = ParisianScales::new(model, params.q, params.p)?;
        let refracted = model.refract(params.k)?;
        let w_ref = build_w(&refracted, params.q)?;
        let phi_k = refracted.phi(params.q)?;
        let w_ref_d1 = w_ref.derivative();
        let w_ref_d2 = w_ref_d1.derivative();
        let z_ref = z_from_w(&refracted, &w_ref, params.q, 0.0)?;
        Ok(Self {
            model: model.clone(),
            refracted,
            params: *params,
            x,
            phi_k,
            w_ref,
            w_ref_d1,
            w_ref_d2,
            z_ref,
        })
    }

    pub fn w_ref_sum(&self) -> &ExpSum {
        &self.w_ref
    }

    /// Refracted scale function `𝕎^(q)` of `Y = X - K t`.
    pub fn w_ref(&self, x: f64) -> f64 {
        self.w_ref.eval(x)
    }

    pub fn w_ref_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w_ref_d1.eval_terms(x)
        }
    }

    pub fn w_ref_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.w_ref_d2.eval_terms(x)
        }
    }

    /// `ℤ^(q)` of the refracted process.
    pub fn z_ref(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            self.z_ref.eval_terms(x)
        }
    }

    /// `w_b^(q)(x; y) = W^(q)(x-y) + K 1{x >= b} int_b^x 𝕎^(q)(x-z) W^(q)'(z-y) dz`.
    ///
    /// `W^(q)'` is the density on `(0, inf)`, so the integral starts at
    /// `max(b, y)`.
    pub fn w_aux(&self, b: f64, x: f64, y: f64) -> Result<f64> {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("w_b needs b >= 0, got {b}")));
        }
        let base = self.x.w(x - y);
        let lower = b.max(y);
        if x < b || x <= lower {
            return Ok(base);
        }
        let density = self.x.w_prime_sum().shift(lower - y);
        let conv = self.w_ref.convolve(&density)?;
        Ok(base + self.params.k * conv.eval_terms(x - lower))
    }
}
