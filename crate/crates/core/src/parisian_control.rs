//! The threshold criterion `h_p`, the optimal refraction level and the
//! performance function of refraction strategies.
//!
//! For a refraction level `b`,
//!
//! ```text
//! h_p(b)  = Phi_K(q) int_0^inf e^{-Phi_K(q) y} Z_{q,p}'(b + y) dy
//! V_b(x)  = Z_{q,p}(x) / h_p(b),                                   x <= b
//! V_b(x)  = [Z_{q,p}(x) + K int_b^x 𝕎(x - y) (Z_{q,p}'(y) - h_p(b)) dy] / h_p(b),  x >= b
//! ```
//!
//! and the optimal level `b*` is the minimizer of the strictly convex `h_p`
//! on `[0, inf)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::levy_model::{ControlParams, LevyModel};
use crate::numerics;
use crate::scale_functions::ScaleSet;

/// `|denominator|` below which the closed form of `h_p(0)` is refused.
pub const POLE_TOL: f64 = 1e-8;
/// Agreement required between the root route and the minimization route.
pub const B_STAR_AGREEMENT: f64 = 1e-8;
/// Bracket width for the root route.
pub const B_STAR_TOL: f64 = 1e-10;

/// Residual growth allowed to cancel when assembling the upper branch.
const GROWTH_CANCEL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    ZeroThreshold,
    PositiveThreshold,
}

/// Optimal refraction level and the quantities that decide it.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSolution {
    pub b_star: f64,
    pub p_min: f64,
    /// Closed-form positivity inequality in terms of `Phi(p+q)`, `Phi_K(q)`, `W^(q)(0)`.
    pub condition: bool,
    /// `h_p(0) < Z_{q,p}'(0+)`, equivalent to `h_p'(0) < 0`.
    pub slope_condition: bool,
    pub h_at_b_star: f64,
    pub branch: Branch,
    pub c_star: f64,
    /// `p` coincides with `p_min` to relative precision `1e-12`.
    pub at_p_min_boundary: bool,
    /// Whether the rule "`b* = 0` if `p <= p_min` or the closed-form condition
    /// fails" gives the same branch as the minimizer of `h_p`.
    pub case_rule_agrees: bool,
}

/// Refraction-strategy control problem for one model and `(q, p, K)`.
#[derive(Debug, Clone)]
pub struct ParisianProblem {
    scales: ScaleSet,
    h: ExpSum,
    h_d1: ExpSum,
}

impl ParisianProblem {
    pub fn new(model: &LevyModel, params: &ControlParams) -> Result<Self> {
        let scales = ScaleSet::new(model, params)?;
        let phi_k = scales.phi_k;
        let h = scales
            .x
            .z_qp_prime_sum()
            .exp_weighted_tail(phi_k)?
            .scale(phi_k);
        let h_d1 = h.derivative();
        Ok(Self { scales, h, h_d1 })
    }

    pub fn scales(&self) -> &ScaleSet {
        &self.scales
    }

    pub fn model(&self) -> &LevyModel {
        &self.scales.model
    }

    pub fn params(&self) -> &ControlParams {
        &self.scales.params
    }

    /// `h_p(b)` for `b >= 0`.
    pub fn h_p(&self, b: f64) -> Result<f64> {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("h_p needs b >= 0, got {b}")));
        }
        Ok(self.h.eval_terms(b))
    }

    /// Derivative of `h_p` from its exponential-sum form.
    pub fn h_p_prime(&self, b: f64) -> f64 {
        self.h_d1.eval_terms(b)
    }

    /// `h_p(0) = Phi_K (Phi(p+q) - p/K) / (Phi_K - Phi(p+q))`.
    pub fn h_p_zero_closed_form(&self) -> Result<f64> {
        let s = &self.scales;
        let (phi_k, phi_pq) = (s.phi_k, s.x.phi_pq);
        let den = phi_k - phi_pq;
        if den.abs() < POLE_TOL {
            return Err(Error::Pole(format!(
                "Phi_K(q) - Phi(p+q) = {den}: p is at p_min, use the integral form"
            )));
        }
        Ok(phi_k * (phi_pq - s.params.p / s.params.k) / den)
    }

    /// Critical Parisian rate solving `Phi(p_min + q) = Phi_K(q)`.
    ///
    /// Since `psi(Phi_K(q)) = q + K Phi_K(q)`, this is `K Phi_K(q)`.
    pub fn p_min(&self) -> f64 {
        let s = &self.scales;
        s.model.psi(s.phi_k) - s.params.q
    }

    /// Both sides of the closed-form positivity inequality.
    pub fn condition_sides(&self) -> (f64, f64) {
        let s = &self.scales;
        let (phi_pq, phi_k) = (s.x.phi_pq, s.phi_k);
        let w0 = s.model.w_at_zero();
        let lhs = phi_pq * phi_pq / s.params.p - phi_pq * w0;
        let rhs = phi_k * (1.0 / s.params.k - w0);
        (lhs, rhs)
    }

    /// Closed-form positivity inequality (strict).
    pub fn positivity_condition(&self) -> bool {
        let (lhs, rhs) = self.condition_sides();
        lhs > rhs
    }

    /// Closed-form inequality with its direction set by the sign of
    /// `Phi(p+q) - Phi_K(q)`.
    ///
    /// Multiplying `h_p(0) < Z_{q,p}'(0+)` through by `Phi_K(q) - Phi(p+q)`
    /// gives `LHS > RHS` when `p > p_min` and `LHS < RHS` when `p < p_min`.
    pub fn signed_condition(&self) -> bool {
        let (lhs, rhs) = self.condition_sides();
        let s = &self.scales;
        (lhs - rhs) * (s.x.phi_pq - s.phi_k) > 0.0
    }

    /// `h_p(0) < Z_{q,p}'(0+)`.
    pub fn slope_condition(&self) -> bool {
        self.h.eval_terms(0.0) < self.scales.x.z_qp_prime(0.0)
    }

    /// Locates `b*`, running the root route and the minimization route.
    pub fn solve_b_star(&self) -> Result<ThresholdSolution> {
        let s = &self.scales;
        let p = s.params.p;
        let p_min = self.p_min();
        let condition = self.positivity_condition();
        let slope_condition = self.slope_condition();
        let c_star = s.x.c_star;

        let (b_star, branch) = if slope_condition {
            (self.positive_threshold(c_star)?, Branch::PositiveThreshold)
        } else {
            (0.0, Branch::ZeroThreshold)
        };
        let case_rule_branch = if p <= p_min || !condition {
            Branch::ZeroThreshold
        } else {
            Branch::PositiveThreshold
        };
        Ok(ThresholdSolution {
            b_star,
            p_min,
            condition,
            slope_condition,
            h_at_b_star: self.h.eval_terms(b_star),
            branch,
            c_star,
            at_p_min_boundary: (p - p_min).abs() <= 1e-12 * p_min,
            case_rule_agrees: case_rule_branch == branch,
        })
    }

    fn positive_threshold(&self, c_star: f64) -> Result<f64> {
        let zp = |b: f64| self.scales.x.z_qp_prime(b);
        let gap = |b: f64| self.h.eval_terms(b) - zp(b);

        // Root route: h_p - Z' changes sign on [0, c*].
        let mut hi = c_star.max(1e-12);
        if gap(hi) < 0.0 {
            hi = hi + numerics::expand_until(1.0, 2.0, |d| gap(hi + d) >= 0.0)?;
        }
        let by_root = numerics::brent(gap, 0.0, hi, 1e-15, B_STAR_TOL * 1e-3)?;

        // Minimization route: golden section on h_p, refined on the sign of
        // the term-wise derivative of h_p.
        let (a, b) = numerics::golden_section(|x| self.h.eval_terms(x), 0.0, hi, 1e-5 * hi.max(1.0));
        let pad = 1e-5 * hi.max(1.0);
        let (mut lo, mut up) = ((a - pad).max(0.0), b + pad);
        while self.h_p_prime(lo) > 0.0 && lo > 0.0 {
            lo = (lo - 10.0 * pad).max(0.0);
        }
        while self.h_p_prime(up) < 0.0 {
            up += 10.0 * pad;
        }
        let by_min = numerics::bisect_sign(|x| self.h_p_prime(x), lo, up, 1e-13 * up.max(1.0));

        if (by_root - by_min).abs() > B_STAR_AGREEMENT {
            return Err(Error::Consistency(format!(
                "b* from h_p = Z' ({by_root}) and from minimizing h_p ({by_min}) disagree"
            )));
        }
        if by_root > c_star + B_STAR_AGREEMENT {
            return Err(Error::Consistency(format!(
                "b* = {by_root} exceeds c* = {c_star}"
            )));
        }
        Ok(by_root)
    }

    /// Value function of the optimal refraction strategy.
    pub fn value_function(&self, solution: &ThresholdSolution) -> Result<ValueFunction> {
        self.performance_general_b(solution.b_star)
    }

    /// Performance function `V_b` of the refraction strategy at level `b`.
    pub fn performance_general_b(&self, b: f64) -> Result<ValueFunction> {
        let h = self.h_p(b)?;
        self.assemble(b, h)
    }

    /// `V_b` with normalizer `h_p(b)`; growth terms must cancel.
    fn assemble(&self, b: f64, h: f64) -> Result<ValueFunction> {
        let (middle, upper) = self.branches(b, h)?;
        let upper = upper.drop_cancelled_growth(GROWTH_CANCEL_REL)?;
        Ok(ValueFunction::new(b, h, self.scales.x.phi_pq, middle, upper))
    }

    /// Same construction with an arbitrary positive normalizer `h`.
    ///
    /// Unless `h = h_p(b)` the upper branch keeps exponentially growing
    /// terms; these candidates serve as negative controls.
    pub fn candidate(&self, b: f64, h: f64) -> Result<ValueFunction> {
        let (middle, upper) = self.branches(b, h)?;
        let upper = ExpSum::new(upper.merge_like_terms().into_iter().map(|m| m.term).collect());
        Ok(ValueFunction::new(b, h, self.scales.x.phi_pq, middle, upper))
    }

    fn branches(&self, b: f64, h: f64) -> Result<(ExpSum, ExpSum)> {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("refraction level must be >= 0, got {b}")));
        }
        if !(h > 0.0) {
            return Err(Error::Domain(format!("normalizer must be positive, got {h}")));
        }
        let s = &self.scales;
        let k = s.params.k;
        let z = s.x.z_qp_sum();
        let middle = z.scale(1.0 / h);

        // Upper branch in u = x - b:
        //   -K int_0^u 𝕎 + Z(b+u)/h + (K/h) int_0^u 𝕎(u-s) Z'(b+s) ds
        let dividends = s.w_ref_sum().integral_from_zero().scale(-k);
        let carried = z.shift(b).scale(1.0 / h);
        let conv = s
            .w_ref_sum()
            .convolve(&s.x.z_qp_prime_sum().shift(b))?
            .scale(k / h);
        Ok((middle, dividends.add(&carried).add(&conv)))
    }
}

/// Piecewise closed form of a refraction performance function.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    b: f64,
    h: f64,
    left_rate: f64,
    middle: [ExpSum; 3],
    upper: [ExpSum; 3],
}

impl ValueFunction {
    fn new(b: f64, h: f64, left_rate: f64, middle: ExpSum, upper: ExpSum) -> Self {
        let m1 = middle.derivative();
        let m2 = m1.derivative();
        let u1 = upper.derivative();
        let u2 = u1.derivative();
        Self {
            b,
            h,
            left_rate,
            middle: [middle, m1, m2],
            upper: [upper, u1, u2],
        }
    }

    /// Refraction level of the strategy.
    pub fn level(&self) -> f64 {
        self.b
    }

    /// Normalizer `h` (equal to `h_p(b)` unless perturbed).
    pub fn normalizer(&self) -> f64 {
        self.h
    }

    /// Junctions where the piecewise form switches.
    pub fn junctions(&self) -> Vec<f64> {
        if self.b > 0.0 {
            vec![0.0, self.b]
        } else {
            vec![0.0]
        }
    }

    fn left(&self, x: f64, order: usize) -> f64 {
        self.left_rate.powi(order as i32) * (self.left_rate * x).exp() / self.h
    }

    fn eval_order(&self, x: f64, order: usize) -> f64 {
        if x < 0.0 {
            self.left(x, order)
        } else if x < self.b {
            self.middle[order].eval_terms(x)
        } else {
            self.upper[order].eval_terms(x - self.b)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 && self.b > 0.0 {
            return self.left(0.0, 0);
        }
        self.eval_order(x, 0)
    }

    /// `V'(x)`, right limit at the junctions.
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_order(x, 1)
    }

    /// `V''(x)`, right limit at the junctions.
    pub fn second_derivative(&self, x: f64) -> f64 {
        self.eval_order(x, 2)
    }

    /// Left limit of `V^(order)` at `x`.
    pub fn left_limit(&self, x: f64, order: usize) -> f64 {
        if x <= 0.0 {
            self.left(x, order)
        } else if x <= self.b {
            self.middle[order].eval_terms(x)
        } else {
            self.upper[order].eval_terms(x - self.b)
        }
    }
}
