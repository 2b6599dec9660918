//! Exponential-polynomial sums `sum_i A_i x^{m_i} e^{r_i x}` in closed form.
//!
//! Scale functions of the supported models are finite sums of exponentials,
//! so derivatives, antiderivatives, shifts, exponentially weighted tail
//! integrals and convolutions all stay in this class. Convolution of two
//! terms with equal rates produces an `x e^{r x}` term.

use crate::error::{Error, Result};

/// Two rates closer than this (relative) are treated as coincident.
const COINCIDENT_RATE_REL: f64 = 1e-10;

/// `coef * x^power * e^{rate x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
}

impl Term {
    pub fn exp(coef: f64, rate: f64) -> Self {
        Self {
            coef,
            power: 0,
            rate,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let poly = if self.power == 0 {
            1.0
        } else {
            x.powi(self.power as i32)
        };
        self.coef * poly * (self.rate * x).exp()
    }
}

/// Result of merging like terms: the merged coefficient and the sum of the
/// magnitudes that produced it, so cancellation can be judged.
#[derive(Debug, Clone, Copy)]
pub struct MergedTerm {
    pub term: Term,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpSum {
    terms: Vec<Term>,
    /// Left end of the representation's validity.
    valid_from: f64,
    /// Evaluate to zero left of `valid_from` instead of extrapolating.
    left_zero: bool,
}

impl ExpSum {
    pub fn new(terms: Vec<Term>) -> Self {
        Self {
            terms,
            valid_from: 0.0,
            left_zero: false,
        }
    }

    pub fn from_exponentials<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        Self::new(pairs.into_iter().map(|(a, r)| Term::exp(a, r)).collect())
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Term::exp(c, 0.0)])
    }

    /// Marks the sum as vanishing for `x < valid_from`.
    pub fn vanishing_below(mut self, valid_from: f64) -> Self {
        self.valid_from = valid_from;
        self.left_zero = true;
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn valid_from(&self) -> f64 {
        self.valid_from
    }

    pub fn left_zero(&self) -> bool {
        self.left_zero
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.left_zero && x < self.valid_from {
            return 0.0;
        }
        self.eval_terms(x)
    }

    /// Term sum without the left-zero convention (right limits at the edge).
    pub fn eval_terms(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coef *= c;
        }
        out
    }

    pub fn add(&self, other: &ExpSum) -> Self {
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        out
    }

    pub fn derivative(&self) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.rate != 0.0 {
                terms.push(Term {
                    coef: t.coef * t.rate,
                    ..*t
                });
            }
            if t.power > 0 {
                terms.push(Term {
                    coef: t.coef * t.power as f64,
                    power: t.power - 1,
                    rate: t.rate,
                });
            }
        }
        Self {
            terms,
            ..self.clone()
        }
    }

    /// `F(x) = int_0^x f(s) ds`.
    pub fn integral_from_zero(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.rate == 0.0 {
                terms.push(Term {
                    coef: t.coef / (t.power + 1) as f64,
                    power: t.power + 1,
                    rate: 0.0,
                });
                continue;
            }
            // int_0^x s^m e^{rs} ds
            //   = e^{rx} sum_j (-1)^j m!/(m-j)! x^{m-j} / r^{j+1} - (-1)^m m! / r^{m+1}
            let m = t.power;
            let mut falling = 1.0;
            for j in 0..=m {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(Term {
                    coef: t.coef * sign * falling / t.rate.powi(j as i32 + 1),
                    power: m - j,
                    rate: t.rate,
                });
                falling *= (m - j) as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(Term::exp(
                -t.coef * sign * factorial(m) / t.rate.powi(m as i32 + 1),
                0.0,
            ));
        }
        Self::new(terms)
    }

    /// `g(x) = f(x + s)`.
    pub fn shift(&self, s: f64) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            let base = t.coef * (t.rate * s).exp();
            // (x + s)^m = sum_k C(m, k) s^{m-k} x^k
            for k in 0..=t.power {
                let c = binomial(t.power, k) * s.powi((t.power - k) as i32);
                if c != 0.0 {
                    terms.push(Term {
                        coef: base * c,
                        power: k,
                        rate: t.rate,
                    });
                }
            }
        }
        Self::new(terms)
    }

    /// `G(b) = int_0^inf e^{-theta y} f(b + y) dy`, requiring `theta` to exceed
    /// every rate carrying a nonzero coefficient.
    pub fn exp_weighted_tail(&self, theta: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.coef == 0.0 {
                continue;
            }
            let gap = theta - t.rate;
            if !(gap > 0.0) {
                return Err(Error::Consistency(format!(
                    "tail integral with weight rate {theta} diverges against term rate {}",
                    t.rate
                )));
            }
            // int_0^inf e^{-theta y} (b+y)^m e^{r(b+y)} dy
            //   = e^{rb} sum_j C(m, j) b^{m-j} j! / gap^{j+1}
            for j in 0..=t.power {
                terms.push(Term {
                    coef: t.coef * binomial(t.power, j) * factorial(j) / gap.powi(j as i32 + 1),
                    power: t.power - j,
                    rate: t.rate,
                });
            }
        }
        Ok(Self::new(terms))
    }

    /// Laplace transform `int_0^inf e^{-theta y} f(y) dy`.
    pub fn laplace(&self, theta: f64) -> Result<f64> {
        Ok(self.exp_weighted_tail(theta)?.eval_terms(0.0))
    }

    /// `(f * g)(x) = int_0^x f(x - s) g(s) ds` for pure exponential sums.
    pub fn convolve(&self, other: &ExpSum) -> Result<Self> {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                if a.power != 0 || b.power != 0 {
                    return Err(Error::Unsupported(
                        "convolution is implemented for pure exponential terms".into(),
                    ));
                }
                let c = a.coef * b.coef;
                let scale = a.rate.abs().max(b.rate.abs()).max(1.0);
                if (a.rate - b.rate).abs() <= COINCIDENT_RATE_REL * scale {
                    terms.push(Term {
                        coef: c,
                        power: 1,
                        rate: a.rate,
                    });
                } else {
                    let d = b.rate - a.rate;
                    terms.push(Term::exp(c / d, b.rate));
                    terms.push(Term::exp(-c / d, a.rate));
                }
            }
        }
        Ok(Self::new(terms))
    }

    /// Merges terms with identical `(power, rate)`, keeping first-seen order.
    pub fn merge_like_terms(&self) -> Vec<MergedTerm> {
        let mut merged: Vec<MergedTerm> = Vec::new();
        for t in &self.terms {
            match merged
                .iter_mut()
                .find(|m| m.term.power == t.power && m.term.rate == t.rate)
            {
                Some(m) => {
                    m.term.coef += t.coef;
                    m.magnitude += t.coef.abs();
                }
                None => merged.push(MergedTerm {
                    term: *t,
                    magnitude: t.coef.abs(),
                }),
            }
        }
        merged
    }

    /// Like-term merge that drops groups whose growth must cancel.
    ///
    /// Groups with positive rate are required to cancel to within `rel_tol`
    /// of their magnitude and are removed; anything larger is reported as an
    /// inconsistency. Other groups are kept.
    pub fn drop_cancelled_growth(&self, rel_tol: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for m in self.merge_like_terms() {
            if m.term.rate > 0.0 {
                if m.term.coef.abs() > rel_tol * m.magnitude {
                    return Err(Error::Consistency(format!(
                        "growing term x^{} e^{{{} x}} did not cancel: {} against magnitude {}",
                        m.term.power, m.term.rate, m.term.coef, m.magnitude
                    )));
                }
                continue;
            }
            if m.term.coef != 0.0 {
                terms.push(m.term);
            }
        }
        Ok(Self {
            terms,
            ..self.clone()
        })
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}
