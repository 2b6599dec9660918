//! Scalar root finding, convex minimization, quadrature and summation helpers.
//!
//! Root refinement is delegated to Brent's method from the `roots` crate and
//! quadrature to the double-exponential rule from `quadrature`; this module
//! adds bracketing, relative-tolerance stopping and interval splitting.

use roots::{find_root_brent, Convergency};

use crate::error::{Error, Result};

/// Relative tolerance used for every root of the Laplace exponent.
pub const ROOT_REL_TOL: f64 = 1e-13;

const MAX_BRENT_ITER: usize = 400;
const MAX_EXPANSIONS: usize = 200;

/// Stops Brent once the bracket is relatively tight or an exact zero is hit.
struct RelativeTolerance {
    rel: f64,
    abs: f64,
}

impl Convergency<f64> for RelativeTolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.rel * x1.abs().max(x2.abs()) + self.abs
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= MAX_BRENT_ITER
    }
}

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
///
/// `abs_tol` is added to the relative bracket width test so roots at or near
/// zero terminate.
pub fn brent<F>(f: F, lo: f64, hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})"
        )));
    }
    let mut conv = RelativeTolerance {
        rel: rel_tol,
        abs: abs_tol,
    };
    find_root_brent(lo, hi, &f, &mut conv)
        .map_err(|e| Error::RootFinding(format!("brent on [{lo}, {hi}]: {e:?}")))
}

/// Grows `hi` geometrically from `start` until `pred(hi)` holds.
pub fn expand_until<P>(start: f64, factor: f64, pred: P) -> Result<f64>
where
    P: Fn(f64) -> bool,
{
    let mut hi = start;
    for _ in 0..MAX_EXPANSIONS {
        if pred(hi) {
            return Ok(hi);
        }
        hi *= factor;
    }
    Err(Error::RootFinding(format!(
        "bracket expansion from {start} did not terminate"
    )))
}

/// Minimizer of a convex function on `[lo, inf)` through its derivative.
///
/// Returns `lo` when the derivative is already nonnegative there, otherwise
/// brackets the sign change of `df` by doubling and refines it with Brent.
pub fn argmin_convex<D>(df: D, lo: f64, rel_tol: f64) -> Result<f64>
where
    D: Fn(f64) -> f64,
{
    if df(lo) >= 0.0 {
        return Ok(lo);
    }
    let step = expand_until(1.0, 2.0, |h| df(lo + h) > 0.0)?;
    brent(&df, lo, lo + step, rel_tol, 1e-15)
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns the final bracket `(a, b)` once `b - a <= width`.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, width: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

/// Bisection on the sign of a nondecreasing `g` inside `[lo, hi]`.
pub fn bisect_sign<G>(g: G, mut lo: f64, mut hi: f64, width: f64) -> f64
where
    G: Fn(f64) -> f64,
{
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integral of a smooth `f` over `[a, b]` with double-exponential quadrature.
///
/// The interval is cut into pieces no longer than `max_piece` so that the
/// fixed-depth rule stays accurate for exponentially varying integrands.
pub fn integrate<F>(f: F, a: f64, b: f64, max_piece: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let pieces = ((b - a) / max_piece).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let tol = abs_tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == pieces { b } else { lo + h };
            quadrature::integrate(&f, lo, hi, tol).integral
        })
        .sum()
}

/// Pairwise (cascade) summation; the result depends only on element order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean, with pairwise reductions.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt_two() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_missing_bracket() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0),
            Err(Error::RootFinding(_))
        ));
    }

    #[test]
    fn argmin_of_shifted_parabola() {
        let x = argmin_convex(|x| 2.0 * (x - 3.5), 0.0, 1e-14).unwrap();
        assert!((x - 3.5).abs() < 1e-12);
        assert_eq!(argmin_convex(|x| 2.0 * (x + 1.0), 0.0, 1e-14).unwrap(), 0.0);
    }

    #[test]
    fn golden_section_brackets_minimum() {
        let (a, b) = golden_section(|x| (x - 1.25).powi(2), 0.0, 4.0, 1e-6);
        assert!(a <= 1.25 && 1.25 <= b && b - a <= 1e-6);
    }

    #[test]
    fn integrate_exponential() {
        let v = integrate(|x| (-x).exp(), 0.0, 40.0, 2.0, 1e-14);
        assert!((v - (1.0 - (-40f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
