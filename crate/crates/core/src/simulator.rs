//! Monte Carlo for the refracted surplus with Parisian ruin, used as an
//! independent oracle for the analytic formulas.
//!
//! Models without a Gaussian part are simulated exactly: between jumps the
//! path is linear with slope `c` below the refraction level and `c - K` above
//! it, so every upward crossing is found in closed form and downward
//! crossings only happen by jumps. Models with `sigma > 0` use Euler steps
//! between exact jump times and locate crossings by linear interpolation
//! inside a step, which biases excursion timing by `O(sqrt(h))`.
//!
//! Each path owns a ChaCha8 stream selected by its index, and path values are
//! reduced in index order, so estimates do not depend on thread scheduling.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{ControlParams, LevyModel, Variation};
use crate::numerics;
use crate::scale_functions::ScaleSet;

/// How the Parisian delay of an excursion below zero is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// One exponential clock drawn when the excursion starts.
    #[default]
    PerExcursion,
    /// Rate-`p` inspections while negative, redrawn on every path piece.
    PoissonInspection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Truncation time; `ln(1e4)/q` when unset.
    pub time_horizon: Option<f64>,
    /// Euler step, required when `sigma > 0`.
    pub euler_step: Option<f64>,
    pub start_x: f64,
    pub level_b: f64,
    #[serde(default)]
    pub clock: ClockMode,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64, start_x: f64, level_b: f64) -> Self {
        Self {
            n_paths,
            seed,
            time_horizon: None,
            euler_step: None,
            start_x,
            level_b,
            clock: ClockMode::PerExcursion,
        }
    }

    pub fn horizon(&self, q: f64) -> f64 {
        self.time_horizon.unwrap_or(1e4f64.ln() / q)
    }

    fn validate(&self, model: &LevyModel) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if !self.start_x.is_finite() {
            return Err(Error::Config(format!("start_x must be finite, got {}", self.start_x)));
        }
        if !(self.level_b >= 0.0) || !self.level_b.is_finite() {
            return Err(Error::Config(format!("level_b must be >= 0, got {}", self.level_b)));
        }
        if let Some(t) = self.time_horizon {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("time_horizon must be positive, got {t}")));
            }
        }
        match (model.variation(), self.euler_step) {
            (Variation::Unbounded, None) => Err(Error::Config(
                "euler_step is required for models with a Gaussian part".into(),
            )),
            (_, Some(h)) if !(h > 0.0) => {
                Err(Error::Config(format!("euler_step must be positive, got {h}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub ci95: (f64, f64),
    pub truncation_bias_bound: f64,
    pub seed: u64,
}

impl SimEstimate {
    fn from_samples(xs: &[f64], seed: u64, truncation_bias_bound: f64) -> Self {
        let (mean, std_error) = numerics::mean_and_std_error(xs);
        Self {
            mean,
            std_error,
            n_paths: xs.len(),
            ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
            truncation_bias_bound,
            seed,
        }
    }

    /// `(mean - target) / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }

    pub fn covers(&self, target: f64) -> bool {
        self.ci95.0 <= target && target <= self.ci95.1
    }
}

/// First-passage expectations of the uncontrolled process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `E_x[e^{-q tau_b^+}; tau_b^+ < tau_0^-] = W(x)/W(b)`.
    UpClassical,
    /// `E_x[e^{-q tau_b^+}; tau_b^+ < kappa_p] = Z_{q,p}(x)/Z_{q,p}(b)`.
    UpParisian,
    /// `E_x[e^{-q tau_0^-}; tau_0^- < tau_b^+] = Z(x) - Z(b)W(x)/W(b)`.
    DownBeforeUp,
    /// `E_x[e^{-q tau_0^-}; tau_0^- < inf] = Z(x) - q W(x)/Phi(q)`.
    DownEver,
}

impl Identity {
    pub const ALL: [Identity; 4] = [
        Identity::UpClassical,
        Identity::UpParisian,
        Identity::DownBeforeUp,
        Identity::DownEver,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::UpClassical => "up_classical",
            Identity::UpParisian => "up_parisian",
            Identity::DownBeforeUp => "down_before_up",
            Identity::DownEver => "down_ever",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name() == name)
    }

    fn needs_x_below_b(self) -> bool {
        !matches!(self, Identity::DownEver)
    }

    /// Closed-form value from the scale functions.
    pub fn analytic(self, scales: &ScaleSet, x: f64, b: f64) -> Result<f64> {
        if self.needs_x_below_b() && x > b {
            return Err(Error::Domain(format!("{} needs x <= b, got x={x}, b={b}", self.name())));
        }
        let s = &scales.x;
        Ok(match self {
            Identity::UpClassical => s.w(x) / s.w(b),
            Identity::UpParisian => s.z_qp(x) / s.z_qp(b),
            Identity::DownBeforeUp => s.z_q(x) - s.z_q(b) * s.w(x) / s.w(b),
            Identity::DownEver => s.z_q(x) - s.q * s.w(x) / s.phi_q,
        })
    }
}

/// Both sides of the identity for the process `Y = X - K t` stopped below `b`.
#[derive(Debug, Clone, Serialize)]
pub struct AppendixReport {
    pub b: f64,
    pub x: f64,
    /// Simulated `E_x[e^{-q nu_b^-} Z_{q,p}(Y_{nu_b^-}); nu_b^- < inf]`.
    pub lhs: SimEstimate,
    /// Right side from exponential sums.
    pub rhs_symbolic: f64,
    /// Right side with its first integral evaluated by quadrature of `w_b`.
    pub rhs_quadrature: f64,
    /// `K 𝕎(x-b) int_0^inf e^{-Phi_K z} Z_{q,p}'(b+z) dz` by quadrature.
    pub second_term_quadrature: f64,
    /// `(K / Phi_K) 𝕎(x-b) h_p(b)`.
    pub second_term_closed: f64,
    pub z_score: f64,
}

/// A stretch of continuous motion followed by an optional jump.
#[derive(Debug, Clone, Copy)]
struct Piece {
    t0: f64,
    u0: f64,
    t1: f64,
    /// Position at `t1` before the jump.
    u1: f64,
    /// Position right after a jump at `t1`.
    jump_to: Option<f64>,
}

/// Time in `[t0, t1]` where the linear interpolant crosses `level`.
fn crossing_time(pc: &Piece, level: f64) -> f64 {
    let du = pc.u1 - pc.u0;
    if du == 0.0 {
        return pc.t1;
    }
    pc.t0 + (pc.t1 - pc.t0) * ((level - pc.u0) / du).clamp(0.0, 1.0)
}

/// `int_{t1}^{t2} e^{-q s} ds`.
fn discount_integral(q: f64, t1: f64, t2: f64) -> f64 {
    ((-q * t1).exp() - (-q * t2).exp()) / q
}

/// Surplus path driven by the model, with the drift reduced by `k` whenever
/// the position is at or above `refraction`.
struct Walker {
    drift: f64,
    sigma: f64,
    k: f64,
    refraction: f64,
    jump_rate: f64,
    /// Cumulative jump rates and decay of each mixture component.
    components: Vec<(f64, f64)>,
    step: Option<f64>,
    t: f64,
    u: f64,
    next_jump: f64,
}

impl Walker {
    fn new(
        model: &LevyModel,
        k: f64,
        refraction: f64,
        step: Option<f64>,
        start: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut acc = 0.0;
        let components = model
            .jumps()
            .iter()
            .map(|j| {
                acc += j.rate;
                (acc, j.alpha)
            })
            .collect();
        let mut w = Self {
            drift: model.drift(),
            sigma: model.sigma(),
            k,
            refraction,
            jump_rate: model.jump_intensity(),
            components,
            step: if model.sigma() > 0.0 { step } else { None },
            t: 0.0,
            u: start,
            next_jump: f64::INFINITY,
        };
        w.next_jump = w.draw_arrival(rng);
        w
    }

    fn draw_arrival(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.jump_rate > 0.0 {
            let e: f64 = rng.sample(Exp1);
            self.t + e / self.jump_rate
        } else {
            f64::INFINITY
        }
    }

    fn draw_jump(&self, rng: &mut ChaCha8Rng) -> f64 {
        let pick = rng.random::<f64>() * self.jump_rate;
        let alpha = self
            .components
            .iter()
            .find(|(cum, _)| pick < *cum)
            .unwrap_or_else(|| self.components.last().expect("jump rate is positive"))
            .1;
        let e: f64 = rng.sample(Exp1);
        e / alpha
    }

    fn slope(&self) -> f64 {
        if self.u >= self.refraction {
            self.drift - self.k
        } else {
            self.drift
        }
    }

    /// Moves to the earliest of the next jump, `t_limit`, the first watched
    /// level above the current position (exact models) or one Euler step.
    fn advance(&mut self, rng: &mut ChaCha8Rng, t_limit: f64, watch: &[f64]) -> Piece {
        let (t0, u0) = (self.t, self.u);
        let slope = self.slope();
        let mut t1 = self.next_jump.min(t_limit);
        let u1 = match self.step {
            None => {
                let mut level_hit = None;
                if slope > 0.0 {
                    for &l in watch.iter().chain(std::iter::once(&self.refraction)) {
                        if l > u0 {
                            let tl = t0 + (l - u0) / slope;
                            if tl < t1 {
                                t1 = tl;
                                level_hit = Some(l);
                            }
                        }
                    }
                }
                level_hit.unwrap_or(u0 + slope * (t1 - t0))
            }
            Some(h) => {
                t1 = t1.min(t0 + h);
                let dt = t1 - t0;
                let n: f64 = rng.sample(StandardNormal);
                u0 + slope * dt + self.sigma * dt.sqrt() * n
            }
        };
        self.t = t1;
        self.u = u1;
        let jump_to = if t1 == self.next_jump {
            self.u -= self.draw_jump(rng);
            self.next_jump = self.draw_arrival(rng);
            Some(self.u)
        } else {
            None
        };
        Piece { t0, u0, t1, u1, jump_to }
    }
}

/// Parisian clock bookkeeping for excursions below zero.
struct ParisianClock {
    mode: ClockMode,
    clock: Exp<f64>,
    deadline: Option<f64>,
}

impl ParisianClock {
    fn new(mode: ClockMode, p: f64) -> Result<Self> {
        let clock = Exp::new(p).map_err(|e| Error::Config(format!("Parisian rate {p}: {e}")))?;
        Ok(Self { mode, clock, deadline: None })
    }

    fn start(&mut self, rng: &mut ChaCha8Rng, t: f64) {
        if self.mode == ClockMode::PerExcursion {
            self.deadline = Some(t + rng.sample(self.clock));
        }
    }

    /// Latest time the walker may run before the clock must be checked.
    fn limit(&self) -> f64 {
        self.deadline.unwrap_or(f64::INFINITY)
    }

    /// Ruin time inside the continuous part of `pc`, if any.
    fn on_motion(&mut self, rng: &mut ChaCha8Rng, pc: &Piece) -> Option<f64> {
        let (neg_start, neg_end) = match (pc.u0 < 0.0, pc.u1 < 0.0) {
            (true, true) => (pc.t0, pc.t1),
            (true, false) => (pc.t0, crossing_time(pc, 0.0)),
            (false, true) => {
                let tc = crossing_time(pc, 0.0);
                self.start(rng, tc);
                (tc, pc.t1)
            }
            (false, false) => return None,
        };
        let ruin = match self.mode {
            ClockMode::PerExcursion => self.deadline.filter(|&d| d <= neg_end),
            ClockMode::PoissonInspection => {
                let s = neg_start + rng.sample(self.clock);
                (s <= neg_end).then_some(s)
            }
        };
        if ruin.is_none() && pc.u1 >= 0.0 {
            self.deadline = None;
        }
        ruin
    }

    fn on_jump(&mut self, rng: &mut ChaCha8Rng, t: f64, before: f64, after: f64) {
        if before >= 0.0 && after < 0.0 {
            self.start(rng, t);
        }
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_paths<F>(cfg: &SimConfig, bias: f64, path: F) -> SimEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| path(&mut path_rng(cfg.seed, i)))
        .collect();
    SimEstimate::from_samples(&samples, cfg.seed, bias)
}

/// Discounted dividends of the refraction strategy at `level_b` paid until
/// Parisian ruin or the horizon.
pub fn simulate_value(
    model: &LevyModel,
    params: &ControlParams,
    config: &SimConfig,
) -> Result<SimEstimate> {
    params.validate(model)?;
    config.validate(model)?;
    let (q, k, b) = (params.q, params.k, config.level_b);
    let horizon = config.horizon(q);
    let bias = (-q * horizon).exp() * k / q;
    ParisianClock::new(config.clock, params.p)?;

    Ok(run_paths(config, bias, |rng| {
        let mut clock = ParisianClock::new(config.clock, params.p).expect("rate checked");
        let mut walker = Walker::new(model, k, b, config.euler_step, config.start_x, rng);
        if config.start_x < 0.0 {
            clock.start(rng, 0.0);
        }
        let mut paid = 0.0;
        loop {
            let pc = walker.advance(rng, horizon.min(clock.limit()), &[0.0]);
            let ruin = clock.on_motion(rng, &pc);
            let stop = ruin.unwrap_or(pc.t1);
            // dividends on the part of the piece at or above b, before ruin
            let (from, to) = match (pc.u0 >= b, pc.u1 >= b) {
                (true, true) => (pc.t0, stop),
                (false, true) => (crossing_time(&pc, b), stop),
                (true, false) => (pc.t0, crossing_time(&pc, b).min(stop)),
                (false, false) => (0.0, 0.0),
            };
            if to > from {
                paid += k * discount_integral(q, from, to);
            }
            if ruin.is_some() || pc.t1 >= horizon {
                return paid;
            }
            if let Some(after) = pc.jump_to {
                clock.on_jump(rng, pc.t1, pc.u1, after);
            }
        }
    }))
}

/// Monte Carlo estimate of one fluctuation identity for the uncontrolled
/// process started at `start_x`, with upper level `level_b`.
pub fn estimate_identity(
    model: &LevyModel,
    params: &ControlParams,
    config: &SimConfig,
    which: Identity,
) -> Result<SimEstimate> {
    params.validate(model)?;
    config.validate(model)?;
    let (x, b, q) = (config.start_x, config.level_b, params.q);
    if which.needs_x_below_b() && x > b {
        return Err(Error::Domain(format!("{} needs x <= b, got x={x}, b={b}", which.name())));
    }
    let horizon = config.horizon(q);
    let bias = (-q * horizon).exp();
    ParisianClock::new(config.clock, params.p)?;

    let watch: &[f64] = match which {
        Identity::DownEver => &[],
        _ => &[b],
    };
    let upper = match which {
        Identity::DownEver => f64::INFINITY,
        _ => b,
    };
    let reward_up = matches!(which, Identity::UpClassical | Identity::UpParisian);

    Ok(run_paths(config, bias, |rng| {
        let discount = |t: f64| (-q * t).exp();
        if x >= upper {
            return if reward_up { 1.0 } else { 0.0 };
        }
        if which == Identity::UpClassical && x < 0.0 {
            return 0.0;
        }
        if matches!(which, Identity::DownBeforeUp | Identity::DownEver) && x < 0.0 {
            return 1.0;
        }
        let mut clock = ParisianClock::new(config.clock, params.p).expect("rate checked");
        let mut walker = Walker::new(model, 0.0, f64::INFINITY, config.euler_step, x, rng);
        if which == Identity::UpParisian && x < 0.0 {
            clock.start(rng, 0.0);
        }
        loop {
            let pc = walker.advance(rng, horizon.min(clock.limit()), watch);
            match which {
                Identity::UpParisian => {
                    if clock.on_motion(rng, &pc).is_some() {
                        return 0.0;
                    }
                }
                _ if pc.u1 < 0.0 => {
                    // continuous passage below zero (Euler models only)
                    let tc = crossing_time(&pc, 0.0);
                    return if reward_up { 0.0 } else { discount(tc) };
                }
                _ => {}
            }
            if pc.u1 >= upper {
                return if reward_up { discount(crossing_time(&pc, upper)) } else { 0.0 };
            }
            if pc.t1 >= horizon {
                return 0.0;
            }
            if let Some(after) = pc.jump_to {
                match which {
                    Identity::UpParisian => clock.on_jump(rng, pc.t1, pc.u1, after),
                    _ if after < 0.0 => return if reward_up { 0.0 } else { discount(pc.t1) },
                    _ => {}
                }
            }
        }
    }))
}

/// Simulated and computed sides of the identity for `Y = X - K t` stopped at
/// its first passage below `b`, with payoff `Z_{q,p}(Y)`.
pub fn verify_appendix_identity(
    model: &LevyModel,
    params: &ControlParams,
    config: &SimConfig,
    b: f64,
    x: f64,
) -> Result<AppendixReport> {
    if !(b >= 0.0) {
        return Err(Error::Domain(format!("b must be >= 0, got {b}")));
    }
    if x < b {
        return Err(Error::Domain(format!("identity needs x >= b, got x={x}, b={b}")));
    }
    config.validate(model)?;
    let scales = ScaleSet::new(model, params)?;
    let (q, p, k) = (params.q, params.p, params.k);
    let s = &scales.x;
    let horizon = config.horizon(q);
    let bias = (-q * horizon).exp() * s.z_qp(b);

    let lhs = run_paths(config, bias, |rng| {
        let mut walker = Walker::new(model, k, f64::NEG_INFINITY, config.euler_step, x, rng);
        loop {
            let pc = walker.advance(rng, horizon, &[]);
            if pc.u1 < b {
                let tc = crossing_time(&pc, b);
                return (-q * tc).exp() * s.z_qp(b);
            }
            if let Some(after) = pc.jump_to {
                if after < b {
                    return (-q * pc.t1).exp() * s.z_qp(after);
                }
            }
            if pc.t1 >= horizon {
                return 0.0;
            }
        }
    });

    let phi_k = scales.phi_k;
    let h_b = {
        let zp = s.z_qp_prime_sum().exp_weighted_tail(phi_k)?.scale(phi_k);
        zp.eval_terms(b)
    };
    let w_ref_xb = scales.w_ref(x - b);
    let second_term_closed = k / phi_k * w_ref_xb * h_b;

    let tail_z = 40.0 / (phi_k - s.phi_q);
    let laplace_zp = numerics::integrate(
        |z| (-phi_k * z).exp() * s.z_qp_prime(b + z),
        0.0,
        tail_z,
        1.0,
        1e-14,
    );
    let second_term_quadrature = k * w_ref_xb * laplace_zp;

    // p int_0^inf e^{-Phi(p+q) y} w_b(x; -y) dy
    let conv = scales
        .w_ref_sum()
        .convolve(&s.z_qp_prime_sum().shift(b))?
        .eval_terms(x - b);
    let first_symbolic = s.z_qp(x) + k * conv;
    let tail_y = 40.0 / (s.phi_pq - s.phi_q);
    let aux_err = std::cell::RefCell::new(None);
    let first_quadrature = p * numerics::integrate(
        |y| match scales.w_aux(b, x, -y) {
            Ok(v) => (-s.phi_pq * y).exp() * v,
            Err(e) => {
                aux_err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        tail_y,
        1.0,
        1e-13,
    );
    if let Some(e) = aux_err.into_inner() {
        return Err(e);
    }

    let rhs_symbolic = first_symbolic - second_term_closed;
    Ok(AppendixReport {
        b,
        x,
        z_score: lhs.z_score(rhs_symbolic),
        lhs,
        rhs_symbolic,
        rhs_quadrature: first_quadrature - second_term_quadrature,
        second_term_quadrature,
        second_term_closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpTerm;

    fn m1() -> LevyModel {
        LevyModel::cramer_lundberg(1.5, vec![JumpTerm { rate: 1.0, alpha: 1.0 }]).unwrap()
    }

    #[test]
    fn zero_paths_is_a_config_error() {
        let cfg = SimConfig::new(0, 1, 1.0, 0.0);
        let params = ControlParams::new(0.1, 0.5, 0.5);
        assert!(matches!(simulate_value(&m1(), &params, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn diffusion_requires_step() {
        let bm = LevyModel::brownian(2f64.sqrt(), 0.0).unwrap();
        let cfg = SimConfig::new(10, 1, 1.0, 0.0);
        let params = ControlParams::new(0.1, 0.5, 0.5);
        assert!(matches!(simulate_value(&bm, &params, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_estimate() {
        let params = ControlParams::new(0.1, 0.5, 0.5);
        let cfg = SimConfig::new(2000, 42, 1.0, 0.5);
        let a = simulate_value(&m1(), &params, &cfg).unwrap();
        let b = simulate_value(&m1(), &params, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn upward_identities_are_one_at_the_level() {
        let params = ControlParams::new(0.1, 0.5, 0.5);
        let cfg = SimConfig::new(100, 3, 2.0, 2.0);
        for id in [Identity::UpClassical, Identity::UpParisian] {
            let est = estimate_identity(&m1(), &params, &cfg, id).unwrap();
            assert_eq!(est.mean, 1.0);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn upward_identity_rejects_start_above_level() {
        let params = ControlParams::new(0.1, 0.5, 0.5);
        let cfg = SimConfig::new(100, 3, 2.5, 2.0);
        assert!(matches!(
            estimate_identity(&m1(), &params, &cfg, Identity::UpParisian),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn appendix_rejects_start_below_level() {
        let params = ControlParams::new(0.1, 0.5, 0.5);
        let cfg = SimConfig::new(100, 3, 0.0, 0.0);
        assert!(matches!(
            verify_appendix_identity(&m1(), &params, &cfg, 1.0, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn walker_creeps_exactly_onto_levels() {
        let mut rng = path_rng(9, 0);
        let mut w = Walker::new(&m1(), 0.5, 1.0, None, 0.0, &mut rng);
        for _ in 0..200 {
            let pc = w.advance(&mut rng, 50.0, &[0.0]);
            if pc.jump_to.is_none() && pc.t1 < 50.0 {
                assert!(pc.u1 == 0.0 || pc.u1 == 1.0, "stopped at {}", pc.u1);
            }
            let slope = if pc.u0 >= 1.0 { 1.0 } else { 1.5 };
            assert!((pc.u1 - pc.u0 - slope * (pc.t1 - pc.t0)).abs() < 1e-12);
            if pc.t1 >= 50.0 {
                break;
            }
        }
    }

    #[test]
    fn appendix_sub_identity_is_exact() {
        let params = ControlParams::new(0.1, 0.5, 0.5);
        let cfg = SimConfig::new(10, 3, 2.0, 1.0);
        let rep = verify_appendix_identity(&m1(), &params, &cfg, 1.0, 2.0).unwrap();
        let rel = (rep.second_term_quadrature - rep.second_term_closed).abs()
            / rep.second_term_closed;
        assert!(rel < 1e-10, "{rel}");
        assert!((rep.rhs_quadrature - rep.rhs_symbolic).abs() < 1e-8);
    }
}
