//! JSON run configuration and its validation.

use serde::{Deserialize, Serialize};

use refraction::levy_model::{ControlParams, JumpTerm, LevyModel};
use refraction::simulator::ClockMode;

use crate::CliError;

pub const DEFAULT_EULER_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default)]
    pub sigma: f64,
    /// Linear drift, used when `sigma > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Premium rate, used when `sigma = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default)]
    pub jumps: Vec<JumpTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { x_min: -2.0, x_max: 10.0, n_points: 241 }
    }
}

impl GridBlock {
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.x_min];
        }
        let h = (self.x_max - self.x_min) / (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| self.x_min + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub paths: usize,
    pub seed: u64,
    /// Truncation time; `ln(1e4)/q` when absent.
    pub horizon: Option<f64>,
    pub step: f64,
    #[serde(default)]
    pub clock: ClockMode,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            paths: 100_000,
            seed: 1,
            horizon: None,
            step: DEFAULT_EULER_STEP,
            clock: ClockMode::PerExcursion,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub control: ControlParams,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub sim: SimBlock,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.levy_model()?;
        let c = &self.control;
        for (name, v) in [("control.q", c.q), ("control.p", c.p), ("control.K", c.k)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let g = &self.grid;
        if g.n_points == 0 {
            return Err(CliError::Config("grid.n_points must be positive".into()));
        }
        if !(g.x_max >= g.x_min) || !g.x_min.is_finite() || !g.x_max.is_finite() {
            return Err(CliError::Config(format!(
                "grid.x_max ({}) must be >= grid.x_min ({})",
                g.x_max, g.x_min
            )));
        }
        let s = &self.sim;
        if s.paths == 0 {
            return Err(CliError::Config("sim.paths must be positive".into()));
        }
        if !(s.step > 0.0) {
            return Err(CliError::Config(format!("sim.step must be positive, got {}", s.step)));
        }
        if let Some(t) = s.horizon {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("sim.horizon must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn levy_model(&self) -> Result<LevyModel, CliError> {
        let m = &self.model;
        let model = if m.sigma == 0.0 {
            let c = m
                .c
                .ok_or_else(|| CliError::Config("model.c is required when model.sigma = 0".into()))?;
            if m.mu.is_some() {
                return Err(CliError::Config(
                    "model.mu applies only when model.sigma > 0; use model.c".into(),
                ));
            }
            LevyModel::cramer_lundberg(c, m.jumps.clone())
        } else {
            let mu = m
                .mu
                .ok_or_else(|| CliError::Config("model.mu is required when model.sigma > 0".into()))?;
            if m.c.is_some() {
                return Err(CliError::Config(
                    "model.c applies only when model.sigma = 0; use model.mu".into(),
                ));
            }
            LevyModel::jump_diffusion(m.sigma, mu, m.jumps.clone())
        }
        .map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.control
            .validate(&model)
            .map_err(|e| CliError::Config(format!("control: {e}")))?;
        Ok(model)
    }
}
