use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::cnls::CnlsParams;
use crate::correctors::MAX_ORDER;

/// How the dispersive coupling of the comparison target depends on `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuRelation {
    /// `ν = ε²`
    EpsSquared,
    /// `ν = 0`: correctors are built but never added.
    Zero,
}

/// Everything a validity run needs. Field names double as the keys of the
/// TOML config file; missing keys take the headline defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha: f64,

    /// Coefficient scale `a` in `c_m = a e^{-σ₀ξ_m} s_m`.
    pub amplitude: f64,
    pub sigma0: f64,
    /// Highest slow wavenumber carried by the data.
    pub data_bandwidth: f64,
    pub seed: u64,

    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub nu_relation: NuRelation,

    pub slow_length: f64,
    pub slow_modes: usize,
    pub fast_modes: usize,
    /// Grid of the modulation solver; results are resampled to `slow_modes`.
    pub wme_modes: usize,
    pub cnls_dt: f64,
    pub wme_dt: f64,
    pub betas: Vec<f64>,
    /// Number of sample intervals on `[0, T₁]`.
    pub samples: usize,
    pub horizon: f64,
    /// Run each CNLS comparison again at `dt/4` on twice the grid.
    pub reference_run: bool,

    /// Gevrey exponent used by the strip monitor.
    pub s_evolution: f64,
    /// Error norm `G⁰_σ`; defaults to `σ₀/2`.
    pub sigma_error: f64,
    pub order: usize,
    pub phase_b: f64,
    pub phase_points: usize,

    pub residual_nus: Vec<f64>,
    /// Strip margin `δ` as a fraction of `σ₀`.
    pub residual_delta: f64,
    pub residual_samples: usize,

    pub algebra_samples: usize,
    pub monitor_samples: usize,
    pub strip_guard: f64,

    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gamma1: -1.0,
            gamma2: -1.0,
            alpha: 0.3,
            amplitude: 0.05,
            sigma0: 1.0,
            data_bandwidth: 1.0,
            seed: 20240611,
            eps: vec![0.2, 0.1, 0.05],
            nu_relation: NuRelation::EpsSquared,
            slow_length: 16.0 * PI,
            slow_modes: 256,
            fast_modes: 1024,
            wme_modes: 512,
            cnls_dt: 1e-3,
            wme_dt: 2e-3,
            betas: vec![1e-3, 5e-4, 2.5e-4],
            samples: 50,
            horizon: 0.5,
            reference_run: true,
            s_evolution: 2.0,
            sigma_error: 0.5,
            order: 0,
            phase_b: 0.0,
            phase_points: 41,
            residual_nus: vec![0.04, 0.02, 0.01, 0.005],
            residual_delta: 0.1,
            residual_samples: 100,
            algebra_samples: 64,
            monitor_samples: 40,
            strip_guard: 0.1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Corrected-approximation default: the larger `ε` ladder, `n = 1`.
    pub fn higher_order() -> Self {
        Self {
            eps: vec![0.3, 0.2, 0.14, 0.1],
            order: 1,
            ..Self::default()
        }
    }

    /// Phase comparison headline: a smaller `ε` ladder, where the leading
    /// `ε` term dominates the `ε²` one.
    pub fn phase() -> Self {
        Self {
            eps: vec![0.1, 0.05, 0.025],
            ..Self::default()
        }
    }

    pub fn params(&self) -> Result<CnlsParams, ValidateError> {
        Ok(CnlsParams::new(self.gamma1, self.gamma2, self.alpha)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, ValidateError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ValidateError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ValidateError> {
        Self::default().load_over(path)
    }

    /// Keys present in `text` replace those of `self`.
    pub fn overlay(&self, text: &str) -> Result<Self, ValidateError> {
        let cfg_err = |e: toml::de::Error| ValidateError::Config(e.to_string());
        let mut table: toml::Table = toml::from_str(&self.to_toml()).map_err(cfg_err)?;
        let top: toml::Table = toml::from_str(text).map_err(cfg_err)?;
        table.extend(top);
        let cfg: Self = table.try_into().map_err(cfg_err)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load_over(&self, path: &Path) -> Result<Self, ValidateError> {
        let text = std::fs::read_to_string(path).map_err(|e| ValidateError::Io(format!("{}: {e}", path.display())))?;
        self.overlay(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn nu(&self, eps: f64) -> f64 {
        match self.nu_relation {
            NuRelation::EpsSquared => eps * eps,
            NuRelation::Zero => 0.0,
        }
    }

    pub fn check(&self) -> Result<(), ValidateError> {
        let bad = |m: String| Err(ValidateError::Config(m));
        self.params()?;
        if self.eps.len() < 3 {
            return bad(format!("need at least 3 eps values, got {}", self.eps.len()));
        }
        if self.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("eps values must lie in (0, 1)".into());
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps grid must be strictly decreasing".into());
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude {}", self.amplitude));
        }
        if !(self.sigma0 > 0.0) || !(self.data_bandwidth > 0.0) {
            return bad("sigma0 and data_bandwidth must be positive".into());
        }
        if !(self.sigma_error > 0.0 && self.sigma_error <= self.sigma0) {
            return bad(format!("sigma_error {} outside (0, sigma0]", self.sigma_error));
        }
        if !(self.horizon > 0.0) || self.samples < 4 || self.residual_samples < 8 {
            return bad("horizon must be positive, samples >= 4, residual_samples >= 8".into());
        }
        if self.residual_samples % 2 != 0 {
            return bad("residual_samples must be even".into());
        }
        if !(self.cnls_dt > 0.0) || !(self.wme_dt > 0.0) {
            return bad("time steps must be positive".into());
        }
        if self.betas.is_empty() || self.betas.len() > 3 || self.betas.iter().any(|&b| !(b >= 0.0)) {
            return bad("betas: one to three non-negative values".into());
        }
        if self.order > MAX_ORDER {
            return bad(format!("order {} above {MAX_ORDER}", self.order));
        }
        if self.fast_modes < self.slow_modes || self.wme_modes < self.slow_modes {
            return bad("fast_modes and wme_modes must be at least slow_modes".into());
        }
        if !(self.phase_b >= 0.0) || self.phase_points < 2 {
            return bad("phase_b must be non-negative and phase_points >= 2".into());
        }
        if !(self.residual_delta > 0.0 && self.residual_delta < 0.5) {
            return bad("residual_delta must lie in (0, 0.5)".into());
        }
        Ok(())
    }
}
