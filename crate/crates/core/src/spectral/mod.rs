//! Periodic pseudospectral fields.
//!
//! A [`SpectralField`] stores the Fourier coefficients of a function on the
//! torus `[0, L)` with the convention `u(x) = Σ_m û_m exp(i ξ_m x)`,
//! `ξ_m = 2πm/L`, `m ∈ {-N/2+1, …, N/2}`. Coefficients are kept in FFT order
//! (index `k` holds mode `k` for `k <= N/2` and mode `k - N` above).

mod field;
mod gevrey;
pub mod io;

pub use field::{EntireFn, SpectralField};
pub(crate) use gevrey::least_squares;
pub use gevrey::{
    algebra_ratio, apriori_algebra_constant, apriori_product_constant, composition_bound,
    estimate_strip, gevrey_norm, gevrey_norm_components, measure_algebra_constant, product_ratio, random_band_limited,
    shift_constant, GevreyIndex, StripSchedule, MAX_WEIGHT_EXPONENT,
};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: length {length}, modes {modes} (need L > 0, N even and N >= 8)")]
    InvalidGrid { length: f64, modes: usize },
    #[error("grid mismatch: ({0:?}) vs ({1:?})")]
    GridMismatch(Grid, Grid),
    #[error("coefficient array has length {got}, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("strip too wide: sigma*(|xi|+1) = {exponent:.3} exceeds {limit}")]
    StripTooWide { exponent: f64, limit: f64 },
    #[error("non-real input to a real-only operation")]
    NonRealInput,
    #[error("derivative order {0} unsupported (expected 1..=4)")]
    UnsupportedOrder(u32),
    #[error("only {0} usable modes above the floor; need at least 3")]
    FewerThanThreeModes(usize),
    #[error("invalid Gevrey index: s = {s}, sigma = {sigma}")]
    InvalidIndex { s: f64, sigma: f64 },
    #[error("invalid strip schedule: sigma0 = {sigma0}, eta = {eta}")]
    InvalidSchedule { sigma0: f64, eta: f64 },
    #[error("time {t} outside the strip lifespan [0, {lifespan}]")]
    ScheduleExhausted { t: f64, lifespan: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Uniform periodic collocation grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    length: f64,
    modes: usize,
}

impl Grid {
    pub fn new(length: f64, modes: usize) -> Result<Self, SpectralError> {
        if !(length > 0.0 && length.is_finite()) || modes < 8 || modes % 2 != 0 {
            return Err(SpectralError::InvalidGrid { length, modes });
        }
        Ok(Self { length, modes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Same mode count on a domain scaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self, SpectralError> {
        Self::new(self.length * factor, self.modes)
    }

    /// Signed mode number stored at FFT index `k`.
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.modes as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT index of signed mode `m` (taken modulo N).
    pub fn index(&self, m: i64) -> usize {
        m.rem_euclid(self.modes as i64) as usize
    }

    pub fn wavenumber(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.length
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.modes).map(|k| self.wavenumber(self.mode(k))).collect()
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber(self.modes as i64 / 2)
    }

    /// Largest retained |m| under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.modes as i64 / 3
    }

    pub fn dealiased_max_wavenumber(&self) -> f64 {
        self.wavenumber(self.dealias_cutoff())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.modes as f64
    }

    /// Collocation points `x_j = j L / N`.
    pub fn points(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.modes).map(|j| j as f64 * dx).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<(), SpectralError> {
        if self == other {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch(*self, *other))
        }
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Grid samples to coefficients: `û_m = (1/N) Σ_j u_j exp(-i ξ_m x_j)`.
pub(crate) fn forward(samples: &mut [Complex64]) {
    let n = samples.len();
    plans(n).0.process(samples);
    let scale = 1.0 / n as f64;
    for c in samples.iter_mut() {
        *c *= scale;
    }
}

/// Coefficients to grid samples.
pub(crate) fn inverse(coeffs: &mut [Complex64]) {
    let n = coeffs.len();
    plans(n).1.process(coeffs);
}
