//! Coupled cubic NLS system
//! `iΨ_{j,t} + Ψ_{j,xx} + (γ_j|Ψ_j|² + α|Ψ_k|²)Ψ_j = 0`, `k = 3 - j`.

mod io;
mod polar;

pub use io::{read_state, state_to_csv, write_state, StateMeta};
pub use polar::{rescale_to_slow, to_polar, ModulationField, AMPLITUDE_FLOOR};

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{self, Grid, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CnlsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid parameters: gamma1 = {gamma1}, gamma2 = {gamma2}, alpha = {alpha}")]
    InvalidParams { gamma1: f64, gamma2: f64, alpha: f64 },
    #[error("no wavetrain: squared amplitudes ({0}, {1}) must both be positive")]
    NonexistentWavetrain(f64, f64),
    #[error("wavenumber {k} is not commensurate with period {length}")]
    IncommensurateWavenumber { k: f64, length: f64 },
    #[error("|Psi_{component}| = {amplitude:e} falls below the polar-chart floor")]
    VacuumCrossing { component: usize, amplitude: f64 },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CnlsParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha: f64,
}

impl CnlsParams {
    /// `γ_j ∈ {-1, +1}`; `β = γ₁γ₂ - α²` must be bounded away from zero.
    /// `α = 0` (decoupled equations) is accepted.
    pub fn new(gamma1: f64, gamma2: f64, alpha: f64) -> Result<Self, CnlsError> {
        let p = Self { gamma1, gamma2, alpha };
        let sign_ok = |g: f64| g == 1.0 || g == -1.0;
        if !sign_ok(gamma1) || !sign_ok(gamma2) || !alpha.is_finite() || p.beta().abs() < 1e-10 {
            return Err(CnlsError::InvalidParams { gamma1, gamma2, alpha });
        }
        Ok(p)
    }

    pub fn beta(&self) -> f64 {
        self.gamma1 * self.gamma2 - self.alpha * self.alpha
    }

    /// Parameters with the two components exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            gamma1: self.gamma2,
            gamma2: self.gamma1,
            alpha: self.alpha,
        }
    }

    pub fn gamma(&self, j: usize) -> f64 {
        if j == 0 {
            self.gamma1
        } else {
            self.gamma2
        }
    }

    /// Carrier frequency `γ_j + α` of the unit background wavetrain.
    pub fn carrier(&self, j: usize) -> f64 {
        self.gamma(j) + self.alpha
    }
}

/// `Ψ_j = ψ_j exp(i(k_j x + ω_j t + θ_j⁰))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub k: [f64; 2],
    pub omega: [f64; 2],
    pub theta0: [f64; 2],
    pub psi: [f64; 2],
}

pub fn plane_wave(
    p: &CnlsParams,
    k: [f64; 2],
    omega: [f64; 2],
    theta0: [f64; 2],
) -> Result<PlaneWave, CnlsError> {
    let w1 = omega[0] + k[0] * k[0];
    let w2 = omega[1] + k[1] * k[1];
    let beta = p.beta();
    let a1 = (p.gamma2 * w1 - p.alpha * w2) / beta;
    let a2 = (p.gamma1 * w2 - p.alpha * w1) / beta;
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(CnlsError::NonexistentWavetrain(a1, a2));
    }
    Ok(PlaneWave {
        k,
        omega,
        theta0,
        psi: [a1.sqrt(), a2.sqrt()],
    })
}

pub fn evaluate_plane_wave(w: &PlaneWave, grid: Grid, t: f64) -> Result<CnlsState, CnlsError> {
    let length = grid.length();
    for &k in &w.k {
        let cycles = k * length / (2.0 * std::f64::consts::PI);
        if (cycles - cycles.round()).abs() > 1e-9 {
            return Err(CnlsError::IncommensurateWavenumber { k, length });
        }
    }
    let field = |j: usize| {
        SpectralField::from_complex_fn(grid, |x| {
            Complex64::from_polar(w.psi[j], w.k[j] * x + w.omega[j] * t + w.theta0[j])
        })
    };
    Ok(CnlsState {
        psi1: field(0),
        psi2: field(1),
        t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnlsState {
    pub psi1: SpectralField,
    pub psi2: SpectralField,
    pub t: f64,
}

impl CnlsState {
    pub fn new(psi1: SpectralField, psi2: SpectralField, t: f64) -> Result<Self, CnlsError> {
        psi1.grid().check_same(&psi2.grid())?;
        if !(psi1.is_finite() && psi2.is_finite() && t >= 0.0) {
            return Err(CnlsError::Spectral(SpectralError::InvalidArgument(
                "state must be finite with t >= 0".into(),
            )));
        }
        Ok(Self { psi1, psi2, t })
    }

    pub fn grid(&self) -> Grid {
        self.psi1.grid()
    }

    pub fn swapped(&self) -> Self {
        Self {
            psi1: self.psi2.clone(),
            psi2: self.psi1.clone(),
            t: self.t,
        }
    }
}

fn coeffs_of(f: &SpectralField) -> Vec<Complex64> {
    f.coefficients().to_vec()
}

fn linear_phase(grid: Grid, dt: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .map(|xi| Complex64::from_polar(1.0, -xi * xi * dt))
        .collect()
}

fn nonlinear_rotation(a: &mut [Complex64], b: &mut [Complex64], p: &CnlsParams, dt: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let n1 = x.norm_sqr();
        let n2 = y.norm_sqr();
        *x *= Complex64::from_polar(1.0, (p.gamma1 * n1 + p.alpha * n2) * dt);
        *y *= Complex64::from_polar(1.0, (p.gamma2 * n2 + p.alpha * n1) * dt);
    }
}

fn apply(mult: &[Complex64], c: &mut [Complex64]) {
    for (c, m) in c.iter_mut().zip(mult) {
        *c *= m;
    }
}

/// One Strang step: half linear, full nonlinear, half linear.
///
/// Both substeps are exact flows, so the scheme is unconditionally stable;
/// accuracy is governed by the splitting error, roughly `dt² ξ_max²`
/// times the nonlinearity.
pub fn step_cnls(state: &CnlsState, dt: f64, p: &CnlsParams) -> Result<CnlsState, CnlsError> {
    evolve(state, dt, 1, p)
}

/// `steps` Strang steps with adjacent linear half-steps fused.
pub fn evolve(
    state: &CnlsState,
    dt: f64,
    steps: usize,
    p: &CnlsParams,
) -> Result<CnlsState, CnlsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CnlsError::InvalidStep(dt));
    }
    if steps == 0 {
        return Ok(state.clone());
    }
    let grid = state.grid();
    let half = linear_phase(grid, 0.5 * dt);
    let full = linear_phase(grid, dt);
    let mut a = coeffs_of(&state.psi1);
    let mut b = coeffs_of(&state.psi2);
    apply(&half, &mut a);
    apply(&half, &mut b);
    for i in 0..steps {
        spectral::inverse(&mut a);
        spectral::inverse(&mut b);
        nonlinear_rotation(&mut a, &mut b, p, dt);
        spectral::forward(&mut a);
        spectral::forward(&mut b);
        let mult = if i + 1 == steps { &half } else { &full };
        apply(mult, &mut a);
        apply(mult, &mut b);
    }
    Ok(CnlsState {
        psi1: SpectralField::from_coefficients(grid, a, false)?,
        psi2: SpectralField::from_coefficients(grid, b, false)?,
        t: state.t + steps as f64 * dt,
    })
}

/// Advances to time `t_end` with steps no larger than `dt_max`, landing on
/// `t_end` exactly.
pub fn evolve_to(
    state: &CnlsState,
    t_end: f64,
    dt_max: f64,
    p: &CnlsParams,
) -> Result<CnlsState, CnlsError> {
    let span = t_end - state.t;
    if span < 0.0 {
        return Err(CnlsError::InvalidStep(span));
    }
    if span == 0.0 {
        return Ok(state.clone());
    }
    let steps = (span / dt_max).ceil().max(1.0) as usize;
    let mut out = evolve(state, span / steps as f64, steps, p)?;
    out.t = t_end;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub mass1: f64,
    pub mass2: f64,
    pub momentum: f64,
    pub hamiltonian: f64,
}

/// Masses, momentum and Hamiltonian per unit length.
///
/// `H = Σ ξ²(|Ψ̂₁|²+|Ψ̂₂|²) - ⟨½γ₁|Ψ₁|⁴ + α|Ψ₁|²|Ψ₂|² + ½γ₂|Ψ₂|⁴⟩`,
/// `⟨·⟩` the grid mean.
pub fn invariants(state: &CnlsState, p: &CnlsParams) -> Invariants {
    let grid = state.grid();
    let xi = grid.wavenumbers();
    let (mut m1, mut m2, mut mom, mut kin) = (0.0, 0.0, 0.0, 0.0);
    for (k, &x) in xi.iter().enumerate() {
        let a = state.psi1.coefficients()[k].norm_sqr();
        let b = state.psi2.coefficients()[k].norm_sqr();
        m1 += a;
        m2 += b;
        mom += x * (a + b);
        kin += x * x * (a + b);
    }
    let s1 = state.psi1.complex_samples();
    let s2 = state.psi2.complex_samples();
    let pot: f64 = s1
        .iter()
        .zip(&s2)
        .map(|(x, y)| {
            let (a, b) = (x.norm_sqr(), y.norm_sqr());
            0.5 * p.gamma1 * a * a + p.alpha * a * b + 0.5 * p.gamma2 * b * b
        })
        .sum::<f64>()
        / s1.len() as f64;
    Invariants {
        mass1: m1,
        mass2: m2,
        momentum: mom,
        hamiltonian: kin - pot,
    }
}
