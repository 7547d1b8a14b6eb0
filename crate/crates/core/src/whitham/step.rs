use serde::{Deserialize, Serialize};

use super::{classify, f_term, m_matrix, wme_rhs, Classification, Trajectory, WhithamError};
use crate::cnls::{CnlsParams, ModulationField};
use crate::spectral::{estimate_strip, Grid, SpectralError, SpectralField};

/// Bound on `dt · ρ` for the explicit fourth-order stage scheme
/// (the imaginary-axis stability interval of RK4 is `2√2 ≈ 2.83`).
pub const STABILITY_LIMIT: f64 = 2.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViscosityOrder {
    /// `β ∂²_X`
    Laplacian,
    /// `-β ∂⁴_X`
    BiLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscositySetting {
    pub beta: f64,
    pub order: ViscosityOrder,
}

impl ViscositySetting {
    pub fn laplacian(beta: f64) -> Self {
        Self {
            beta,
            order: ViscosityOrder::Laplacian,
        }
    }

    pub fn bilaplacian(beta: f64) -> Self {
        Self {
            beta,
            order: ViscosityOrder::BiLaplacian,
        }
    }

    pub fn inviscid() -> Self {
        Self::laplacian(0.0)
    }

    pub(crate) fn validate(&self) -> Result<(), WhithamError> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(WhithamError::InvalidViscosity(format!("beta = {}", self.beta)));
        }
        Ok(())
    }

    /// Fourier symbol `-βξ²` or `-βξ⁴`.
    pub fn symbol(&self, xi: f64) -> f64 {
        match self.order {
            ViscosityOrder::Laplacian => -self.beta * xi * xi,
            ViscosityOrder::BiLaplacian => -self.beta * xi.powi(4),
        }
    }
}

/// `ρ = ξ_c max_x ‖M(u(x))‖_∞ + ν ξ_c³`, with `ξ_c` the largest retained
/// wavenumber: a bound on the spectral radius of the explicit part.
pub fn stability_rate(u: &ModulationField, nu: f64, p: &CnlsParams) -> f64 {
    let xi = u.grid().dealiased_max_wavenumber();
    let m = u
        .point_values()
        .into_iter()
        .map(|pt| {
            let m = m_matrix(pt, p);
            (0..4)
                .map(|i| (0..4).map(|j| m[(i, j)].abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    xi * m + nu * xi.powi(3)
}

fn check_stability(u: &ModulationField, dt: f64, nu: f64, p: &CnlsParams) -> Result<(), WhithamError> {
    let rho = stability_rate(u, nu, p);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WhithamError::InvalidIntegration(format!("dt = {dt}")));
    }
    if dt * rho > STABILITY_LIMIT {
        return Err(WhithamError::StabilityBoundViolated {
            dt,
            limit: STABILITY_LIMIT / rho,
        });
    }
    Ok(())
}

/// Exponential factors `e^{L h}` for the viscosity symbol, per FFT index.
pub(crate) fn decay(grid: Grid, visc: &ViscositySetting, h: f64) -> Vec<f64> {
    grid.wavenumbers()
        .iter()
        .map(|&xi| (visc.symbol(xi) * h).exp())
        .collect()
}

pub(crate) fn apply_decay(u: &ModulationField, e: &[f64]) -> ModulationField {
    if e.iter().all(|&x| x == 1.0) {
        return u.clone();
    }
    u.map(|c| scale_modes(c, e))
}

fn scale_modes(c: &SpectralField, e: &[f64]) -> SpectralField {
    let coeffs = c.coefficients().iter().zip(e).map(|(z, &s)| z * s).collect();
    SpectralField::from_coefficients(c.grid(), coeffs, c.is_real()).expect("same grid")
}

/// One integrating-factor RK4 (Lawson) step of `y' = L y + N(y)` applied
/// to a stack of modulation fields sharing the linear operator `L`.
pub(crate) fn if_rk4(
    y: &[ModulationField],
    dt: f64,
    visc: &ViscositySetting,
    rhs: &dyn Fn(&[ModulationField]) -> Result<Vec<ModulationField>, WhithamError>,
) -> Result<Vec<ModulationField>, WhithamError> {
    let grid = y[0].grid();
    let e = decay(grid, visc, dt);
    let e2 = decay(grid, visc, 0.5 * dt);
    let h = 0.5 * dt;
    let comb = |a: &[ModulationField], s: f64, b: &[ModulationField]| -> Result<Vec<_>, SpectralError> {
        a.iter().zip(b).map(|(x, y)| x.axpy(s, y)).collect()
    };
    let lin = |a: &[ModulationField], f: &[f64]| -> Vec<ModulationField> { a.iter().map(|x| apply_decay(x, f)).collect() };

    let k1 = rhs(y)?;
    let a = lin(&comb(y, h, &k1)?, &e2);
    let k2 = rhs(&a)?;
    let ey2 = lin(y, &e2);
    let b = comb(&ey2, h, &k2)?;
    let k3 = rhs(&b)?;
    let ey = lin(y, &e);
    let c = comb(&ey, dt, &lin(&k3, &e2))?;
    let k4 = rhs(&c)?;
    let k1e = lin(&k1, &e);
    let k23 = lin(&comb(&k2, 1.0, &k3)?, &e2);
    let mut out = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        let inc = k1e[i].axpy(2.0, &k23[i])?.axpy(1.0, &k4[i])?;
        out.push(ey[i].axpy(dt / 6.0, &inc)?.with_t(y[i].t + dt));
    }
    Ok(out)
}

/// One step of `u_T = M(u)u_X + β∂²_X u`.
pub fn step_wme(
    u: &ModulationField,
    dt: f64,
    p: &CnlsParams,
    visc: &ViscositySetting,
) -> Result<ModulationField, WhithamError> {
    if visc.order != ViscosityOrder::Laplacian {
        return Err(WhithamError::InvalidViscosity(
            "the modulation equations use Laplacian viscosity".into(),
        ));
    }
    step_perturbed(u, dt, 0.0, p, visc)
}

/// One step of `u_T = M(u)u_X + νF(D³u) + viscosity`. For `ν > 0` with
/// `β > 0` the bi-Laplacian is required; at `ν = 0` this is exactly
/// [`step_wme`].
pub fn step_perturbed(
    u: &ModulationField,
    dt: f64,
    nu: f64,
    p: &CnlsParams,
    visc: &ViscositySetting,
) -> Result<ModulationField, WhithamError> {
    visc.validate()?;
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(WhithamError::InvalidIntegration(format!("nu = {nu}")));
    }
    if nu > 0.0 && visc.beta > 0.0 && visc.order != ViscosityOrder::BiLaplacian {
        return Err(WhithamError::InvalidViscosity(
            "nu > 0 needs bi-Laplacian viscosity".into(),
        ));
    }
    check_stability(u, dt, nu, p)?;
    let rhs = |y: &[ModulationField]| -> Result<Vec<ModulationField>, WhithamError> {
        let mut r = wme_rhs(&y[0], p)?;
        if nu > 0.0 {
            r = r.axpy(nu, &f_term(&y[0])?)?;
        }
        Ok(vec![r])
    };
    let mut out = if_rk4(std::slice::from_ref(u), dt, visc, &rhs)?;
    Ok(out.pop().expect("one field"))
}

/// Uniform-step integration plan: `steps` steps of size `dt`, a sample
/// every `stride` steps (the initial state included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    /// Minimum strip estimate demanded of elliptic data.
    pub strip_guard: f64,
}

impl Integration {
    pub fn new(dt: f64, steps: usize, stride: usize) -> Self {
        Self {
            dt,
            steps,
            stride,
            strip_guard: 0.1,
        }
    }

    /// Plan reaching `horizon` in steps of at most `dt_max` with
    /// `samples` equally spaced sample intervals.
    pub fn covering(horizon: f64, dt_max: f64, samples: usize) -> Self {
        let per = (horizon / (samples as f64 * dt_max)).ceil().max(1.0) as usize;
        let steps = per * samples;
        Self::new(horizon / steps as f64, steps, per)
    }

    pub(crate) fn validate(&self) -> Result<(), WhithamError> {
        if self.stride == 0 || self.steps % self.stride != 0 || !(self.dt > 0.0) {
            return Err(WhithamError::InvalidIntegration(format!(
                "dt {} steps {} stride {}",
                self.dt, self.steps, self.stride
            )));
        }
        Ok(())
    }

    pub fn sample_times(&self, t0: f64) -> Vec<f64> {
        (0..=self.steps / self.stride)
            .map(|k| t0 + (k * self.stride) as f64 * self.dt)
            .collect()
    }
}

/// Refuses elliptic data whose strip estimate falls below `guard`.
pub(crate) fn guard_elliptic(
    u0: &ModulationField,
    p: &CnlsParams,
    guard: f64,
) -> Result<(), WhithamError> {
    if classify(u0.mean_state(), p).classification != Classification::Elliptic {
        return Ok(());
    }
    let mut strip = f64::INFINITY;
    for c in u0.components() {
        let mut centred = c.clone();
        centred = centred.axpy(-1.0, &SpectralField::constant(c.grid(), c.mean()))?;
        match estimate_strip(&centred, 1e-13) {
            Ok(s) => strip = strip.min(s),
            Err(SpectralError::FewerThanThreeModes(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if strip < guard {
        return Err(WhithamError::EllipticWithoutStrip { strip, guard });
    }
    Ok(())
}

/// Integrates the perturbed system (the modulation equations at `ν = 0`)
/// and returns the sampled trajectory.
pub fn integrate(
    u0: &ModulationField,
    p: &CnlsParams,
    nu: f64,
    visc: &ViscositySetting,
    plan: &Integration,
) -> Result<Trajectory, WhithamError> {
    plan.validate()?;
    guard_elliptic(u0, p, plan.strip_guard)?;
    let times = plan.sample_times(u0.t);
    let mut out = vec![u0.clone()];
    let mut u = u0.clone();
    for (i, window) in times.windows(2).enumerate() {
        for _ in 0..plan.stride {
            u = step_perturbed(&u, plan.dt, nu, p, visc)?;
        }
        if !u.is_finite() {
            return Err(WhithamError::BlowUp(window[1]));
        }
        u.t = times[i + 1];
        out.push(u.clone());
    }
    Ok(out)
}

/// Richardson extrapolation to `β = 0` from runs at `β, β/2, β/4, …`
/// (ladder of length 1, 2 or 3).
pub fn extrapolate_beta(ladder: &[ModulationField]) -> Result<ModulationField, SpectralError> {
    match ladder {
        [u] => Ok(u.clone()),
        [a, b] => b.scale(2.0).axpy(-1.0, a),
        [a, b, c] => Ok(c
            .scale(8.0 / 3.0)
            .axpy(-2.0, b)?
            .axpy(1.0 / 3.0, a)?),
        _ => Err(SpectralError::InvalidArgument(format!(
            "beta ladder of length {} (expected 1 to 3)",
            ladder.len()
        ))),
    }
}
