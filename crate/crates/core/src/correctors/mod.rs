//! Higher-order modulation approximations.
//!
//! Expanding `u = u⁰ + νu¹ + ν²u² + …` in `u_T = M(u)u_X + νF(D³u)` gives
//! the modulation equations for `u⁰` and, for `n ≥ 1`, the linear
//! inhomogeneous problems
//! `uⁿ_T = M(u⁰)uⁿ_X + (DM(u⁰)uⁿ)u⁰_X + Fₙ`, `uⁿ(0) = 0`, with
//! `F₁ = F(u⁰)` and
//! `F₂ = DF(u⁰)[u¹] + ½D²M(u⁰)[u¹,u¹]u⁰_X + (DM(u⁰)u¹)u¹_X`.

mod residual;

pub use residual::{
    checked_residual, fit_order, residual, residual_scaling, time_derivative, write_residual_report,
    OrderFit, ResidualNorm, ResidualReport, ResidualRow,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::cnls::{CnlsParams, ModulationField};
use crate::spectral::{SpectralError, SpectralField};
use crate::whitham::{
    self, dm_times, f_term, half_d2m_times, m_times, pointwise, stability_rate, wme_rhs,
    Integration, Trajectory, ViscositySetting, WhithamError, STABILITY_LIMIT,
};

/// Deepest supported corrector.
pub const MAX_ORDER: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error(transparent)]
    Whitham(#[from] WhithamError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("corrector order {0} unsupported (1..=2)")]
    OrderUnsupported(usize),
    #[error("time grid too coarse at T = {t}: halving changes the residual by {diff:e} (sup residual {res:e})")]
    TimeGridTooCoarse { t: f64, diff: f64, res: f64 },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("bundle lacks level {0}")]
    IncompleteBundle(usize),
}

/// Trajectories `u⁰ … uⁿ` on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionBundle {
    pub order: usize,
    pub levels: Vec<Trajectory>,
    pub plan: Integration,
    /// Viscosities the levels were computed with; several entries mean the
    /// levels are a Richardson extrapolation over this ladder.
    pub betas: Vec<f64>,
}

impl ExpansionBundle {
    pub fn times(&self) -> Vec<f64> {
        self.levels[0].iter().map(|u| u.t).collect()
    }

    /// The levels at sample `k`.
    pub fn at(&self, k: usize) -> Vec<&ModulationField> {
        self.levels.iter().map(|l| &l[k]).collect()
    }
}

/// `L(u⁰)w = M(u⁰)∂w + (DM(u⁰)w)∂u⁰`.
pub fn linearized(
    u0: &ModulationField,
    w: &ModulationField,
    p: &CnlsParams,
) -> Result<ModulationField, SpectralError> {
    pointwise(&[u0, w], |v, d| {
        let a = m_times(v[0], p, d[1]);
        let b = dm_times(v[0], p, v[1], d[0]);
        [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
    })
}

fn df_component(r0: &SpectralField, w: &SpectralField) -> Result<SpectralField, SpectralError> {
    let cross = r0.derivative(1)?.product(&w.derivative(1)?)?.scale(2.0);
    w.derivative(3)?.add(&cross.derivative(1)?)
}

/// `DF(u⁰)[w] = (0, ∂³w_{r₁} + ∂(2∂r⁰₁ ∂w_{r₁}), 0, …)`.
pub fn df_apply(u0: &ModulationField, w: &ModulationField) -> Result<ModulationField, SpectralError> {
    let z = SpectralField::zeros(u0.grid(), true);
    Ok(ModulationField {
        r1: z.clone(),
        v1: df_component(&u0.r1, &w.r1)?,
        r2: z,
        v2: df_component(&u0.r2, &w.r2)?,
        t: u0.t,
    })
}

/// `Fₙ` at one time sample, from the lower levels `[u⁰, …, u^{n-1}]`.
pub fn corrector_forcing(
    n: usize,
    lower: &[&ModulationField],
    p: &CnlsParams,
) -> Result<ModulationField, CorrectorError> {
    if n == 0 || n > MAX_ORDER {
        return Err(CorrectorError::OrderUnsupported(n));
    }
    if lower.len() < n {
        return Err(CorrectorError::IncompleteBundle(lower.len()));
    }
    let u0 = lower[0];
    if n == 1 {
        return Ok(f_term(u0)?);
    }
    let u1 = lower[1];
    let quad = pointwise(&[u0, u1], |v, d| {
        let a = half_d2m_times(v[0], p, v[1], d[0]);
        let b = dm_times(v[0], p, v[1], d[1]);
        [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
    })?;
    Ok(quad.axpy(1.0, &df_apply(u0, u1)?)?)
}

/// Forcing hook used by [`integrate_hierarchy`]: `(n, [u⁰ … u^{n-1}]) ↦ Fₙ`.
pub type Forcing<'a> = dyn Fn(usize, &[&ModulationField]) -> Result<ModulationField, CorrectorError> + Sync + 'a;

/// Integrates `u⁰ … u^order` jointly (each level with the same viscosity)
/// so every corrector sees `u⁰` at the exact stage values.
pub fn integrate_hierarchy(
    u0: &ModulationField,
    order: usize,
    p: &CnlsParams,
    visc: &ViscositySetting,
    plan: &Integration,
    forcing: &Forcing,
) -> Result<Vec<Trajectory>, CorrectorError> {
    if order > MAX_ORDER {
        return Err(CorrectorError::OrderUnsupported(order));
    }
    let times = plan.sample_times(u0.t);
    if plan.stride == 0 || plan.steps % plan.stride != 0 {
        return Err(WhithamError::InvalidIntegration("stride must divide steps".into()).into());
    }
    visc.validate()?;
    whitham::guard_elliptic(u0, p, plan.strip_guard)?;

    let rhs = |y: &[ModulationField]| -> Result<Vec<ModulationField>, WhithamError> {
        let inner = || -> Result<Vec<ModulationField>, CorrectorError> {
            let mut out = vec![wme_rhs(&y[0], p)?];
            for n in 1..y.len() {
                let lower: Vec<&ModulationField> = y[..n].iter().collect();
                let f = forcing(n, &lower)?;
                out.push(linearized(&y[0], &y[n], p)?.axpy(1.0, &f)?);
            }
            Ok(out)
        };
        inner().map_err(|e| match e {
            CorrectorError::Whitham(w) => w,
            CorrectorError::Spectral(s) => WhithamError::Spectral(s),
            other => WhithamError::InvalidIntegration(other.to_string()),
        })
    };

    let mut y: Vec<ModulationField> = (0..=order)
        .map(|n| if n == 0 { u0.clone() } else { ModulationField::zeros(u0.grid(), u0.t) })
        .collect();
    let mut levels: Vec<Trajectory> = y.iter().map(|u| vec![u.clone()]).collect();
    for k in 1..times.len() {
        for _ in 0..plan.stride {
            let rho = stability_rate(&y[0], 0.0, p);
            if plan.dt * rho > STABILITY_LIMIT {
                return Err(WhithamError::StabilityBoundViolated {
                    dt: plan.dt,
                    limit: STABILITY_LIMIT / rho,
                }
                .into());
            }
            y = whitham::if_rk4(&y, plan.dt, visc, &rhs)?;
        }
        for (n, u) in y.iter_mut().enumerate() {
            if !u.is_finite() {
                return Err(WhithamError::BlowUp(times[k]).into());
            }
            u.t = times[k];
            levels[n].push(u.clone());
        }
    }
    Ok(levels)
}

fn default_forcing(p: CnlsParams) -> impl Fn(usize, &[&ModulationField]) -> Result<ModulationField, CorrectorError> + Sync {
    move |n, lower| corrector_forcing(n, lower, &p)
}

/// Bundle at a single viscosity.
pub fn build_bundle(
    u0: &ModulationField,
    order: usize,
    p: &CnlsParams,
    visc: &ViscositySetting,
    plan: &Integration,
) -> Result<ExpansionBundle, CorrectorError> {
    let levels = integrate_hierarchy(u0, order, p, visc, plan, &default_forcing(*p))?;
    Ok(ExpansionBundle {
        order,
        levels,
        plan: *plan,
        betas: vec![visc.beta],
    })
}

/// Bundles at every `β` of the ladder (`β, β/2, β/4`), combined level by
/// level and sample by sample with Richardson weights.
pub fn build_extrapolated_bundle(
    u0: &ModulationField,
    order: usize,
    p: &CnlsParams,
    betas: &[f64],
    plan: &Integration,
) -> Result<ExpansionBundle, CorrectorError> {
    combine_ladder(&build_ladder(u0, order, p, betas, plan)?)
}

/// One bundle per viscosity, computed in parallel.
pub fn build_ladder(
    u0: &ModulationField,
    order: usize,
    p: &CnlsParams,
    betas: &[f64],
    plan: &Integration,
) -> Result<Vec<ExpansionBundle>, CorrectorError> {
    betas
        .par_iter()
        .map(|&b| build_bundle(u0, order, p, &ViscositySetting::laplacian(b), plan))
        .collect()
}

/// Richardson combination of single-viscosity bundles sharing a plan.
pub fn combine_ladder(runs: &[ExpansionBundle]) -> Result<ExpansionBundle, CorrectorError> {
    let first = runs.first().ok_or(CorrectorError::IncompleteBundle(0))?;
    let order = first.order;
    let samples = first.levels[0].len();
    let mut levels = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut traj = Vec::with_capacity(samples);
        for k in 0..samples {
            let ladder: Vec<ModulationField> = runs.iter().map(|r| r.levels[n][k].clone()).collect();
            traj.push(whitham::extrapolate_beta(&ladder)?.with_t(ladder[0].t));
        }
        levels.push(traj);
    }
    Ok(ExpansionBundle {
        order,
        levels,
        plan: first.plan,
        betas: runs.iter().flat_map(|r| r.betas.iter().copied()).collect(),
    })
}

/// Re-integrates the hierarchy of `bundle` up to level `n` and returns `uⁿ`.
pub fn solve_corrector(
    n: usize,
    bundle: &ExpansionBundle,
    p: &CnlsParams,
    visc: &ViscositySetting,
) -> Result<Trajectory, CorrectorError> {
    if n == 0 || n > MAX_ORDER {
        return Err(CorrectorError::OrderUnsupported(n));
    }
    let mut levels = integrate_hierarchy(&bundle.levels[0][0], n, p, visc, &bundle.plan, &default_forcing(*p))?;
    Ok(levels.swap_remove(n))
}

/// `ũⁿ = u⁰ + νu¹ + … + νⁿuⁿ` at every sample.
pub fn assemble(bundle: &ExpansionBundle, nu: f64) -> Result<Trajectory, CorrectorError> {
    assemble_to(bundle, bundle.order, nu)
}

/// Truncated sum up to level `n <= bundle.order`.
pub fn assemble_to(bundle: &ExpansionBundle, n: usize, nu: f64) -> Result<Trajectory, CorrectorError> {
    if n >= bundle.levels.len() {
        return Err(CorrectorError::IncompleteBundle(n));
    }
    let samples = bundle.levels[0].len();
    (0..samples)
        .map(|k| {
            let mut u = bundle.levels[0][k].clone();
            let mut w = 1.0;
            for level in &bundle.levels[1..=n] {
                w *= nu;
                u = u.axpy(w, &level[k])?;
            }
            Ok(u)
        })
        .collect()
}

#[cfg(test)]
mod tests;
