use num_complex::Complex64;

use super::{CnlsError, CnlsParams, CnlsState};
use crate::spectral::{Grid, SpectralError, SpectralField};

/// Default lower bound on `|Ψ_j|` for the polar chart.
pub const AMPLITUDE_FLOOR: f64 = 1e-6;

/// Modulation variables `u = (r₁, v₁, r₂, v₂)` at time label `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationField {
    pub r1: SpectralField,
    pub v1: SpectralField,
    pub r2: SpectralField,
    pub v2: SpectralField,
    pub t: f64,
}

impl ModulationField {
    pub fn new(comps: [SpectralField; 4], t: f64) -> Result<Self, SpectralError> {
        let grid = comps[0].grid();
        for c in &comps {
            grid.check_same(&c.grid())?;
            if !c.is_real() {
                return Err(SpectralError::NonRealInput);
            }
        }
        let [r1, v1, r2, v2] = comps;
        Ok(Self { r1, v1, r2, v2, t })
    }

    pub fn zeros(grid: Grid, t: f64) -> Self {
        let z = SpectralField::zeros(grid, true);
        Self {
            r1: z.clone(),
            v1: z.clone(),
            r2: z.clone(),
            v2: z,
            t,
        }
    }

    /// Spatially constant state.
    pub fn constant(grid: Grid, point: [f64; 4], t: f64) -> Self {
        let c = |x| SpectralField::constant(grid, x);
        Self {
            r1: c(point[0]),
            v1: c(point[1]),
            r2: c(point[2]),
            v2: c(point[3]),
            t,
        }
    }

    pub fn grid(&self) -> Grid {
        self.r1.grid()
    }

    pub fn components(&self) -> [&SpectralField; 4] {
        [&self.r1, &self.v1, &self.r2, &self.v2]
    }

    pub fn into_components(self) -> [SpectralField; 4] {
        [self.r1, self.v1, self.r2, self.v2]
    }

    pub fn map(&self, mut f: impl FnMut(&SpectralField) -> SpectralField) -> Self {
        Self {
            r1: f(&self.r1),
            v1: f(&self.v1),
            r2: f(&self.r2),
            v2: f(&self.v2),
            t: self.t,
        }
    }

    pub fn try_map<E>(
        &self,
        mut f: impl FnMut(&SpectralField) -> Result<SpectralField, E>,
    ) -> Result<Self, E> {
        Ok(Self {
            r1: f(&self.r1)?,
            v1: f(&self.v1)?,
            r2: f(&self.r2)?,
            v2: f(&self.v2)?,
            t: self.t,
        })
    }

    pub fn zip_map(
        &self,
        other: &Self,
        mut f: impl FnMut(&SpectralField, &SpectralField) -> Result<SpectralField, SpectralError>,
    ) -> Result<Self, SpectralError> {
        Ok(Self {
            r1: f(&self.r1, &other.r1)?,
            v1: f(&self.v1, &other.v1)?,
            r2: f(&self.r2, &other.r2)?,
            v2: f(&self.v2, &other.v2)?,
            t: self.t,
        })
    }

    /// `self + a * other`, keeping `self.t`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, SpectralError> {
        self.zip_map(other, |x, y| x.axpy(a, y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|c| c.scale(a))
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Relabels every component onto `grid` (same mode count).
    pub fn with_grid(&self, grid: Grid) -> Result<Self, SpectralError> {
        self.try_map(|c| c.with_grid(grid))
    }

    pub fn resampled(&self, modes: usize) -> Result<Self, SpectralError> {
        self.try_map(|c| c.resampled(modes))
    }

    pub fn translated(&self, shift: f64) -> Self {
        self.map(|c| c.translated(shift))
    }

    /// Swaps `(r₁, v₁) ↔ (r₂, v₂)`.
    pub fn swapped(&self) -> Self {
        Self {
            r1: self.r2.clone(),
            v1: self.v2.clone(),
            r2: self.r1.clone(),
            v2: self.v1.clone(),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    /// Point values `(r₁, v₁, r₂, v₂)` at every collocation point.
    pub fn point_values(&self) -> Vec<[f64; 4]> {
        let s = self.components().map(|c| c.real_samples());
        (0..s[0].len())
            .map(|j| [s[0][j], s[1][j], s[2][j], s[3][j]])
            .collect()
    }

    /// Spatial means of the four components.
    pub fn mean_state(&self) -> [f64; 4] {
        self.components().map(|c| c.mean())
    }
}

fn polar_component(psi: &SpectralField, component: usize) -> Result<(SpectralField, SpectralField), CnlsError> {
    let grid = psi.grid();
    let s = psi.complex_samples();
    let ds = psi.derivative(1)?.complex_samples();
    let min = s.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min > AMPLITUDE_FLOOR) {
        return Err(CnlsError::VacuumCrossing {
            component,
            amplitude: min,
        });
    }
    let r: Vec<f64> = s.iter().map(|z| z.norm().ln()).collect();
    let v: Vec<f64> = s
        .iter()
        .zip(&ds)
        .map(|(z, dz): (&Complex64, &Complex64)| (z.conj() * dz).im / z.norm_sqr())
        .collect();
    Ok((
        SpectralField::from_real_samples(grid, &r)?,
        SpectralField::from_real_samples(grid, &v)?,
    ))
}

/// `Ψ_j = exp(r_j + i(φ_j + (γ_j+α)t))`, `v_j = ∂_x φ_j`.
///
/// `v_j` comes from `Im(Ψ̄_j ∂_xΨ_j)/|Ψ_j|²`, which ignores any
/// x-independent phase, so the carrier needs no separate removal.
pub fn to_polar(state: &CnlsState, _p: &CnlsParams) -> Result<ModulationField, CnlsError> {
    let (r1, v1) = polar_component(&state.psi1, 1)?;
    let (r2, v2) = polar_component(&state.psi2, 2)?;
    Ok(ModulationField {
        r1,
        v1,
        r2,
        v2,
        t: state.t,
    })
}

/// Relabels a field given in `(x, t)` onto `(X, T) = (εx, εt)`: same
/// coefficients on a domain `ε` times as long, time multiplied by `ε`.
pub fn rescale_to_slow(u: &ModulationField, eps: f64) -> Result<ModulationField, SpectralError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!("eps = {eps}")));
    }
    let grid = u.grid().rescaled(eps)?;
    Ok(u.with_grid(grid)?.with_t(u.t * eps))
}
