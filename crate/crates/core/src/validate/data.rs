use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, ValidateError};
use crate::cnls::{CnlsError, CnlsState, ModulationField, AMPLITUDE_FLOOR};
use crate::spectral::{Grid, SpectralField};
use crate::Complex64;

const UNITS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

/// `c_m = a e^{-σ₀ξ_m} s_m` for `0 < ξ_m <= bandwidth`, with `s_m` drawn
/// uniformly from `{±1, ±i}`; all four components are mean-free.
pub fn initial_data(cfg: &ExperimentConfig, grid: Grid) -> Result<ModulationField, ValidateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let top = grid.modes() as i64 / 2 - 1;
    let comps: [SpectralField; 4] = std::array::from_fn(|_| {
        let mut modes = Vec::new();
        for m in 1..=top {
            let xi = grid.wavenumber(m);
            if xi > cfg.data_bandwidth + 1e-12 {
                break;
            }
            let c = UNITS[rng.gen_range(0..4)] * (cfg.amplitude * (-cfg.sigma0 * xi).exp());
            modes.push((m, c));
            modes.push((-m, c.conj()));
        }
        SpectralField::from_modes(grid, &modes, true).expect("modes lie inside the grid")
    });
    let u = ModulationField::new(comps, 0.0)?;
    let floor = 0.5 * AMPLITUDE_FLOOR.ln();
    for r in [&u.r1, &u.r2] {
        let lowest = r.real_samples().into_iter().fold(f64::INFINITY, f64::min);
        if lowest < floor {
            return Err(ValidateError::Config(format!(
                "amplitude {} leaves the polar chart (min r = {lowest:.3})",
                cfg.amplitude
            )));
        }
    }
    Ok(u)
}

/// Mean-free antiderivative `Φ` with `Φ' = v - v̂₀`.
fn antiderivative(v: &SpectralField) -> SpectralField {
    let grid = v.grid();
    let half = grid.modes() as i64 / 2;
    let c: Vec<Complex64> = (0..grid.modes())
        .map(|k| {
            let m = grid.mode(k);
            if m == 0 || m == half {
                Complex64::new(0.0, 0.0)
            } else {
                v.coefficients()[k] * Complex64::new(0.0, -1.0 / grid.wavenumber(m))
            }
        })
        .collect();
    SpectralField::from_coefficients(grid, c, v.is_real()).expect("same grid")
}

/// `φ(x) = ∫₀^x v(εx′) dx′` for a slow-grid field `v`, with the mean mode
/// integrated exactly and the rest through the spectral antiderivative.
pub fn reconstruct_phase(v: &SpectralField, eps: f64, x: f64) -> Result<f64, ValidateError> {
    let limit = v.grid().length() / (2.0 * eps);
    if !(x.abs() <= limit) {
        return Err(ValidateError::WindowExceeded { x, limit });
    }
    let big_x = eps * x;
    let phi = antiderivative(v);
    let oscillating = phi.eval_at(big_x).re - phi.eval_at(0.0).re;
    Ok((v.mean() * big_x + oscillating) / eps)
}

/// CNLS data `Ψ_j(x) = exp(r_j(εx) + i∫₀^x v_j(εx′)dx′)` on the fast grid
/// of length `L/ε` with `modes` points.
pub fn synthesize_cnls(u: &ModulationField, eps: f64, modes: usize) -> Result<CnlsState, ValidateError> {
    let slow = u.grid();
    let fast = slow.rescaled(1.0 / eps)?;
    let fast = Grid::new(fast.length(), modes)?;
    let xs = fast.points();
    let build = |r: &SpectralField, v: &SpectralField| -> Result<SpectralField, ValidateError> {
        let k = v.mean();
        let turns = k * fast.length() / (2.0 * std::f64::consts::PI);
        if (turns - turns.round()).abs() > 1e-9 {
            return Err(CnlsError::IncommensurateWavenumber {
                k,
                length: fast.length(),
            }
            .into());
        }
        let rs = r.resampled(modes)?.with_grid(fast)?.real_samples();
        let phi = antiderivative(v);
        let phi0 = phi.eval_at(0.0).re;
        let ps = phi.resampled(modes)?.with_grid(fast)?.real_samples();
        let samples: Vec<Complex64> = xs
            .iter()
            .zip(rs.iter().zip(&ps))
            .map(|(x, (r, p))| Complex64::from_polar(r.exp(), (p - phi0) / eps + k * x))
            .collect();
        Ok(SpectralField::from_complex_samples(fast, &samples)?)
    };
    Ok(CnlsState::new(build(&u.r1, &u.v1)?, build(&u.r2, &u.v2)?, u.t / eps)?)
}
