//! Gevrey norms and the inequality toolkit around them.
//!
//! The discrete norm is
//! `‖u‖²_{G^s_σ} = Σ_m e^{2σ(|ξ_m|+1)} (1 + |ξ_m|^{2s}) |û_m|²`,
//! a pure coefficient sum with no domain-length factor.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Grid, SpectralError, SpectralField};

/// Largest admissible `σ(|ξ|+1)` before the weight is considered overflowing.
pub const MAX_WEIGHT_EXPONENT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GevreyIndex {
    pub s: f64,
    pub sigma: f64,
}

impl GevreyIndex {
    pub fn new(s: f64, sigma: f64) -> Result<Self, SpectralError> {
        if !(s >= 0.0 && sigma >= 0.0 && s.is_finite() && sigma.is_finite()) {
            return Err(SpectralError::InvalidIndex { s, sigma });
        }
        Ok(Self { s, sigma })
    }
}

/// Linearly shrinking strip `σ(T) = σ₀ - ηT`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StripSchedule {
    pub sigma0: f64,
    pub eta: f64,
}

impl StripSchedule {
    pub fn new(sigma0: f64, eta: f64) -> Result<Self, SpectralError> {
        if !(sigma0 > 0.0 && eta > 0.0 && sigma0.is_finite() && eta.is_finite()) {
            return Err(SpectralError::InvalidSchedule { sigma0, eta });
        }
        Ok(Self { sigma0, eta })
    }

    pub fn lifespan(&self) -> f64 {
        self.sigma0 / self.eta
    }

    pub fn sigma_at(&self, t: f64) -> Result<f64, SpectralError> {
        let lifespan = self.lifespan();
        if !(0.0..=lifespan).contains(&t) {
            return Err(SpectralError::ScheduleExhausted { t, lifespan });
        }
        Ok((self.sigma0 - self.eta * t).max(0.0))
    }
}

fn weight(xi: f64, idx: GevreyIndex) -> f64 {
    let a = xi.abs();
    (idx.sigma * (a + 1.0)).exp() * (1.0 + a.powf(2.0 * idx.s)).sqrt()
}

/// Discrete Gevrey norm `‖u‖_{G^s_σ}`.
pub fn gevrey_norm(u: &SpectralField, idx: GevreyIndex) -> Result<f64, SpectralError> {
    let grid = u.grid();
    let exponent = idx.sigma * (grid.max_wavenumber() + 1.0);
    if exponent > MAX_WEIGHT_EXPONENT {
        return Err(SpectralError::StripTooWide {
            exponent,
            limit: MAX_WEIGHT_EXPONENT,
        });
    }
    let terms: Vec<f64> = u
        .coefficients()
        .iter()
        .enumerate()
        .map(|(k, c)| weight(grid.wavenumber(grid.mode(k)), idx) * c.norm())
        .collect();
    Ok(scaled_l2(&terms))
}

/// Gevrey norm of a multi-component field: root of the summed squares.
pub fn gevrey_norm_components<'a>(
    comps: impl IntoIterator<Item = &'a SpectralField>,
    idx: GevreyIndex,
) -> Result<f64, SpectralError> {
    let norms = comps
        .into_iter()
        .map(|c| gevrey_norm(c, idx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scaled_l2(&norms))
}

fn scaled_l2(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * terms.iter().map(|&x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// `C(p, δ) = max_{ξ∈ℝ} e^{-δ(1+|ξ|)} (1+|ξ|^{2p})^{1/2}`.
///
/// The maximiser is either `ξ = 0` or a root of
/// `p ξ^{2p-1} / (1+ξ^{2p}) = δ`; roots are bracketed on a fine scan of
/// `[0, ξ_hi]` and polished by bisection. Past `ξ_hi = 2 max(1, p/δ) + 1`
/// the log-derivative is negative, so nothing is missed.
pub fn shift_constant(p: f64, delta: f64) -> f64 {
    assert!(delta > 0.0 && p >= 0.0, "shift_constant needs p >= 0, delta > 0");
    let log_f = |xi: f64| -delta * (1.0 + xi) + 0.5 * (1.0 + xi.powf(2.0 * p)).ln();
    let slope = |xi: f64| {
        if xi == 0.0 {
            return if p < 0.5 {
                f64::INFINITY
            } else if p == 0.5 {
                0.5 - delta
            } else {
                -delta
            };
        }
        p * xi.powf(2.0 * p - 1.0) / (1.0 + xi.powf(2.0 * p)) - delta
    };
    let hi = 2.0 * (p / delta).max(1.0) + 1.0;
    let steps = 20_000;
    let h = hi / steps as f64;
    let mut best = log_f(0.0);
    let mut prev_x = 0.0;
    let mut prev_s = slope(0.0);
    for i in 1..=steps {
        let x = i as f64 * h;
        let s = slope(x);
        if prev_s > 0.0 && s <= 0.0 {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if slope(mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= f64::EPSILON * b {
                    break;
                }
            }
            for cand in [a, b, 0.5 * (a + b)] {
                best = best.max(log_f(cand));
            }
        }
        best = best.max(log_f(x));
        prev_x = x;
        prev_s = s;
    }
    best.exp()
}

/// Empirical strip width: least-squares slope of `log|û_m|` against `-|ξ_m|`.
///
/// Mode pairs `±m` are merged into one amplitude `sqrt((|û_m|² + |û_{-m}|²)/2)`
/// and the mean mode is excluded, so a point is one distinct `|ξ|`.
pub fn estimate_strip(u: &SpectralField, floor: f64) -> Result<f64, SpectralError> {
    if !(floor > f64::EPSILON) {
        return Err(SpectralError::InvalidArgument(format!(
            "floor {floor} must exceed machine epsilon"
        )));
    }
    let grid = u.grid();
    let half = grid.modes() as i64 / 2;
    let mut pts = Vec::new();
    for m in 1..=half {
        let amp = if m == half {
            u.coefficient(m).norm()
        } else {
            ((u.coefficient(m).norm_sqr() + u.coefficient(-m).norm_sqr()) / 2.0).sqrt()
        };
        if amp > floor {
            pts.push((-grid.wavenumber(m), amp.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(SpectralError::FewerThanThreeModes(pts.len()));
    }
    let fit = least_squares(&pts);
    Ok(fit.0.max(0.0))
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r²)`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let r2 = if syy > 0.0 && sxx > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

/// Random real field with modes `|m| <= bandwidth`, coefficient magnitudes
/// decaying like `e^{-decay |ξ_m|}`.
pub fn random_band_limited<R: Rng>(
    grid: Grid,
    bandwidth: i64,
    decay: f64,
    amplitude: f64,
    rng: &mut R,
) -> SpectralField {
    let mut modes = Vec::new();
    for m in 0..=bandwidth {
        let env = amplitude * (-decay * grid.wavenumber(m).abs()).exp();
        let re = rng.gen_range(-1.0..1.0) * env;
        let im = if m == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) * env };
        modes.push((m, Complex64::new(re, im)));
        if m > 0 {
            modes.push((-m, Complex64::new(re, -im)));
        }
    }
    SpectralField::from_modes(grid, &modes, true).expect("bandwidth fits the grid")
}

/// `‖uv‖ / (‖u‖ ‖v‖)` in `G^s_σ`.
pub fn algebra_ratio(
    u: &SpectralField,
    v: &SpectralField,
    idx: GevreyIndex,
) -> Result<f64, SpectralError> {
    let uv = u.product(v)?;
    Ok(gevrey_norm(&uv, idx)? / (gevrey_norm(u, idx)? * gevrey_norm(v, idx)?))
}

/// `‖uv‖_{G^s} / (‖u‖_{G^s}‖v‖_{G^κ} + ‖u‖_{G^κ}‖v‖_{G^s})` at strip `σ`.
pub fn product_ratio(
    u: &SpectralField,
    v: &SpectralField,
    s: f64,
    kappa: f64,
    sigma: f64,
) -> Result<f64, SpectralError> {
    let is = GevreyIndex::new(s, sigma)?;
    let ik = GevreyIndex::new(kappa, sigma)?;
    let uv = u.product(v)?;
    let denom = gevrey_norm(u, is)? * gevrey_norm(v, ik)? + gevrey_norm(u, ik)? * gevrey_norm(v, is)?;
    Ok(gevrey_norm(&uv, is)? / denom)
}

/// Constant in `‖uv‖_{G^s} <= C (‖u‖_{G^s}‖v‖_{G^κ} + ‖u‖_{G^κ}‖v‖_{G^s})`
/// obtained from the triangle-inequality splitting of the weight, Young's
/// inequality and Cauchy–Schwarz on the grid's wavenumbers:
/// `C = √2 max(1, 2^{s-1}) (Σ_m (1+|ξ_m|^{2κ})^{-1})^{1/2}`.
/// Independent of σ; valid whenever the product is alias-free.
pub fn apriori_product_constant(grid: Grid, s: f64, kappa: f64) -> f64 {
    let split = std::f64::consts::SQRT_2 * 2f64.powf(s - 1.0).max(1.0);
    let sum: f64 = grid
        .wavenumbers()
        .iter()
        .map(|xi| 1.0 / (1.0 + xi.abs().powf(2.0 * kappa)))
        .sum();
    split * sum.sqrt()
}

/// Algebra constant from [`apriori_product_constant`] with `κ = s`.
pub fn apriori_algebra_constant(grid: Grid, s: f64) -> f64 {
    2.0 * apriori_product_constant(grid, s, s)
}

/// Largest `‖uv‖/(‖u‖‖v‖)` in `G^s_σ` over `samples` random pairs (squares
/// included), deterministic in `seed`. Fields use bandwidth `N/6` so every
/// product is alias-free.
pub fn measure_algebra_constant(
    grid: Grid,
    s: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, SpectralError> {
    let idx = GevreyIndex::new(s, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = grid.modes() as i64 / 6;
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let decay = rng.gen_range(0.0..1.5);
        let u = random_band_limited(grid, band, decay, 1.0, &mut rng);
        let ratio = if i % 4 == 0 {
            algebra_ratio(&u, &u, idx)?
        } else {
            let v = random_band_limited(grid, band, rng.gen_range(0.0..1.5), 1.0, &mut rng);
            algebra_ratio(&u, &v, idx)?
        };
        best = best.max(ratio);
    }
    Ok(best)
}

/// `φ_s(z) = e^{2Ĉz} - 1` for the composition `u ↦ e^{2u} - 1`, with the
/// algebra constant floored at 1 (the linear term `2u` already needs it).
pub fn composition_bound(z: f64, c_hat: f64) -> f64 {
    (2.0 * c_hat.max(1.0) * z).exp_m1()
}
