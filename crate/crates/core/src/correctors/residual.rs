use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use super::{assemble_to, CorrectorError, ExpansionBundle};
use crate::cnls::{CnlsParams, ModulationField};
use crate::spectral::{gevrey_norm_components, least_squares, GevreyIndex, SpectralError, StripSchedule};
use crate::whitham::{f_term, wme_rhs};

/// `∂_T` of a uniformly sampled trajectory: five-point centered differences
/// in the interior, five-point one-sided differences at the two ends on
/// each side.
pub fn time_derivative(traj: &[ModulationField]) -> Result<Vec<ModulationField>, CorrectorError> {
    let n = traj.len();
    if n < 5 {
        return Err(CorrectorError::DegenerateSamples(format!(
            "{n} time samples, need at least 5"
        )));
    }
    let h = traj[1].t - traj[0].t;
    if !(h > 0.0) {
        return Err(CorrectorError::DegenerateSamples("time samples not increasing".into()));
    }
    for w in traj.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(w[1].t.abs()) {
            return Err(CorrectorError::DegenerateSamples("time samples not uniform".into()));
        }
    }
    let combo = |idx: [usize; 5], w: [f64; 5], sign: f64, t: f64| -> Result<ModulationField, SpectralError> {
        let mut acc = ModulationField::zeros(traj[0].grid(), t);
        for (i, c) in idx.into_iter().zip(w) {
            if c != 0.0 {
                acc = acc.axpy(sign * c / (12.0 * h), &traj[i])?;
            }
        }
        Ok(acc.with_t(t))
    };
    const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    (0..n)
        .into_par_iter()
        .map(|k| {
            let t = traj[k].t;
            let out = match k {
                0 => combo([0, 1, 2, 3, 4], EDGE0, 1.0, t),
                1 => combo([0, 1, 2, 3, 4], EDGE1, 1.0, t),
                _ if k == n - 1 => combo([n - 1, n - 2, n - 3, n - 4, n - 5], EDGE0, -1.0, t),
                _ if k == n - 2 => combo([n - 1, n - 2, n - 3, n - 4, n - 5], EDGE1, -1.0, t),
                _ => combo([k - 2, k - 1, k, k + 1, k + 2], CENTER, 1.0, t),
            };
            out.map_err(CorrectorError::from)
        })
        .collect()
}

/// `Res = ∂_T ũ − M(ũ)∂_X ũ − νF(ũ)` at every sample.
pub fn residual(
    traj: &[ModulationField],
    nu: f64,
    p: &CnlsParams,
) -> Result<Vec<ModulationField>, CorrectorError> {
    let dt = time_derivative(traj)?;
    traj.par_iter()
        .zip(dt)
        .map(|(u, d)| {
            let mut r = d.sub(&wme_rhs(u, p)?)?;
            if nu != 0.0 {
                r = r.axpy(-nu, &f_term(u)?)?;
            }
            Ok(r.with_t(u.t))
        })
        .collect()
}

/// Norm of a residual sample; the field carries its time.
pub type ResidualNorm<'a> = dyn Fn(&ModulationField) -> Result<f64, SpectralError> + Sync + 'a;

/// [`residual`] plus a halving check: recomputing from every other sample
/// may change the residual by at most half its sup over the trajectory
/// (plus `abs_tol`). The sup is what gets fitted, and residuals that vanish
/// at `T = 0` cannot pass a pointwise test there.
pub fn checked_residual(
    traj: &[ModulationField],
    nu: f64,
    p: &CnlsParams,
    norm: &ResidualNorm,
    abs_tol: f64,
) -> Result<Vec<ModulationField>, CorrectorError> {
    let fine = residual(traj, nu, p)?;
    let coarse_traj: Vec<ModulationField> = traj.iter().step_by(2).cloned().collect();
    let coarse = residual(&coarse_traj, nu, p)?;
    let mut res = 0.0f64;
    for f in &fine {
        res = res.max(norm(f)?);
    }
    for (j, c) in coarse.iter().enumerate() {
        let f = &fine[2 * j];
        let diff = norm(&f.sub(c)?.with_t(f.t))?;
        if !(diff <= 0.5 * res + abs_tol) {
            return Err(CorrectorError::TimeGridTooCoarse { t: f.t, diff, res });
        }
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_order(xs: &[f64], ys: &[f64]) -> Result<OrderFit, CorrectorError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(CorrectorError::DegenerateSamples(format!(
            "{} abscissae, {} values; need at least 3 pairs",
            xs.len(),
            ys.len()
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(CorrectorError::DegenerateSamples(format!("non-positive sample ({x}, {y})")));
        }
    }
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[i] == xs[j] {
                return Err(CorrectorError::DegenerateSamples(format!("repeated abscissa {}", xs[i])));
            }
        }
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let (order, intercept, r2) = least_squares(&pts);
    Ok(OrderFit { order, intercept, r2 })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualRow {
    pub nu: f64,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub res_norm: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    pub rows: Vec<ResidualRow>,
    /// `(ν, sup_T ‖Resⁿ‖)`
    pub sups: Vec<(f64, f64)>,
    pub fit: OrderFit,
}

/// Sup-in-time residual norms of `ũⁿ` in `G⁰_{σ(T)−δ}` over `nus`, and the
/// fitted order in `ν`.
pub fn residual_scaling(
    bundle: &ExpansionBundle,
    n: usize,
    nus: &[f64],
    p: &CnlsParams,
    sched: &StripSchedule,
    delta: f64,
    abs_tol: f64,
) -> Result<ResidualReport, CorrectorError> {
    let norm = |u: &ModulationField| -> Result<f64, SpectralError> {
        let sigma = sched.sigma_at(u.t)? - delta;
        gevrey_norm_components(u.components(), GevreyIndex::new(0.0, sigma)?)
    };
    let per_nu = nus
        .par_iter()
        .map(|&nu| {
            let approx = assemble_to(bundle, n, nu)?;
            let res = checked_residual(&approx, nu, p, &norm, abs_tol)?;
            res.iter()
                .map(|r| {
                    Ok(ResidualRow {
                        nu,
                        n,
                        t: r.t,
                        res_norm: norm(r)?,
                    })
                })
                .collect::<Result<Vec<_>, CorrectorError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sups: Vec<(f64, f64)> = nus
        .iter()
        .zip(&per_nu)
        .map(|(&nu, rows)| (nu, rows.iter().map(|r| r.res_norm).fold(0.0, f64::max)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = sups.iter().copied().unzip();
    let fit = fit_order(&xs, &ys)?;
    Ok(ResidualReport {
        n,
        rows: per_nu.into_iter().flatten().collect(),
        sups,
        fit,
    })
}

#[derive(serde::Serialize)]
struct Summary {
    n: usize,
    order: f64,
    intercept: f64,
    r2: f64,
    nus: Vec<f64>,
    sup_norms: Vec<f64>,
}

/// `residual_n{n}.csv` (`nu,n,T,res_norm`) and `residual_n{n}.toml`.
pub fn write_residual_report(dir: &Path, report: &ResidualReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = String::from("nu,n,T,res_norm\n");
    for r in &report.rows {
        writeln!(csv, "{:.16e},{},{:.16e},{:.16e}", r.nu, r.n, r.t, r.res_norm).unwrap();
    }
    fs::write(dir.join(format!("residual_n{}.csv", report.n)), csv)?;
    let summary = Summary {
        n: report.n,
        order: report.fit.order,
        intercept: report.fit.intercept,
        r2: report.fit.r2,
        nus: report.sups.iter().map(|s| s.0).collect(),
        sup_norms: report.sups.iter().map(|s| s.1).collect(),
    };
    let text = toml::to_string(&summary).map_err(io::Error::other)?;
    fs::write(dir.join(format!("residual_n{}.toml", report.n)), text)
}
