use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::SVD;

use super::{m_matrix, WhithamError};
use crate::cnls::{CnlsParams, ModulationField};
use crate::spectral::{
    gevrey_norm_components, measure_algebra_constant, GevreyIndex, SpectralError, StripSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    pub sigma: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub samples: Vec<MonitorSample>,
    pub radius: f64,
    pub max_norm: f64,
    pub holds: bool,
    pub first_violation: Option<f64>,
}

/// Tracks `‖u(T)‖_{G^s_{σ(T)}}` against the bound `R`.
pub fn strip_monitor(
    trajectory: &[ModulationField],
    sched: &StripSchedule,
    s: f64,
    radius: f64,
) -> Result<MonitorReport, WhithamError> {
    let lifespan = sched.lifespan();
    let mut samples = Vec::with_capacity(trajectory.len());
    for u in trajectory {
        if u.t >= lifespan {
            return Err(SpectralError::ScheduleExhausted { t: u.t, lifespan }.into());
        }
        let sigma = sched.sigma_at(u.t)?;
        let norm = gevrey_norm_components(u.components(), GevreyIndex::new(s, sigma)?)?;
        samples.push(MonitorSample { t: u.t, sigma, norm });
    }
    let max_norm = samples.iter().map(|x| x.norm).fold(0.0, f64::max);
    let first_violation = samples.iter().find(|x| !(x.norm <= radius)).map(|x| x.t);
    Ok(MonitorReport {
        samples,
        radius,
        max_norm,
        holds: first_violation.is_none(),
        first_violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EtaCalibration {
    pub eta: f64,
    pub radius: f64,
    /// Measured algebra constant, floored at 1.
    pub algebra_constant: f64,
    /// `‖M(0)‖₂`
    pub m0_norm: f64,
}

/// `η = 2(‖M(0)‖₂ + Ĉ R e^{2R})` with `R = 1.05 ‖u₀‖_{G^s_{σ₀}}`.
pub fn calibrate_eta(
    u0: &ModulationField,
    p: &CnlsParams,
    s: f64,
    sigma0: f64,
    samples: usize,
    seed: u64,
) -> Result<EtaCalibration, WhithamError> {
    let radius = 1.05 * gevrey_norm_components(u0.components(), GevreyIndex::new(s, sigma0)?)?;
    let c = measure_algebra_constant(u0.grid(), s, sigma0, samples, seed)?.max(1.0);
    let m0_norm = SVD::new(m_matrix([0.0; 4], p), false, false)
        .singular_values
        .max();
    Ok(EtaCalibration {
        eta: 2.0 * (m0_norm + c * radius * (2.0 * radius).exp()),
        radius,
        algebra_constant: c,
        m0_norm,
    })
}

fn multi_field_csv(u: &ModulationField) -> String {
    let grid = u.grid();
    let half = grid.modes() as i64 / 2;
    let mut out = String::from("m,xi,re_r1,im_r1,re_v1,im_v1,re_r2,im_r2,re_v2,im_v2\n");
    for m in -half + 1..=half {
        write!(out, "{m},{:.16e}", grid.wavenumber(m)).unwrap();
        for c in u.components() {
            let z = c.coefficient(m);
            write!(out, ",{:.16e},{:.16e}", z.re, z.im).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One CSV of coefficients per sample plus `index.csv` (`T,path,sigma_T,norm`).
pub fn write_trajectory(
    dir: &Path,
    trajectory: &[ModulationField],
    sched: &StripSchedule,
    s: f64,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::from("T,path,sigma_T,norm\n");
    for (k, u) in trajectory.iter().enumerate() {
        let name = format!("sample_{k:04}.csv");
        fs::write(dir.join(&name), multi_field_csv(u))?;
        let sigma = sched.sigma_at(u.t).map_err(io::Error::other)?;
        let norm = GevreyIndex::new(s, sigma)
            .and_then(|idx| gevrey_norm_components(u.components(), idx))
            .map_err(io::Error::other)?;
        writeln!(index, "{:.16e},{name},{sigma:.16e},{norm:.16e}", u.t).unwrap();
    }
    fs::write(dir.join("index.csv"), index)
}

/// Parses `index.csv` rows as `(T, path, σ(T), norm)`.
pub fn read_trajectory_index(dir: &Path) -> io::Result<Vec<(f64, String, f64, f64)>> {
    let text = fs::read_to_string(dir.join("index.csv"))?;
    let bad = |l: &str| io::Error::new(io::ErrorKind::InvalidData, l.to_string());
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 4 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok((num(c[0])?, c[1].to_string(), num(c[2])?, num(c[3])?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, SpectralField};
    use crate::whitham::{integrate, Integration, ViscositySetting};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(2.0 * PI, 64).unwrap()
    }

    fn data(a: f64) -> ModulationField {
        let modes: Vec<(i64, num_complex::Complex64)> = (1..=6)
            .map(|m| (m, num_complex::Complex64::new(a * (-(m as f64)).exp(), 0.0)))
            .collect();
        let f = SpectralField::from_modes(grid(), &modes, true).unwrap();
        ModulationField::new([f.clone(), f.translated(0.5), f.translated(1.0), f.translated(2.0)], 0.0)
            .unwrap()
    }

    #[test]
    fn constant_trajectory_is_bounded() {
        let u = data(0.1);
        let sched = StripSchedule::new(0.5, 1.0).unwrap();
        let traj: Vec<_> = (0..5).map(|k| u.clone().with_t(0.1 * k as f64)).collect();
        let r0 = gevrey_norm_components(u.components(), GevreyIndex::new(2.0, 0.5).unwrap()).unwrap();
        let rep = strip_monitor(&traj, &sched, 2.0, r0).unwrap();
        assert!(rep.holds);
        for w in rep.samples.windows(2) {
            assert!(w[1].norm <= w[0].norm);
        }
        let late = vec![u.with_t(0.5)];
        assert!(matches!(
            strip_monitor(&late, &sched, 2.0, r0),
            Err(WhithamError::Spectral(SpectralError::ScheduleExhausted { .. }))
        ));
    }

    #[test]
    fn elliptic_growth_outruns_a_slow_strip() {
        let p = CnlsParams::new(1.0, 1.0, 0.3).unwrap();
        let u0 = data(0.05);
        let plan = Integration::new(5e-4, 800, 40);
        let traj = integrate(&u0, &p, 0.0, &ViscositySetting::laplacian(1e-4), &plan).unwrap();
        let sched = StripSchedule::new(1.0, 0.05).unwrap();
        let r = 1.05 * gevrey_norm_components(u0.components(), GevreyIndex::new(2.0, 1.0).unwrap()).unwrap();
        let rep = strip_monitor(&traj, &sched, 2.0, r).unwrap();
        let t = rep.first_violation.expect("elliptic growth must violate the bound");
        assert!(t < sched.lifespan());
    }

    #[test]
    fn calibration_is_positive_and_dump_round_trips() {
        let p = CnlsParams::new(-1.0, -1.0, 0.3).unwrap();
        let u0 = data(0.02);
        let cal = calibrate_eta(&u0, &p, 2.0, 0.5, 20, 3).unwrap();
        assert!(cal.eta > 2.0 * cal.m0_norm && cal.algebra_constant >= 1.0);
        let sched = StripSchedule::new(0.5, cal.eta).unwrap();
        let traj = vec![u0.clone(), u0.with_t(0.1 / cal.eta)];
        let dir = tempfile::tempdir().unwrap();
        write_trajectory(dir.path(), &traj, &sched, 2.0).unwrap();
        let idx = read_trajectory_index(dir.path()).unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(idx[1].1, "sample_0001.csv");
        assert!(dir.path().join("sample_0001.csv").exists());
    }
}
