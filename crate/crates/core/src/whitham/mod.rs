//! Two-phase Whitham modulation equations `u_T = M(u) u_X` and the perturbed
//! system `u_T = M(u) u_X + ν F(D³u)` satisfied exactly by the polar
//! variables of CNLS with `ν = ε²`.

mod monitor;
mod rhs;
mod step;

pub use monitor::{
    calibrate_eta, read_trajectory_index, strip_monitor, write_trajectory, EtaCalibration,
    MonitorReport, MonitorSample,
};
pub use rhs::{dm_times, f_term, half_d2m_times, m_times, pointwise, wme_rhs};
pub(crate) use step::{guard_elliptic, if_rk4};
pub use step::{
    extrapolate_beta, integrate, step_perturbed, step_wme, stability_rate, Integration,
    ViscosityOrder, ViscositySetting, STABILITY_LIMIT,
};

use nalgebra::Matrix4;
use num_complex::Complex64;
use thiserror::Error;

use crate::cnls::CnlsParams;
use crate::spectral::SpectralError;

pub type Trajectory = Vec<crate::cnls::ModulationField>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhithamError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("dt = {dt} exceeds the explicit stability bound {limit}")]
    StabilityBoundViolated { dt: f64, limit: f64 },
    #[error("invalid viscosity: {0}")]
    InvalidViscosity(String),
    #[error("elliptic run refused: data strip estimate {strip:.3} below guard {guard}")]
    EllipticWithoutStrip { strip: f64, guard: f64 },
    #[error("invalid integration request: {0}")]
    InvalidIntegration(String),
    #[error("solution blew up at T = {0}")]
    BlowUp(f64),
}

/// `M(u)` at a single point `(r₁, v₁, r₂, v₂)`.
pub fn m_matrix(point: [f64; 4], p: &CnlsParams) -> Matrix4<f64> {
    let [r1, v1, r2, v2] = point;
    let e1 = (2.0 * r1).exp();
    let e2 = (2.0 * r2).exp();
    Matrix4::new(
        -2.0 * v1, -1.0, 0.0, 0.0,
        2.0 * p.gamma1 * e1, -2.0 * v1, 2.0 * p.alpha * e2, 0.0,
        0.0, 0.0, -2.0 * v2, -1.0,
        2.0 * p.alpha * e1, 0.0, 2.0 * p.gamma2 * e2, -2.0 * v2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Hyperbolic,
    Elliptic,
    Mixed,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Hyperbolic => "hyperbolic",
            Self::Elliptic => "elliptic",
            Self::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: [Complex64; 4],
    pub classification: Classification,
    /// Two eigenvalues closer than `1e-7` times the spectral radius.
    pub degenerate: bool,
}

impl CharacteristicReport {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = format!("classification={}\ndegenerate={}\n", self.classification, self.degenerate);
        for (i, z) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("eigenvalue{}_re={:.16e}\neigenvalue{}_im={:.16e}\n", i + 1, z.re, i + 1, z.im));
        }
        s
    }
}

pub fn classify(point: [f64; 4], p: &CnlsParams) -> CharacteristicReport {
    let ev = m_matrix(point, p).complex_eigenvalues();
    let mut eigenvalues = [ev[0], ev[1], ev[2], ev[3]];
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let real = eigenvalues
        .iter()
        .filter(|z| z.im.abs() < 1e-9 * radius.max(f64::MIN_POSITIVE))
        .count();
    let classification = match real {
        4 => Classification::Hyperbolic,
        0 => Classification::Elliptic,
        _ => Classification::Mixed,
    };
    let mut degenerate = false;
    for i in 0..4 {
        for j in i + 1..4 {
            if (eigenvalues[i] - eigenvalues[j]).norm() < 1e-7 * radius {
                degenerate = true;
            }
        }
    }
    CharacteristicReport {
        eigenvalues,
        classification,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// At `v = 0`, `λ²` solves `μ² - tr(K)μ + det(K) = 0` for
    /// `K = 2[[γ₁E₁, αE₂], [αE₁, γ₂E₂]]`, `λ² = -μ`.
    fn closed_form(r1: f64, r2: f64, p: &CnlsParams) -> [Complex64; 4] {
        let e1 = (2.0 * r1).exp();
        let e2 = (2.0 * r2).exp();
        let (a, d) = (p.gamma1 * e1, p.gamma2 * e2);
        let disc = ((a - d).powi(2) + 4.0 * p.alpha * p.alpha * e1 * e2).sqrt();
        let mut out = Vec::new();
        for mu in [(a + d) + disc, (a + d) - disc] {
            let lam2 = Complex64::new(-mu, 0.0);
            let l = lam2.sqrt();
            out.push(l);
            out.push(-l);
        }
        let mut arr = [out[0], out[1], out[2], out[3]];
        arr.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        arr
    }

    #[test]
    fn matrix_entries() {
        let p = CnlsParams::new(1.0, 1.0, 0.5).unwrap();
        let m = m_matrix([0.0; 4], &p);
        let expect = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 2.0, 0.0,
        );
        assert_eq!(m, expect);
        let shifted = m_matrix([0.0, 0.7, 0.0, 0.7], &p);
        assert_eq!(shifted, expect - Matrix4::identity() * 1.4);
        let far = m_matrix([-20.0, 0.0, -20.0, 0.0], &p);
        assert!(far[(1, 0)].abs() < 1e-16 && far[(3, 2)].abs() < 1e-16);
    }

    #[test]
    fn headline_types() {
        let p = CnlsParams::new(-1.0, -1.0, 0.3).unwrap();
        let r = classify([0.0; 4], &p);
        assert_eq!(r.classification, Classification::Hyperbolic);
        let mut lam: Vec<f64> = r.eigenvalues.iter().map(|z| z.re).collect();
        lam.sort_by(f64::total_cmp);
        let expect = [-(2.6f64).sqrt(), -(1.4f64).sqrt(), 1.4f64.sqrt(), 2.6f64.sqrt()];
        for (a, b) in lam.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = CnlsParams::new(1.0, 1.0, 0.3).unwrap();
        assert_eq!(classify([0.0; 4], &p).classification, Classification::Elliptic);
        let p = CnlsParams::new(1.0, -1.0, 0.3).unwrap();
        let r = classify([0.0; 4], &p);
        assert_eq!(r.classification, Classification::Mixed);
        // λ² = ±2√1.09
        let lam2 = 2.0 * 1.09f64.sqrt();
        assert!(r.eigenvalues.iter().any(|z| (z.norm_sqr() - lam2).abs() < 1e-12));
    }

    #[test]
    fn decoupled_is_degenerate() {
        let p = CnlsParams::new(-1.0, -1.0, 0.0).unwrap();
        let r = classify([0.0; 4], &p);
        assert!(r.degenerate);
        assert_eq!(r.classification, Classification::Hyperbolic);
        assert!(!classify([0.0; 4], &CnlsParams::new(-1.0, -1.0, 0.3).unwrap()).degenerate);
    }

    #[test]
    fn classify_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g1 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let g2 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let alpha = rng.gen_range(-0.9..0.9);
            let Ok(p) = CnlsParams::new(g1, g2, alpha) else { continue };
            let (r1, r2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let got = classify([r1, 0.0, r2, 0.0], &p).eigenvalues;
            let want = closed_form(r1, r2, &p);
            for (a, b) in got.iter().zip(want) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn velocity_shift_moves_every_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = CnlsParams::new(1.0, -1.0, 0.45).unwrap();
        for _ in 0..20 {
            let (r1, r2, c) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-2.0..2.0));
            let a = classify([r1, 0.0, r2, 0.0], &p);
            let b = classify([r1, c, r2, c], &p);
            for (x, y) in a.eigenvalues.iter().zip(b.eigenvalues) {
                assert!((x - 2.0 * c - y).norm() < 1e-12);
            }
            assert_eq!(a.classification, b.classification);
        }
    }

    #[test]
    fn key_value_report() {
        let p = CnlsParams::new(-1.0, -1.0, 0.3).unwrap();
        let s = classify([0.0; 4], &p).to_key_value();
        assert!(s.starts_with("classification=hyperbolic\ndegenerate=false\n"));
        assert_eq!(s.lines().count(), 10);
    }
}
