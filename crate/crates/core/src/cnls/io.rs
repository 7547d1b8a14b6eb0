use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CnlsParams, CnlsState};
use crate::spectral::{Grid, SpectralField};

/// Sidecar record written next to a state CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMeta {
    pub length: f64,
    pub modes: usize,
    pub t: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha: f64,
}

pub fn state_to_csv(state: &CnlsState) -> String {
    let a = state.psi1.complex_samples();
    let b = state.psi2.complex_samples();
    let mut out = String::from("x,re1,im1,re2,im2\n");
    for (j, x) in state.grid().points().iter().enumerate() {
        writeln!(
            out,
            "{x:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            a[j].re, a[j].im, b[j].re, b[j].im
        )
        .unwrap();
    }
    out
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("toml")
}

/// Writes `path` (CSV samples) and `path` with a `.toml` extension (metadata).
pub fn write_state(path: &Path, state: &CnlsState, p: &CnlsParams) -> io::Result<()> {
    let grid = state.grid();
    let meta = StateMeta {
        length: grid.length(),
        modes: grid.modes(),
        t: state.t,
        gamma1: p.gamma1,
        gamma2: p.gamma2,
        alpha: p.alpha,
    };
    fs::write(path, state_to_csv(state))?;
    let text = toml::to_string(&meta).map_err(|e| io::Error::other(e.to_string()))?;
    fs::write(sidecar(path), text)
}

pub fn read_state(path: &Path) -> io::Result<(CnlsState, StateMeta)> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let meta: StateMeta =
        toml::from_str(&fs::read_to_string(sidecar(path))?).map_err(|e| bad(e.to_string()))?;
    let grid = Grid::new(meta.length, meta.modes).map_err(|e| bad(e.to_string()))?;
    let text = fs::read_to_string(path)?;
    let mut a = Vec::with_capacity(meta.modes);
    let mut b = Vec::with_capacity(meta.modes);
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("{e}: {line}")))?;
        if v.len() != 5 {
            return Err(bad(format!("expected 5 columns: {line}")));
        }
        a.push(Complex64::new(v[1], v[2]));
        b.push(Complex64::new(v[3], v[4]));
    }
    let f = |s: &[Complex64]| SpectralField::from_complex_samples(grid, s).map_err(|e| bad(e.to_string()));
    let state = CnlsState {
        psi1: f(&a)?,
        psi2: f(&b)?,
        t: meta.t,
    };
    Ok((state, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(5.0, 16).unwrap();
        let s = CnlsState {
            psi1: SpectralField::from_complex_fn(grid, |x| Complex64::new(x.cos(), 0.3)),
            psi2: SpectralField::from_complex_fn(grid, |x| Complex64::from_polar(1.0, x)),
            t: 0.25,
        };
        let p = CnlsParams::new(1.0, -1.0, 0.3).unwrap();
        let path = dir.path().join("state.csv");
        write_state(&path, &s, &p).unwrap();
        let (back, meta) = read_state(&path).unwrap();
        assert_eq!(meta.modes, 16);
        assert_eq!(meta.gamma2, -1.0);
        assert_eq!(back.t, 0.25);
        assert!(back.psi1.sub(&s.psi1).unwrap().l2() < 1e-15);
        assert!(back.psi2.sub(&s.psi2).unwrap().l2() < 1e-15);
    }
}
