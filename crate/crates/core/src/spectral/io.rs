//! Plain-text serialisation of spectral fields.
//!
//! One row per mode, `m,xi,re,im`, for `m = -N/2+1, …, N/2`, every float
//! written with 17 significant digits so a round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;

use super::{Grid, SpectralField};

pub const FIELD_HEADER: &str = "m,xi,re,im";

pub fn field_to_csv(u: &SpectralField) -> String {
    let grid = u.grid();
    let half = grid.modes() as i64 / 2;
    let mut out = String::with_capacity(80 * grid.modes());
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for m in -half + 1..=half {
        let c = u.coefficient(m);
        writeln!(out, "{m},{:.16e},{:.16e},{:.16e}", grid.wavenumber(m), c.re, c.im).unwrap();
    }
    out
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Parses [`field_to_csv`] output. The domain length is recovered from the
/// `xi` column; the field is flagged real when its coefficients are
/// conjugate-symmetric to round-off.
pub fn field_from_csv(text: &str) -> io::Result<SpectralField> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(FIELD_HEADER) {
        return Err(bad("missing field header"));
    }
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("expected 4 columns: {line}")));
        }
        let m: i64 = cols[0].trim().parse().map_err(|_| bad(line))?;
        let nums = cols[1..]
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad(line))?;
        rows.push((m, nums[0], Complex64::new(nums[1], nums[2])));
    }
    let n = rows.len();
    let (m1, xi1) = rows
        .iter()
        .find(|r| r.0 != 0)
        .map(|r| (r.0, r.1))
        .ok_or_else(|| bad("no nonzero mode"))?;
    let length = 2.0 * std::f64::consts::PI * m1 as f64 / xi1;
    let grid = Grid::new(length, n).map_err(|e| bad(e.to_string()))?;
    let modes: Vec<(i64, Complex64)> = rows.iter().map(|r| (r.0, r.2)).collect();
    let probe = SpectralField::from_modes(grid, &modes, false).map_err(|e| bad(e.to_string()))?;
    let real = probe.realness_defect() < 1e-13;
    if real {
        SpectralField::from_modes(grid, &modes, true).map_err(|e| bad(e.to_string()))
    } else {
        Ok(probe)
    }
}

pub fn write_field(path: &Path, u: &SpectralField) -> io::Result<()> {
    fs::write(path, field_to_csv(u))
}

pub fn read_field(path: &Path) -> io::Result<SpectralField> {
    field_from_csv(&fs::read_to_string(path)?)
}
