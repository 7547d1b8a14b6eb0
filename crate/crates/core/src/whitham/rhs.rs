use crate::cnls::{CnlsParams, ModulationField};
use crate::spectral::{SpectralError, SpectralField};

/// `M(u) d` at one point.
pub fn m_times(u: [f64; 4], p: &CnlsParams, d: [f64; 4]) -> [f64; 4] {
    let [r1, v1, r2, v2] = u;
    let e1 = (2.0 * r1).exp();
    let e2 = (2.0 * r2).exp();
    [
        -2.0 * v1 * d[0] - d[1],
        2.0 * p.gamma1 * e1 * d[0] - 2.0 * v1 * d[1] + 2.0 * p.alpha * e2 * d[2],
        -2.0 * v2 * d[2] - d[3],
        2.0 * p.alpha * e1 * d[0] + 2.0 * p.gamma2 * e2 * d[2] - 2.0 * v2 * d[3],
    ]
}

/// `(DM(u)[w]) d`: directional derivative of `M` at `u` along `w`, applied to `d`.
pub fn dm_times(u: [f64; 4], p: &CnlsParams, w: [f64; 4], d: [f64; 4]) -> [f64; 4] {
    let e1 = (2.0 * u[0]).exp();
    let e2 = (2.0 * u[2]).exp();
    [
        -2.0 * w[1] * d[0],
        4.0 * p.gamma1 * e1 * w[0] * d[0] - 2.0 * w[1] * d[1] + 4.0 * p.alpha * e2 * w[2] * d[2],
        -2.0 * w[3] * d[2],
        4.0 * p.alpha * e1 * w[0] * d[0] + 4.0 * p.gamma2 * e2 * w[2] * d[2] - 2.0 * w[3] * d[3],
    ]
}

/// `½ (D²M(u)[w, w]) d`; only the `e^{2r}` entries are curved.
pub fn half_d2m_times(u: [f64; 4], p: &CnlsParams, w: [f64; 4], d: [f64; 4]) -> [f64; 4] {
    let e1 = (2.0 * u[0]).exp();
    let e2 = (2.0 * u[2]).exp();
    let a = 4.0 * e1 * w[0] * w[0] * d[0];
    let b = 4.0 * e2 * w[2] * w[2] * d[2];
    [0.0, p.gamma1 * a + p.alpha * b, 0.0, p.alpha * a + p.gamma2 * b]
}

/// Evaluates `f(values, derivatives)` at every collocation point, where
/// `values[i]` and `derivatives[i]` are the point values of `fields[i]` and
/// of `∂_X fields[i]`, and returns the dealiased result.
pub fn pointwise(
    fields: &[&ModulationField],
    f: impl Fn(&[[f64; 4]], &[[f64; 4]]) -> [f64; 4],
) -> Result<ModulationField, SpectralError> {
    let grid = fields[0].grid();
    let t = fields[0].t;
    let mut vals = Vec::with_capacity(fields.len());
    let mut ders = Vec::with_capacity(fields.len());
    for u in fields {
        grid.check_same(&u.grid())?;
        vals.push(u.point_values());
        ders.push(u.try_map(|c| c.derivative(1))?.point_values());
    }
    let n = grid.modes();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut v = vec![[0.0; 4]; fields.len()];
    let mut d = vec![[0.0; 4]; fields.len()];
    for j in 0..n {
        for i in 0..fields.len() {
            v[i] = vals[i][j];
            d[i] = ders[i][j];
        }
        let y = f(&v, &d);
        for c in 0..4 {
            out[c][j] = y[c];
        }
    }
    let comps = out.map(|s| {
        SpectralField::from_real_samples(grid, &s)
            .expect("sample count matches grid")
            .dealiased()
    });
    ModulationField::new(comps, t)
}

/// `M(u) ∂_X u`, collocated and dealiased.
pub fn wme_rhs(u: &ModulationField, p: &CnlsParams) -> Result<ModulationField, SpectralError> {
    pointwise(&[u], |v, d| m_times(v[0], p, d[0]))
}

fn dispersive(r: &SpectralField) -> Result<SpectralField, SpectralError> {
    let dr = r.derivative(1)?;
    r.derivative(3)?.add(&dr.product(&dr)?.derivative(1)?)
}

/// `F = (0, ∂³r₁ + ∂(∂r₁)², 0, ∂³r₂ + ∂(∂r₂)²)`.
pub fn f_term(u: &ModulationField) -> Result<ModulationField, SpectralError> {
    let z = SpectralField::zeros(u.grid(), true);
    Ok(ModulationField {
        r1: z.clone(),
        v1: dispersive(&u.r1)?,
        r2: z,
        v2: dispersive(&u.r2)?,
        t: u.t,
    })
}
