use std::f64::consts::PI;

use proptest::prelude::*;

use whitham_lab::cnls::{evolve, invariants, to_polar, CnlsParams, CnlsState, ModulationField};
use whitham_lab::spectral::{gevrey_norm, shift_constant, GevreyIndex, Grid, SpectralField};
use whitham_lab::whitham::{classify, f_term, wme_rhs};
use whitham_lab::Complex64;

const BAND: usize = 6;

fn grid() -> Grid {
    Grid::new(2.0 * PI, 32).unwrap()
}

fn field_from(c: &[(f64, f64)]) -> SpectralField {
    let mut modes = Vec::new();
    for (m, &(re, im)) in c.iter().enumerate() {
        let m = m as i64;
        let decay = (-0.5 * m as f64).exp();
        if m == 0 {
            modes.push((0, Complex64::new(re * decay, 0.0)));
        } else {
            let z = Complex64::new(re, im) * decay;
            modes.push((m, z));
            modes.push((-m, z.conj()));
        }
    }
    SpectralField::from_modes(grid(), &modes, true).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), BAND + 1)
}

fn small_field() -> impl Strategy<Value = ModulationField> {
    prop::array::uniform4(coeffs()).prop_map(|cs| {
        let comps = cs.map(|c| field_from(&c).scale(0.1));
        ModulationField::new(comps, 0.0).unwrap()
    })
}

fn params() -> impl Strategy<Value = CnlsParams> {
    (prop::bool::ANY, prop::bool::ANY, -0.9..0.9f64)
        .prop_filter_map("degenerate", |(a, b, alpha)| {
            CnlsParams::new(if a { 1.0 } else { -1.0 }, if b { 1.0 } else { -1.0 }, alpha).ok()
        })
}

fn worst(u: &ModulationField) -> f64 {
    u.components().iter().map(|c| c.l2()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_composes(c in coeffs()) {
        let u = field_from(&c);
        let twice = u.derivative(1).unwrap().derivative(1).unwrap();
        prop_assert_eq!(twice, u.derivative(2).unwrap());
    }

    #[test]
    fn exponent_shift_is_exact(c in coeffs(), p in 0.0..3.0f64, delta in 0.05..1.0f64, extra in 0.0..1.0f64, s in 0.0..2.0f64) {
        let u = field_from(&c);
        let sigma = delta + extra;
        let lhs = gevrey_norm(&u, GevreyIndex::new(s + p, sigma - delta).unwrap()).unwrap();
        let rhs = shift_constant(p, delta) * gevrey_norm(&u, GevreyIndex::new(s, sigma).unwrap()).unwrap();
        prop_assert!(lhs <= rhs, "{lhs} > {rhs}");
    }

    #[test]
    fn gevrey_norm_grows_with_strip(c in coeffs(), s in 0.0..2.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let u = field_from(&c);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n_lo = gevrey_norm(&u, GevreyIndex::new(s, lo).unwrap()).unwrap();
        let n_hi = gevrey_norm(&u, GevreyIndex::new(s, hi).unwrap()).unwrap();
        prop_assert!(n_lo <= n_hi);
    }

    #[test]
    fn resampling_round_trips(c in coeffs()) {
        let u = field_from(&c);
        let back = u.resampled(64).unwrap().resampled(32).unwrap();
        prop_assert!(back.sub(&u).unwrap().l2() < 1e-14);
    }

    #[test]
    fn constants_are_annihilated(point in prop::array::uniform4(-0.5..0.5f64), p in params()) {
        let u = ModulationField::constant(grid(), point, 0.0);
        prop_assert!(worst(&wme_rhs(&u, &p).unwrap()) < 1e-13);
        prop_assert!(worst(&f_term(&u).unwrap()) == 0.0);
    }

    #[test]
    fn rhs_commutes_with_grid_shifts(u in small_field(), p in params()) {
        let h = grid().spacing();
        let a = wme_rhs(&u.translated(h), &p).unwrap();
        let b = wme_rhs(&u, &p).unwrap().translated(h);
        prop_assert!(worst(&a.sub(&b).unwrap()) < 1e-12);
        let a = f_term(&u.translated(h)).unwrap();
        let b = f_term(&u).unwrap().translated(h);
        prop_assert!(worst(&a.sub(&b).unwrap()) < 1e-12);
    }

    #[test]
    fn velocity_shift_moves_eigenvalues(r in prop::array::uniform2(-0.5..0.5f64), c in -2.0..2.0f64, p in params()) {
        let a = classify([r[0], 0.0, r[1], 0.0], &p);
        let b = classify([r[0], c, r[1], c], &p);
        // real parts tie up to roundoff, so match nearest rather than sort
        let mut left: Vec<Complex64> = b.eigenvalues.to_vec();
        for z in a.eigenvalues.iter().map(|z| z - 2.0 * c) {
            let (k, d) = left
                .iter()
                .enumerate()
                .map(|(k, y)| (k, (z - y).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(d < 1e-10, "{z}: nearest at {d:e}");
            left.swap_remove(k);
        }
        prop_assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn polar_transform_ignores_constant_phase(u in small_field(), theta in -PI..PI) {
        let g = grid();
        let psi = |r: &SpectralField, v: &SpectralField| {
            let rs = r.real_samples();
            let phase = v.derivative(1).unwrap().real_samples();
            let s: Vec<Complex64> = rs.iter().zip(&phase).map(|(r, ph)| Complex64::from_polar(r.exp(), *ph)).collect();
            SpectralField::from_complex_samples(g, &s).unwrap()
        };
        let p = CnlsParams::new(-1.0, -1.0, 0.3).unwrap();
        let state = CnlsState::new(psi(&u.r1, &u.v1), psi(&u.r2, &u.v2), 0.0).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        let turned = CnlsState::new(state.psi1.map_symbol(|_| rot), state.psi2.map_symbol(|_| rot), 0.0).unwrap();
        let a = to_polar(&state, &p).unwrap();
        let b = to_polar(&turned, &p).unwrap();
        prop_assert!(worst(&a.sub(&b).unwrap()) < 1e-13);
    }

    #[test]
    fn masses_are_conserved(u in small_field(), p in params()) {
        let mk = |r: &SpectralField, v: &SpectralField| {
            let s: Vec<Complex64> = r
                .real_samples()
                .iter()
                .zip(v.real_samples())
                .map(|(r, v)| Complex64::from_polar((1.0 + r).max(0.1), v))
                .collect();
            SpectralField::from_complex_samples(grid(), &s).unwrap()
        };
        let s0 = CnlsState::new(mk(&u.r1, &u.v1), mk(&u.r2, &u.v2), 0.0).unwrap();
        let s1 = evolve(&s0, 1e-3, 200, &p).unwrap();
        let (a, b) = (invariants(&s0, &p), invariants(&s1, &p));
        prop_assert!((a.mass1 - b.mass1).abs() < 1e-12 * a.mass1);
        prop_assert!((a.mass2 - b.mass2).abs() < 1e-12 * a.mass2);
    }
}
