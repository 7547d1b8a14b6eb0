use super::*;
use crate::spectral::Grid;
use crate::Complex64;
use nalgebra::{Matrix4, Vector4};
use std::f64::consts::PI;

fn grid() -> Grid {
    Grid::new(2.0 * PI, 32).unwrap()
}

fn field(f: impl Fn(f64) -> f64) -> SpectralField {
    SpectralField::from_fn(grid(), f)
}

fn hyperbolic() -> CnlsParams {
    CnlsParams::new(-1.0, -1.0, 0.3).unwrap()
}

fn smooth_data() -> ModulationField {
    ModulationField::new(
        [
            field(|x| 0.1 * x.cos()),
            field(|x| 0.05 * (x + 0.3).sin()),
            field(|x| -0.08 * (x - 0.5).cos()),
            field(|x| 0.04 * (2.0 * x).sin()),
        ],
        0.0,
    )
    .unwrap()
}

fn frozen_pair() -> (ModulationField, ModulationField) {
    let u1 = ModulationField::new(
        [
            field(|x| 0.3 * (x + 1.0).sin()),
            field(|x| -0.2 * (2.0 * x).cos()),
            field(|x| 0.25 * x.cos() + 0.1 * (3.0 * x).sin()),
            field(|x| 0.15 * (x - 0.2).sin()),
        ],
        0.0,
    )
    .unwrap();
    (smooth_data(), u1)
}

fn max_l2(u: &ModulationField) -> f64 {
    u.components().iter().map(|c| c.l2()).fold(0.0, f64::max)
}

fn full_rhs(u: &ModulationField, nu: f64, p: &CnlsParams) -> ModulationField {
    wme_rhs(u, p).unwrap().axpy(nu, &f_term(u).unwrap()).unwrap()
}

#[test]
fn first_forcing_is_f_term() {
    let a = 0.4;
    let z = SpectralField::zeros(grid(), true);
    let u0 = ModulationField::new([field(|x| a * x.cos()), z.clone(), z.clone(), z], 0.0).unwrap();
    let f1 = corrector_forcing(1, &[&u0], &hyperbolic()).unwrap();
    let want = field(|x| a * x.sin() + a * a * (2.0 * x).sin());
    assert!(f1.v1.sub(&want).unwrap().l2() < 1e-12);
    assert_eq!(f1, f_term(&u0).unwrap());
    let c = ModulationField::constant(grid(), [0.1, 0.2, -0.3, 0.4], 0.0);
    assert!(corrector_forcing(1, &[&c], &hyperbolic()).unwrap().components().iter().all(|f| f.is_zero()));
}

#[test]
fn forcing_order_guard() {
    let u = smooth_data();
    assert_eq!(
        corrector_forcing(3, &[&u, &u, &u], &hyperbolic()),
        Err(CorrectorError::OrderUnsupported(3))
    );
    assert_eq!(
        corrector_forcing(2, &[&u], &hyperbolic()),
        Err(CorrectorError::IncompleteBundle(1))
    );
}

#[test]
fn second_forcing_matches_nu_differences() {
    for p in [hyperbolic(), CnlsParams::new(1.0, -1.0, 0.45).unwrap()] {
        let (u0, u1) = frozen_pair();
        let f2 = corrector_forcing(2, &[&u0, &u1], &p).unwrap();
        let scale = max_l2(&f2);
        for h in [1e-3, 1e-4] {
            let at = |nu: f64| full_rhs(&u0.axpy(nu, &u1).unwrap(), nu, &p);
            let fd = at(h)
                .axpy(-2.0, &at(0.0))
                .unwrap()
                .axpy(1.0, &at(-h))
                .unwrap()
                .scale(0.5 / (h * h));
            let err = max_l2(&fd.sub(&f2).unwrap());
            assert!(err < 1e-5 * scale, "h {h}: {err:e} vs {scale:e}");
        }
    }
}

#[test]
fn constant_background_has_no_correctors() {
    let u0 = ModulationField::constant(grid(), [0.1, -0.2, 0.05, 0.3], 0.0);
    let plan = Integration::new(1e-3, 20, 5);
    let b = build_bundle(&u0, 2, &hyperbolic(), &ViscositySetting::laplacian(1e-3), &plan).unwrap();
    assert_eq!(b.levels.len(), 3);
    for level in &b.levels[1..] {
        for u in level {
            assert!(u.components().iter().all(|c| c.l2() < 1e-15));
        }
    }
    for u in &b.levels[0] {
        assert!(max_l2(&u.sub(&u0).unwrap()) < 1e-14);
    }
}

#[test]
fn correctors_start_at_zero() {
    let plan = Integration::new(1e-3, 4, 2);
    let b = build_bundle(&smooth_data(), 2, &hyperbolic(), &ViscositySetting::inviscid(), &plan).unwrap();
    assert_eq!(b.times().len(), 3);
    for n in 1..=2 {
        assert!(b.levels[n][0].components().iter().all(|c| c.is_zero()));
        assert!(max_l2(&b.levels[n][2]) > 0.0);
    }
}

#[test]
fn short_time_taylor() {
    let p = hyperbolic();
    let u0 = smooth_data();
    let f1 = corrector_forcing(1, &[&u0], &p).unwrap();
    let err = |dt: f64| {
        let plan = Integration::new(dt, 1, 1);
        let b = build_bundle(&u0, 1, &p, &ViscositySetting::inviscid(), &plan).unwrap();
        max_l2(&b.levels[1][1].sub(&f1.scale(dt)).unwrap())
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    let slope = (e1 / e2).log2();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn correctors_are_linear_in_the_forcing() {
    let p = hyperbolic();
    let u0 = smooth_data();
    let plan = Integration::new(2e-3, 20, 10);
    let visc = ViscositySetting::laplacian(1e-3);
    let base = integrate_hierarchy(&u0, 1, &p, &visc, &plan, &|n, lower| corrector_forcing(n, lower, &p)).unwrap();
    let doubled = integrate_hierarchy(&u0, 1, &p, &visc, &plan, &|n, lower| {
        Ok(corrector_forcing(n, lower, &p)?.scale(2.0))
    })
    .unwrap();
    for (a, b) in base[1].iter().zip(&doubled[1]) {
        let scale = max_l2(a).max(1e-300);
        assert!(max_l2(&b.sub(&a.scale(2.0)).unwrap()) <= 1e-12 * scale);
    }
    assert_eq!(base[0], doubled[0]);
}

#[test]
fn solve_corrector_matches_bundle() {
    let p = hyperbolic();
    let plan = Integration::new(2e-3, 10, 5);
    let visc = ViscositySetting::laplacian(1e-3);
    let b = build_bundle(&smooth_data(), 2, &p, &visc, &plan).unwrap();
    assert_eq!(solve_corrector(1, &b, &p, &visc).unwrap(), b.levels[1]);
    assert_eq!(solve_corrector(2, &b, &p, &visc).unwrap(), b.levels[2]);
    assert!(matches!(solve_corrector(3, &b, &p, &visc), Err(CorrectorError::OrderUnsupported(3))));
}

#[test]
fn assembly_identities() {
    let p = hyperbolic();
    let plan = Integration::new(1e-2, 1, 1);
    let b = build_bundle(&smooth_data(), 2, &p, &ViscositySetting::inviscid(), &plan).unwrap();
    assert_eq!(assemble(&b, 0.0).unwrap(), b.levels[0]);
    assert_eq!(assemble_to(&b, 0, 0.7).unwrap(), b.levels[0]);
    let got = assemble_to(&b, 1, 0.1).unwrap();
    for k in 0..2 {
        let hand: [SpectralField; 4] = std::array::from_fn(|c| {
            let a = b.levels[0][k].components()[c].coefficients();
            let d = b.levels[1][k].components()[c].coefficients();
            let sum: Vec<Complex64> = a.iter().zip(d).map(|(x, y)| x + y * 0.1).collect();
            SpectralField::from_coefficients(grid(), sum, true).unwrap()
        });
        for (g, h) in got[k].components().iter().zip(&hand) {
            assert!(g.sub(h).unwrap().l2() <= 1e-15);
        }
    }
    assert!(matches!(assemble_to(&b, 3, 0.1), Err(CorrectorError::IncompleteBundle(3))));
}

#[test]
fn assembly_is_polynomial_in_nu() {
    let p = hyperbolic();
    let plan = Integration::new(2e-3, 10, 10);
    let b = build_bundle(&smooth_data(), 2, &p, &ViscositySetting::laplacian(1e-3), &plan).unwrap();
    let nus: [f64; 4] = [0.05, 0.1, 0.2, 0.3];
    let v = Matrix4::from_fn(|i, j| nus[i].powi(j as i32));
    let inv = v.try_inverse().unwrap();
    let samples: Vec<ModulationField> = nus.iter().map(|&nu| assemble(&b, nu).unwrap()[1].clone()).collect();
    for level in 0..4 {
        let row: Vector4<f64> = inv.row(level).transpose();
        let mut c = ModulationField::zeros(grid(), 0.0);
        for (w, s) in row.iter().zip(&samples) {
            c = c.axpy(*w, s).unwrap();
        }
        let want = if level <= 2 {
            b.levels[level][1].clone()
        } else {
            ModulationField::zeros(grid(), 0.0)
        };
        let err = max_l2(&c.sub(&want).unwrap());
        assert!(err < 1e-10, "level {level}: {err:e}");
    }
}

#[test]
fn richardson_bundle_is_consistent() {
    let p = hyperbolic();
    let plan = Integration::new(2e-3, 10, 5);
    let b = build_extrapolated_bundle(&smooth_data(), 1, &p, &[4e-3, 2e-3, 1e-3], &plan).unwrap();
    assert_eq!(b.betas.len(), 3);
    assert!(b.levels[1][0].components().iter().all(|c| c.is_zero()));
    let inviscid = build_bundle(&smooth_data(), 1, &p, &ViscositySetting::inviscid(), &plan).unwrap();
    let single = build_bundle(&smooth_data(), 1, &p, &ViscositySetting::laplacian(1e-3), &plan).unwrap();
    for n in 0..2 {
        let e_ext = max_l2(&b.levels[n][2].sub(&inviscid.levels[n][2]).unwrap());
        let e_one = max_l2(&single.levels[n][2].sub(&inviscid.levels[n][2]).unwrap());
        assert!(e_ext < 1e-3 * e_one, "level {n}: {e_ext:e} vs {e_one:e}");
    }
}

#[test]
fn time_derivative_is_exact_on_quartics() {
    let h = 0.1;
    let traj: Vec<ModulationField> = (0..9)
        .map(|k| {
            let t = 0.3 + k as f64 * h;
            ModulationField::constant(grid(), [t.powi(4), t.powi(3), t * t, 1.0 - t], t)
        })
        .collect();
    let d = time_derivative(&traj).unwrap();
    for u in &d {
        let t = u.t;
        let want = [4.0 * t.powi(3), 3.0 * t * t, 2.0 * t, -1.0];
        for (got, w) in u.mean_state().iter().zip(want) {
            assert!((got - w).abs() < 1e-11, "t {t}: {got} vs {w}");
        }
    }
    assert!(time_derivative(&traj[..4]).is_err());
}

#[test]
fn constant_solution_has_zero_residual() {
    let u = ModulationField::constant(grid(), [0.2, 0.1, -0.1, 0.3], 0.0);
    let traj: Vec<_> = (0..9).map(|k| u.clone().with_t(0.01 * k as f64)).collect();
    for r in residual(&traj, 0.3, &hyperbolic()).unwrap() {
        assert!(max_l2(&r) < 1e-13);
    }
}

#[test]
fn leading_residual_at_start_is_the_dispersive_term() {
    let p = hyperbolic();
    let a = 0.2;
    let z = SpectralField::zeros(grid(), true);
    let u0 = ModulationField::new([field(|x| a * x.cos()), z.clone(), z.clone(), z], 0.0).unwrap();
    let plan = Integration::new(1e-3, 8, 1);
    let b = build_bundle(&u0, 0, &p, &ViscositySetting::inviscid(), &plan).unwrap();
    let nu = 0.01;
    let res = residual(&b.levels[0], nu, &p).unwrap();
    let want = field(|x| -nu * (a * x.sin() + a * a * (2.0 * x).sin()));
    assert!(res[0].v1.sub(&want).unwrap().l2() < 1e-9);
    assert!(res[0].r1.l2() < 1e-9 && res[0].r2.l2() < 1e-9 && res[0].v2.l2() < 1e-9);
}

#[test]
fn coarse_time_grid_is_rejected() {
    let traj: Vec<_> = (0..9)
        .map(|k| {
            let t = 0.2 * k as f64;
            ModulationField::constant(grid(), [(6.0 * t).sin(), 0.0, 0.0, 0.0], t)
        })
        .collect();
    let norm = |u: &ModulationField| Ok(max_l2(u));
    let err = checked_residual(&traj, 0.0, &hyperbolic(), &norm, 0.0).unwrap_err();
    assert!(matches!(err, CorrectorError::TimeGridTooCoarse { .. }));
    let fine: Vec<_> = (0..17)
        .map(|k| {
            let t = 0.002 * k as f64;
            ModulationField::constant(grid(), [(6.0 * t).sin(), 0.0, 0.0, 0.0], t)
        })
        .collect();
    assert!(checked_residual(&fine, 0.0, &hyperbolic(), &norm, 0.0).is_ok());
}

#[test]
fn fit_order_synthetic() {
    let nus = [0.04, 0.02, 0.01, 0.005];
    let ys: Vec<f64> = nus.iter().map(|n| 3.0 * n * n).collect();
    let f = fit_order(&nus, &ys).unwrap();
    assert!((f.order - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-12);

    let xs: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect();
    let ys: Vec<f64> = xs.iter().map(|n| 0.7 * n.powi(3) * (1.0 + 0.01 * n)).collect();
    assert!((fit_order(&xs, &ys).unwrap().order - 3.0).abs() < 0.02);

    let flat = fit_order(&nus, &[2.0; 4]).unwrap();
    assert_eq!(flat.order, 0.0);

    for (x, y) in [
        (vec![0.1, 0.2], vec![1.0, 2.0]),
        (vec![0.1, 0.2, 0.3], vec![1.0, 0.0, 2.0]),
        (vec![0.1, 0.1, 0.3], vec![1.0, 2.0, 3.0]),
    ] {
        assert!(matches!(fit_order(&x, &y), Err(CorrectorError::DegenerateSamples(_))));
    }
}

#[test]
fn residual_report_files() {
    let report = ResidualReport {
        n: 1,
        rows: vec![
            ResidualRow { nu: 0.02, n: 1, t: 0.0, res_norm: 1e-4 },
            ResidualRow { nu: 0.01, n: 1, t: 0.0, res_norm: 2.5e-5 },
        ],
        sups: vec![(0.02, 1e-4), (0.01, 2.5e-5)],
        fit: OrderFit { order: 2.0, intercept: 0.0, r2: 1.0 },
    };
    let dir = tempfile::tempdir().unwrap();
    write_residual_report(dir.path(), &report).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("residual_n1.csv")).unwrap();
    assert!(csv.starts_with("nu,n,T,res_norm\n"));
    assert_eq!(csv.lines().count(), 3);
    let summary: toml::Table = std::fs::read_to_string(dir.path().join("residual_n1.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(summary["order"].as_float(), Some(2.0));
}
