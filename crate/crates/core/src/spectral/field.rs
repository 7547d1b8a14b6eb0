use num_complex::Complex64;

use super::{forward, inverse, Grid, SpectralError};

/// Entire functions with `φ(0) = 0` that the model terms need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntireFn {
    /// `e^{2u} - 1`
    Exp2m1,
    /// `u²`
    Square,
}

impl EntireFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            EntireFn::Exp2m1 => (2.0 * x).exp_m1(),
            EntireFn::Square => x * x,
        }
    }
}

/// One periodic field stored as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid, real: bool) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.modes()],
            real,
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let mut f = Self::zeros(grid, true);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// Wraps coefficients given in FFT order. Real fields are symmetrised so
    /// that `û_{-m} = conj(û_m)` holds exactly.
    pub fn from_coefficients(
        grid: Grid,
        coeffs: Vec<Complex64>,
        real: bool,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.modes() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.modes(),
                got: coeffs.len(),
            });
        }
        let mut f = Self { grid, coeffs, real };
        if real {
            f.symmetrize();
        }
        Ok(f)
    }

    /// Builds a field from `(m, û_m)` pairs; unspecified modes are zero.
    pub fn from_modes(
        grid: Grid,
        modes: &[(i64, Complex64)],
        real: bool,
    ) -> Result<Self, SpectralError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.modes()];
        for &(m, c) in modes {
            if m <= -(grid.modes() as i64) / 2 || m > grid.modes() as i64 / 2 {
                return Err(SpectralError::InvalidArgument(format!(
                    "mode {m} outside grid range"
                )));
            }
            coeffs[grid.index(m)] = c;
        }
        Self::from_coefficients(grid, coeffs, real)
    }

    pub fn from_real_samples(grid: Grid, samples: &[f64]) -> Result<Self, SpectralError> {
        if samples.len() != grid.modes() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.modes(),
                got: samples.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        forward(&mut buf);
        Self::from_coefficients(grid, buf, true)
    }

    pub fn from_complex_samples(grid: Grid, samples: &[Complex64]) -> Result<Self, SpectralError> {
        if samples.len() != grid.modes() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.modes(),
                got: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        forward(&mut buf);
        Ok(Self {
            grid,
            coeffs: buf,
            real: false,
        })
    }

    /// Samples `f` at the collocation points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.points().into_iter().map(f).collect();
        Self::from_real_samples(grid, &samples).expect("sample count matches grid")
    }

    pub fn from_complex_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = grid.points().into_iter().map(f).collect();
        Self::from_complex_samples(grid, &samples).expect("sample count matches grid")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        self.coeffs[self.grid.index(m)]
    }

    /// Same coefficients relabelled onto another grid with the same mode count.
    pub fn with_grid(&self, grid: Grid) -> Result<Self, SpectralError> {
        if grid.modes() != self.grid.modes() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.modes(),
                got: self.grid.modes(),
            });
        }
        Ok(Self {
            grid,
            coeffs: self.coeffs.clone(),
            real: self.real,
        })
    }

    pub fn complex_samples(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        inverse(&mut buf);
        buf
    }

    pub fn real_samples(&self) -> Vec<f64> {
        self.complex_samples().into_iter().map(|c| c.re).collect()
    }

    /// Spectral interpolation at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> Complex64 {
        let n = self.grid.modes();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let c = self.coeffs[k];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let m = self.grid.mode(k);
            let xi = self.grid.wavenumber(m);
            if self.real && m == n as i64 / 2 {
                // Nyquist mode of a real field is a cosine.
                acc += c * (xi * x).cos();
            } else {
                acc += c * Complex64::from_polar(1.0, xi * x);
            }
        }
        if self.real {
            Complex64::new(acc.re, 0.0)
        } else {
            acc
        }
    }

    /// Largest deviation from conjugate symmetry, relative to the largest coefficient.
    pub fn realness_defect(&self) -> f64 {
        let n = self.grid.modes();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| (self.coeffs[k] - self.coeffs[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn symmetrize(&mut self) {
        let n = self.grid.modes();
        self.coeffs[0].im = 0.0;
        self.coeffs[n / 2].im = 0.0;
        for k in 1..n / 2 {
            let a = self.coeffs[k];
            let b = self.coeffs[n - k];
            let avg = 0.5 * (a + b.conj());
            self.coeffs[k] = avg;
            self.coeffs[n - k] = avg.conj();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zeroes every mode with `|m| > N/3`.
    pub fn dealias(&mut self) {
        let cut = self.grid.dealias_cutoff();
        for k in 0..self.grid.modes() {
            if self.grid.mode(k).abs() > cut {
                self.coeffs[k] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    /// Projects onto a grid of the same length with a different mode count:
    /// truncates modes that do not fit, pads with zeros otherwise.
    pub fn resampled(&self, modes: usize) -> Result<Self, SpectralError> {
        let grid = Grid::new(self.grid.length(), modes)?;
        let mut out = Self::zeros(grid, self.real);
        let half_src = self.grid.modes() as i64 / 2;
        let half_dst = modes as i64 / 2;
        let lim = half_src.min(half_dst);
        for m in -lim + 1..lim {
            out.coeffs[grid.index(m)] = self.coefficient(m);
        }
        // the shared Nyquist slot is kept only when the target is at least as wide
        if half_dst > half_src {
            let c = self.coefficient(half_src);
            if self.real {
                out.coeffs[grid.index(half_src)] = 0.5 * c;
                out.coeffs[grid.index(-half_src)] = 0.5 * c;
            } else {
                out.coeffs[grid.index(half_src)] = c;
            }
        } else if half_dst == half_src {
            out.coeffs[grid.index(half_src)] = self.coefficient(half_src);
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&c| c * a).collect(),
            real: self.real,
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, SpectralError> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&x, &y)| x + y * a)
                .collect(),
            real: self.real && other.real,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.axpy(-1.0, other)
    }

    /// Multiplies mode `m` by `symbol(ξ_m)`.
    pub fn map_symbol(&self, symbol: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * symbol(self.grid.wavenumber(self.grid.mode(k))))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
            real: self.real,
        }
    }

    /// Multiplies mode `m` by the real factor `symbol(ξ_m)`.
    pub fn map_real_symbol(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * symbol(self.grid.wavenumber(self.grid.mode(k))))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
            real: self.real,
        }
    }

    /// Spectral derivative `û_m ↦ (iξ_m)^order û_m`, `order ∈ 1..=4`.
    ///
    /// For real fields and odd orders the Nyquist mode is dropped, since
    /// its derivative is not representable as a real grid function.
    pub fn derivative(&self, order: u32) -> Result<Self, SpectralError> {
        if !(1..=4).contains(&order) {
            return Err(SpectralError::UnsupportedOrder(order));
        }
        let n = self.grid.modes();
        let mut out = self.clone();
        // repeated application of iξ keeps d^a ∘ d^b == d^{a+b} bitwise
        for _ in 0..order {
            for (k, c) in out.coeffs.iter_mut().enumerate() {
                let xi = self.grid.wavenumber(self.grid.mode(k));
                *c = Complex64::new(-c.im * xi, c.re * xi);
            }
        }
        if order % 2 == 1 && self.real {
            out.coeffs[n / 2] = Complex64::new(0.0, 0.0);
        }
        Ok(out)
    }

    /// Pointwise product via collocation, followed by the 2/3-rule truncation.
    pub fn product(&self, other: &Self) -> Result<Self, SpectralError> {
        self.grid.check_same(&other.grid)?;
        let a = self.complex_samples();
        let b = other.complex_samples();
        let real = self.real && other.real;
        let mut prod: Vec<Complex64> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| if real { Complex64::new(x.re * y.re, 0.0) } else { x * y })
            .collect();
        forward(&mut prod);
        let mut out = Self::from_coefficients(self.grid, prod, real)?;
        out.dealias();
        Ok(out)
    }

    /// Collocation evaluation of an entire function, then dealiasing.
    pub fn apply_entire(&self, f: EntireFn) -> Result<Self, SpectralError> {
        if !self.real {
            return Err(SpectralError::NonRealInput);
        }
        let samples: Vec<f64> = self.real_samples().into_iter().map(|x| f.eval(x)).collect();
        let mut out = Self::from_real_samples(self.grid, &samples)?;
        out.dealias();
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Plain coefficient ℓ² norm `sqrt(Σ |û_m|²)`.
    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Translates the field by `shift` (`u(x) ↦ u(x - shift)`).
    pub fn translated(&self, shift: f64) -> Self {
        let nyq = self.grid.modes() as i64 / 2;
        let real = self.real;
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let m = grid.mode(k);
                let phase = -grid.wavenumber(m) * shift;
                if real && m == nyq {
                    c * phase.cos()
                } else {
                    c * Complex64::from_polar(1.0, phase)
                }
            })
            .collect();
        Self { grid, coeffs, real }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(n: usize) -> Grid {
        Grid::new(2.0 * PI, n).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 6).is_err());
        assert!(Grid::new(1.0, 9).is_err());
        assert!(Grid::new(0.0, 8).is_err());
        let grid = Grid::new(3.0, 8).unwrap();
        assert_eq!(grid.mode(4), 4);
        assert_eq!(grid.mode(5), -3);
        assert_eq!(grid.wavenumber(3), 2.0 * PI * 3.0 / 3.0);
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let u = SpectralField::from_fn(g(32), f64::cos);
        assert!(close(u.coefficient(1), Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(u.coefficient(-1), Complex64::new(0.5, 0.0), 1e-15));
        assert!(u.realness_defect() < 1e-14);
    }

    #[test]
    fn product_identity_and_trig() {
        let grid = g(16);
        let one = SpectralField::constant(grid, 1.0);
        let v = SpectralField::from_fn(grid, |x| x.sin() + 0.3 * (2.0 * x).cos());
        let p = one.product(&v).unwrap();
        for (a, b) in p.coefficients().iter().zip(v.coefficients()) {
            assert!(close(*a, *b, 1e-15));
        }
        let c = SpectralField::from_fn(grid, f64::cos);
        let cc = c.product(&c).unwrap();
        assert!(close(cc.coefficient(0), Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(cc.coefficient(2), Complex64::new(0.25, 0.0), 1e-15));
        assert!(close(cc.coefficient(-2), Complex64::new(0.25, 0.0), 1e-15));
    }

    #[test]
    fn product_of_exponentials_on_small_grid() {
        let grid = g(8);
        let e = SpectralField::from_modes(grid, &[(1, Complex64::new(1.0, 0.0))], false).unwrap();
        let p = e.product(&e).unwrap();
        // direct convolution oracle: only mode 2 survives, 2 <= 8/3
        for k in 0..8 {
            let m = grid.mode(k);
            let expect = if m == 2 { 1.0 } else { 0.0 };
            assert!(close(p.coefficient(m), Complex64::new(expect, 0.0), 1e-15));
        }
    }

    #[test]
    fn product_grid_mismatch() {
        let a = SpectralField::zeros(g(8), true);
        let b = SpectralField::zeros(g(16), true);
        assert!(matches!(a.product(&b), Err(SpectralError::GridMismatch(..))));
    }

    #[test]
    fn entire_functions() {
        let grid = g(16);
        let z = SpectralField::zeros(grid, true);
        assert!(z.apply_entire(EntireFn::Exp2m1).unwrap().is_zero());
        let c = SpectralField::constant(grid, 0.1);
        let e = c.apply_entire(EntireFn::Exp2m1).unwrap();
        assert!((e.mean() - 0.221_402_758_160_169_83).abs() < 1e-15);
        let cos = SpectralField::from_fn(grid, f64::cos);
        let sq = cos.apply_entire(EntireFn::Square).unwrap();
        assert!(close(sq.coefficient(0), Complex64::new(0.5, 0.0), 1e-15));
        assert!(close(sq.coefficient(2), Complex64::new(0.25, 0.0), 1e-15));
        let cplx = SpectralField::zeros(grid, false);
        assert_eq!(cplx.apply_entire(EntireFn::Square), Err(SpectralError::NonRealInput));
    }

    #[test]
    fn derivatives_of_cosine() {
        let grid = g(32);
        let cos = SpectralField::from_fn(grid, f64::cos);
        let d1 = cos.derivative(1).unwrap();
        let sin = SpectralField::from_fn(grid, f64::sin);
        for (a, b) in d1.coefficients().iter().zip(sin.coefficients()) {
            assert!(close(*a, -*b, 1e-15), "{a} {b}");
        }
        let d3 = cos.derivative(3).unwrap();
        // grid noise near ξ = 15 is amplified by ξ³
        for (a, b) in d3.coefficients().iter().zip(sin.coefficients()) {
            assert!(close(*a, *b, 1e-12));
        }
        let k = SpectralField::constant(grid, 2.5);
        for order in 1..=4 {
            assert!(k.derivative(order).unwrap().is_zero());
        }
        assert_eq!(cos.derivative(5), Err(SpectralError::UnsupportedOrder(5)));
        assert_eq!(cos.derivative(0), Err(SpectralError::UnsupportedOrder(0)));
    }

    #[test]
    fn first_derivative_twice_is_second() {
        let grid = g(32);
        let u = SpectralField::from_fn(grid, |x| (x.sin()).exp());
        let twice = u.derivative(1).unwrap().derivative(1).unwrap();
        let second = u.derivative(2).unwrap();
        // the Nyquist mode is dropped by odd derivatives, compare elsewhere
        for k in 0..32 {
            if k == 16 {
                continue;
            }
            assert_eq!(twice.coefficients()[k], second.coefficients()[k]);
        }
    }

    #[test]
    fn interpolation_and_translation() {
        let grid = g(16);
        let u = SpectralField::from_fn(grid, |x| x.sin() + 0.2 * (3.0 * x).cos());
        let x = 0.731;
        assert!((u.eval_at(x).re - (x.sin() + 0.2 * (3.0 * x).cos())).abs() < 1e-14);
        let t = u.translated(0.4);
        assert!((t.eval_at(x).re - u.eval_at(x - 0.4).re).abs() < 1e-14);
    }

    #[test]
    fn resampling_preserves_band_limited_content() {
        let grid = g(16);
        let u = SpectralField::from_fn(grid, |x| x.sin() + 0.2 * (3.0 * x).cos());
        let up = u.resampled(64).unwrap();
        let back = up.resampled(16).unwrap();
        for (a, b) in back.coefficients().iter().zip(u.coefficients()) {
            assert!(close(*a, *b, 1e-15));
        }
        assert!((up.eval_at(1.1).re - u.eval_at(1.1).re).abs() < 1e-14);
    }
}
