//! Periodic grids, discrete Fourier transforms and the norms built on them.
//!
//! The real line is approximated by the periodic box `[-L, L)` sampled at `n`
//! equispaced points. Fourier coefficients are stored in FFT order: index `k`
//! for `0 <= k < n/2` carries wavenumber `pi k / L`, index `k >= n/2` carries
//! `pi (k - n) / L`. Index `n/2` is the Nyquist mode.
//!
//! All quadratures are the rectangle rule of the uniform grid, which is
//! spectrally accurate for smooth periodic integrands. Norms are normalised
//! so that `sobolev_norm(f, 0)` equals the physical-space L^2 norm.
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic discretisation of `[-L, L)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_length: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive and finite, got {half_length}"
            )));
        }
        Ok(GridSpec { n, half_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Position of grid point `j`.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of FFT index `k`.
    pub fn mode(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wavenumber of FFT index `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        PI * self.mode(k) as f64 / self.half_length
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest resolved |xi| (the Nyquist wavenumber).
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.n / 2) as f64 / self.half_length
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Same point count, half length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GridSpec::new(self.n, self.half_length * factor)
    }

    /// Same box, `factor` times more points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        GridSpec::new(self.n * factor, self.half_length)
    }

    /// Wraps `d` into `[-L, L)`: the minimal-image displacement on the circle.
    pub fn wrap(&self, d: f64) -> f64 {
        let len = self.length();
        let w = (d + self.half_length).rem_euclid(len) - self.half_length;
        if w >= self.half_length {
            w - len
        } else {
            w
        }
    }

    /// Grids that differ only by rounding in the half length are treated as
    /// the same grid (scaling round trips go through `L * lambda / lambda`).
    pub fn compatible(&self, other: &GridSpec) -> bool {
        self.n == other.n
            && (self.half_length - other.half_length).abs() <= 1e-12 * self.half_length
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} L={}", self.n, self.half_length)
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: None });
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field { grid, values: vec![0.0; grid.n()] }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Field { grid, values: vec![value; grid.n()] }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Field { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Field { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the period.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// `int f g dx`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.check_compatible(other);
        self.grid.dx() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        self.check_compatible(other);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Field { grid: self.grid, values }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Field {
        self.zip_map(other, |x, y| x + a * y)
    }

    /// Cyclic shift by a whole number of grid points (positive moves the
    /// profile to the right).
    pub fn shift_points(&self, shift: isize) -> Field {
        let n = self.grid.n() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - shift).rem_euclid(n) as usize])
            .collect();
        Field { grid: self.grid, values }
    }

    /// Same samples reinterpreted on another grid with the same point count.
    pub fn with_grid(&self, grid: GridSpec) -> Result<Field> {
        Field::new(grid, self.values.clone())
    }

    fn check_compatible(&self, other: &Field) {
        assert!(
            self.grid.compatible(&other.grid),
            "fields live on different grids ({} vs {})",
            self.grid,
            other.grid
        );
    }
}

impl std::ops::Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Discrete Fourier coefficients (unnormalised forward DFT, FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest violation of `c(-xi) = conj(c(xi))`, relative to the largest
    /// coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| (self.coeffs[k] - self.coeffs[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Cached FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Fourier {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fourier {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
            wavenumbers: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn forward(&self, f: &Field) -> SpectralField {
        assert!(self.grid.compatible(f.grid()));
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        SpectralField { grid: self.grid, coeffs: buf }
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, s: &SpectralField) -> Field {
        let mut buf = s.coeffs.clone();
        self.inverse_in_place(&mut buf);
        Field::from_vec_unchecked(self.grid, buf.iter().map(|c| c.re).collect())
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Normalised inverse (divides by `n`).
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.grid.n() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Multiplies coefficients by `(i xi)^order`; the Nyquist mode is zeroed
    /// for odd orders.
    pub fn apply_derivative(&self, coeffs: &mut [Complex64], order: u32) {
        let nyq = self.grid.nyquist_index();
        for (k, c) in coeffs.iter_mut().enumerate() {
            if order % 2 == 1 && k == nyq {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, self.wavenumbers[k]).powu(order);
            }
        }
    }

    pub fn derivative(&self, f: &Field, order: u32) -> Field {
        let mut s = self.forward(f);
        self.apply_derivative(&mut s.coeffs, order);
        self.inverse(&s)
    }

    /// `sum_k (1+|xi_k|)^{2s} |c_k|^2 * dx / n`, the squared Sobolev norm.
    pub fn sobolev_norm_sq(&self, s: &SpectralField, index: f64) -> f64 {
        let scale = self.grid.dx() / self.grid.n() as f64;
        scale
            * s.coeffs
                .iter()
                .zip(&self.wavenumbers)
                .map(|(c, xi)| sobolev_weight(*xi, index) * c.norm_sqr())
                .sum::<f64>()
    }
}

/// Spatial Sobolev weight `(1+|xi|)^{2s}`.
pub fn sobolev_weight(xi: f64, s: f64) -> f64 {
    (1.0 + xi.abs()).powf(2.0 * s)
}

/// `d^order f / dx^order` computed spectrally.
pub fn spectral_derivative(f: &Field, order: u32) -> Result<Field> {
    if order == 0 {
        return Err(Error::invalid("derivative order must be positive"));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite { time: None });
    }
    Ok(Fourier::new(*f.grid()).derivative(f, order))
}

/// `( int (1+|xi|)^{2s} |f^(xi)|^2 dxi )^{1/2}` with the unitary transform
/// normalisation, so that `s = 0` gives the L^2 norm.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let fourier = Fourier::new(*f.grid());
    let spec = fourier.forward(f);
    fourier.sobolev_norm_sq(&spec, s).sqrt()
}

/// Smooth step: 0 for `y <= 0`, 1 for `y >= 1`, C^infinity in between.
fn smooth_step(y: f64) -> f64 {
    fn bump(y: f64) -> f64 {
        if y > 0.0 {
            (-1.0 / y).exp()
        } else {
            0.0
        }
    }
    let a = bump(y);
    let b = bump(1.0 - y);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Time cutoff: equal to 1 on `[-1/2, 1/2]`, supported in `[-1, 1]`.
pub fn smooth_cutoff(t: f64) -> f64 {
    smooth_step(2.0 * (1.0 - t.abs()))
}

/// Real samples on a space-time grid: `nt` uniform times on `[-t_half, t_half)`
/// times the spatial grid. Stored row-major with one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: GridSpec,
    nt: usize,
    t_half: f64,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: GridSpec, nt: usize, t_half: f64, values: Vec<f64>) -> Result<Self> {
        Self::check_time_grid(nt, t_half)?;
        if values.len() != nt * grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                nt * grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: None });
        }
        Ok(SpaceTimeField { grid, nt, t_half, values })
    }

    fn check_time_grid(nt: usize, t_half: f64) -> Result<()> {
        if nt < 8 || !nt.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "time sample count must be a power of two >= 8, got {nt}"
            )));
        }
        if !(t_half.is_finite() && t_half > 0.0) {
            return Err(Error::InvalidGrid(format!("bad temporal half width {t_half}")));
        }
        Ok(())
    }

    pub fn from_fn(
        grid: GridSpec,
        nt: usize,
        t_half: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        Self::check_time_grid(nt, t_half)?;
        let dt = 2.0 * t_half / nt as f64;
        let mut values = Vec::with_capacity(nt * grid.n());
        for m in 0..nt {
            let t = -t_half + m as f64 * dt;
            values.extend((0..grid.n()).map(|j| f(grid.x(j), t)));
        }
        SpaceTimeField::new(grid, nt, t_half, values)
    }

    /// Builds the field row by row from spatial fields `rows(t)`.
    pub fn from_rows(
        grid: GridSpec,
        nt: usize,
        t_half: f64,
        rows: impl Fn(f64) -> Field,
    ) -> Result<Self> {
        Self::check_time_grid(nt, t_half)?;
        let dt = 2.0 * t_half / nt as f64;
        let mut values = Vec::with_capacity(nt * grid.n());
        for m in 0..nt {
            let row = rows(-t_half + m as f64 * dt);
            assert!(row.grid().compatible(&grid));
            values.extend_from_slice(row.values());
        }
        SpaceTimeField::new(grid, nt, t_half, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn t_half(&self) -> f64 {
        self.t_half
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_half / self.nt as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        -self.t_half + m as f64 * self.dt()
    }

    /// Temporal frequency of FFT index `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        let mode = if m < self.nt / 2 { m as f64 } else { m as f64 - self.nt as f64 };
        PI * mode / self.t_half
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.grid.n();
        &self.values[m * n..(m + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpaceTimeField {
        SpaceTimeField { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn scale(&self, a: f64) -> SpaceTimeField {
        self.map(|v| a * v)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SpaceTimeField) -> SpaceTimeField {
        self.check_same(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        SpaceTimeField { values, ..self.clone() }
    }

    /// Multiplies every time row by `g(t)`.
    pub fn mul_time(&self, g: impl Fn(f64) -> f64) -> SpaceTimeField {
        let n = self.grid.n();
        let mut values = self.values.clone();
        for m in 0..self.nt {
            let w = g(self.time(m));
            for v in &mut values[m * n..(m + 1) * n] {
                *v *= w;
            }
        }
        SpaceTimeField { values, ..self.clone() }
    }

    /// Spectral x-derivative of every time row.
    pub fn dx(&self) -> SpaceTimeField {
        let fourier = Fourier::new(self.grid);
        let n = self.grid.n();
        let mut values = Vec::with_capacity(self.values.len());
        for m in 0..self.nt {
            let row = Field::from_vec_unchecked(self.grid, self.row(m).to_vec());
            values.extend(fourier.derivative(&row, 1).into_values());
        }
        debug_assert_eq!(values.len(), n * self.nt);
        SpaceTimeField { values, ..self.clone() }
    }

    /// Cyclic spatial shift by whole grid points.
    pub fn shift_points(&self, shift: isize) -> SpaceTimeField {
        let n = self.grid.n() as isize;
        let mut values = Vec::with_capacity(self.values.len());
        for m in 0..self.nt {
            let row = self.row(m);
            values.extend((0..n).map(|j| row[(j - shift).rem_euclid(n) as usize]));
        }
        SpaceTimeField { values, ..self.clone() }
    }

    /// `( int int |f|^2 dx dt )^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.dt() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// 2-D unnormalised forward DFT, row-major `[time][space]`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let n = self.grid.n();
        let nt = self.nt;
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(n);
        let ft = planner.plan_fft_forward(nt);
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in buf.chunks_mut(n) {
            fx.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); nt];
        for k in 0..n {
            for m in 0..nt {
                column[m] = buf[m * n + k];
            }
            ft.process(&mut column);
            for m in 0..nt {
                buf[m * n + k] = column[m];
            }
        }
        buf
    }

    fn check_same(&self, other: &SpaceTimeField) {
        assert!(
            self.grid.compatible(&other.grid)
                && self.nt == other.nt
                && (self.t_half - other.t_half).abs() <= 1e-12 * self.t_half,
            "space-time fields live on different grids"
        );
    }
}

/// X^{s,b} weight `(1+|tau - xi^3|)^{2b} (1+|xi|)^{2s}`.
pub fn xsb_weight(xi: f64, tau: f64, s: f64, b: f64) -> f64 {
    (1.0 + (tau - xi * xi * xi).abs()).powf(2.0 * b) * sobolev_weight(xi, s)
}

/// Bourgain norm `( int int (1+|tau-xi^3|)^{2b} (1+|xi|)^{2s} |f^(xi,tau)|^2 )^{1/2}`
/// with the unitary space-time transform `f^ = (2 pi)^{-1} int int f e^{-i(x xi + t tau)}`.
/// With this convention free Airy waves `W(t) g` concentrate on `tau = xi^3`.
pub fn xsb_norm(f: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let n = f.grid.n();
    let spec = f.spectrum();
    let xi: Vec<f64> = f.grid.wavenumbers();
    let scale = f.grid.dx() * f.dt() / (n * f.nt) as f64;
    let mut total = 0.0;
    for m in 0..f.nt {
        let tau = f.frequency(m);
        let row = &spec[m * n..(m + 1) * n];
        total += row
            .iter()
            .zip(&xi)
            .map(|(c, &k)| xsb_weight(k, tau, s, b) * c.norm_sqr())
            .sum::<f64>();
    }
    (scale * total).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> GridSpec {
        GridSpec::new(n, l).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(4, 1.0).is_err());
        assert!(GridSpec::new(12, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        assert!(GridSpec::new(16, f64::NAN).is_err());
    }

    #[test]
    fn spacing_and_wavenumbers() {
        let g = grid(64, 3.0);
        assert_eq!(g.dx() * 64.0, 6.0);
        let xi = g.wavenumbers();
        for k in 1..32 {
            assert_eq!(xi[k], -xi[64 - k]);
        }
        assert_eq!(xi[32], -PI * 32.0 / 3.0);
        assert_eq!(g.max_wavenumber(), PI * 32.0 / 3.0);
    }

    #[test]
    fn wrap_is_minimal_image() {
        let g = grid(16, 5.0);
        assert!((g.wrap(7.0) + 3.0).abs() < 1e-15);
        assert!((g.wrap(-6.0) - 4.0).abs() < 1e-15);
        assert!((g.wrap(2.5) - 2.5).abs() < 1e-15);
        assert_eq!(g.wrap(5.0), -5.0);
    }

    #[test]
    fn derivative_of_single_mode() {
        let l = 7.0;
        let g = grid(128, l);
        let f = Field::from_fn(g, |x| (PI * x / l).sin());
        let d = spectral_derivative(&f, 1).unwrap();
        let expected = Field::from_fn(g, |x| PI / l * (PI * x / l).cos());
        assert!((&d - &expected).max_abs() < 1e-10);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let f = Field::constant(grid(32, 2.0), 3.5);
        for order in 1..=4 {
            assert!(spectral_derivative(&f, order).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_rejects_order_zero() {
        let f = Field::zeros(grid(16, 1.0));
        assert!(spectral_derivative(&f, 0).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = grid(8, 1.0);
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(Field::new(g, v).is_err());
        assert!(Field::new(g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn sobolev_norm_of_single_mode() {
        let l = 4.0;
        let g = grid(64, l);
        let f = Field::from_fn(g, |x| (PI * x / l).sin());
        assert!((sobolev_norm(&f, 0.0) - l.sqrt()).abs() < 1e-12);
        // one mode at |xi| = pi/L: weight (1+pi/L)^{2s}
        let expected = (1.0 + PI / l) * l.sqrt();
        assert!((sobolev_norm(&f, 1.0) - expected).abs() < 1e-12);
        assert_eq!(sobolev_norm(&Field::zeros(g), 2.0), 0.0);
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = grid(16, PI);
        // pure Nyquist oscillation (-1)^j
        let f = Field::from_fn(g, |x| (8.0 * x).cos());
        assert!(spectral_derivative(&f, 1).unwrap().max_abs() < 1e-12);
        let d2 = spectral_derivative(&f, 2).unwrap();
        assert!((&d2 - &f.scale(-64.0)).max_abs() < 1e-10);
    }

    #[test]
    fn conjugate_symmetry_of_real_field() {
        let g = grid(64, 5.0);
        let f = Field::from_fn(g, |x| (-(x - 0.3) * (x - 0.3)).exp() + 0.1 * x.sin());
        let s = Fourier::new(g).forward(&f);
        assert!(s.conjugate_symmetry_defect() < 1e-15);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_cutoff(0.0), 1.0);
        assert_eq!(smooth_cutoff(0.5), 1.0);
        assert_eq!(smooth_cutoff(-0.5), 1.0);
        assert_eq!(smooth_cutoff(1.0), 0.0);
        assert_eq!(smooth_cutoff(-1.2), 0.0);
        let mid = smooth_cutoff(0.75);
        assert!((mid - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = smooth_cutoff(0.5 + 0.005 * i as f64);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn xsb_norm_of_zero_field() {
        let f = SpaceTimeField::from_fn(grid(16, 3.0), 16, 2.0, |_, _| 0.0).unwrap();
        assert_eq!(xsb_norm(&f, 1.0, 0.51), 0.0);
    }

    #[test]
    fn xsb_norm_with_zero_indices_is_l2() {
        let f = SpaceTimeField::from_fn(grid(32, 6.0), 32, 2.0, |x, t| {
            (-(x * x) - t * t).exp() * (1.0 + 0.3 * (x - t).sin())
        })
        .unwrap();
        let rel = (xsb_norm(&f, 0.0, 0.0) - f.l2_norm()).abs() / f.l2_norm();
        assert!(rel < 1e-12);
    }

    #[test]
    fn space_time_rejects_bad_shapes() {
        let g = grid(8, 1.0);
        assert!(SpaceTimeField::new(g, 8, 1.0, vec![0.0; 63]).is_err());
        assert!(SpaceTimeField::new(g, 6, 1.0, vec![0.0; 48]).is_err());
        assert!(SpaceTimeField::new(g, 8, -1.0, vec![0.0; 64]).is_err());
    }
}
