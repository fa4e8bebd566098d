//! Periodic grids, real fields and Fourier pseudo-spectral operators.
//!
//! Fields live on an equispaced grid of the torus `[0, L)`. Fourier
//! coefficients follow the convention `f(x) = sum_k fhat_k exp(i kappa_k x)`
//! with `fhat_k = (1/n) sum_j f_j exp(-i kappa_k x_j)`, so that the continuum
//! L2 norm of a resolved field is `sqrt(L * sum_k |fhat_k|^2)` independently of
//! the grid size.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// In-place forward transform, normalized so that the output holds `fhat_k`.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let n = buf.len();
    plans(n).0.process(buf);
    let inv = 1.0 / n as f64;
    for c in buf.iter_mut() {
        *c *= inv;
    }
}

/// In-place inverse of [`fft_forward`].
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plans(n).1.process(buf);
}

/// Equispaced periodic grid on `[0, domain_length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub domain_length: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(domain_length: f64, n_points: usize) -> Result<Self> {
        let grid = Self { domain_length, n_points };
        grid.validate()?;
        Ok(grid)
    }

    /// The `2 pi` periodic grid with `n_points` samples.
    pub fn periodic_2pi(n_points: usize) -> Result<Self> {
        Self::new(2.0 * PI, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.domain_length.is_finite() && self.domain_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain_length must be positive, got {}",
                self.domain_length
            )));
        }
        if self.n_points < 8 || self.n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 8, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Signed integer mode index of FFT slot `k`; the Nyquist slot maps to `+n/2`.
    pub fn mode_index(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n_points / 2
    }

    /// Physical wavenumber of FFT slot `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.mode_index(k) as f64 / self.domain_length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest retained mode index under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.n_points as i64 / 3
    }
}

/// Samples of one real unknown on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_points {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n_points,
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at index {j}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points);
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.n_points])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(grid, grid.points().into_iter().map(f).collect())
    }

    /// Trigonometric polynomial `sum a cos(k x') + b sin(k x')` with
    /// `x' = 2 pi x / L`, given as `(k, a, b)` triples.
    pub fn from_modes(grid: GridSpec, modes: &[(u32, f64, f64)]) -> Self {
        let scale = 2.0 * PI / grid.domain_length;
        Self::from_fn(grid, |x| {
            modes
                .iter()
                .map(|&(k, a, b)| {
                    let arg = k as f64 * scale * x;
                    a * arg.cos() + b * arg.sin()
                })
                .sum()
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_vec(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn recip(&self) -> Self {
        self.map(|v| 1.0 / v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Trapezoidal (spectrally accurate) integral over the torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.dx()
    }

    /// Quadrature L2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Normalized Fourier coefficients in FFT slot order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        buf
    }

    pub fn from_coefficients(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Self {
        fft_inverse(&mut coeffs);
        Self::from_vec(grid, coeffs.into_iter().map(|c| c.re).collect())
    }

    /// Applies a Fourier multiplier `m(slot, wavenumber)`.
    pub fn apply_multiplier(&self, m: impl Fn(usize, f64) -> Complex64) -> Self {
        let mut coeffs = self.coefficients();
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= m(k, self.grid.wavenumber(k));
        }
        Self::from_coefficients(self.grid, coeffs)
    }

    /// First derivative. The Nyquist mode is dropped, which keeps the
    /// discrete operator real and skew-symmetric.
    pub fn dx(&self) -> Self {
        let grid = self.grid;
        self.apply_multiplier(|k, kappa| {
            if grid.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kappa)
            }
        })
    }

    /// Second derivative, `-kappa^2` on every mode including Nyquist.
    pub fn dxx(&self) -> Self {
        self.apply_multiplier(|_, kappa| Complex64::new(-kappa * kappa, 0.0))
    }

    /// Zeroes every Fourier mode with `|index| > n/3`.
    pub fn dealias(&self) -> Self {
        let grid = self.grid;
        let cutoff = grid.dealias_cutoff();
        let mut coeffs = self.coefficients();
        for (k, c) in coeffs.iter_mut().enumerate() {
            if grid.mode_index(k).abs() > cutoff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Self::from_coefficients(grid, coeffs)
    }

    /// Dealiased pointwise product.
    pub fn product(&self, other: &Self) -> Self {
        (self * other).dealias()
    }

    /// `||f||_{H^s} = ||(1 - d_xx)^{s/2} f||_{L2}`, evaluated from Fourier coefficients.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let coeffs = self.coefficients();
        let sum: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let kappa = self.grid.wavenumber(k);
                (1.0 + kappa * kappa).powf(s) * c.norm_sqr()
            })
            .sum();
        (sum * self.grid.domain_length).sqrt()
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn interpolate_at(&self, x: f64) -> f64 {
        interpolate_coefficients(self.grid, &self.coefficients(), x).re
    }
}

/// Evaluates `sum_k c_k exp(i kappa_k x)`, splitting the Nyquist mode
/// symmetrically so that real data gives a real interpolant.
pub(crate) fn interpolate_coefficients(grid: GridSpec, coeffs: &[Complex64], x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate() {
        let kappa = grid.wavenumber(k);
        if grid.is_nyquist(k) {
            acc += c * (kappa * x).cos();
        } else {
            acc += c * Complex64::from_polar(1.0, kappa * x);
        }
    }
    acc
}

/// Spectral derivative of order 1 or 2.
pub fn spectral_derivative(f: &ScalarField, order: u32) -> Result<ScalarField> {
    if !f.is_finite() {
        return Err(Error::InvalidField("non-finite samples".into()));
    }
    match order {
        1 => Ok(f.dx()),
        2 => Ok(f.dxx()),
        _ => Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}"))),
    }
}

pub fn dealias(f: &ScalarField) -> ScalarField {
    f.dealias()
}

pub fn sobolev_norm(f: &ScalarField, s: f64) -> f64 {
    f.sobolev_norm(s)
}

impl<'a> Add<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &'a ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &'a ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &'a ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Add<f64> for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: f64) -> ScalarField {
        self.map(|v| v + rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}
