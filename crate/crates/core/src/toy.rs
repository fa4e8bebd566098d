//! Scalar toy models for the singular part of the relaxation system:
//!
//! ```text
//! transport:   d_t u = (1/eps) h d_x u
//! oscillator:  d_t u = (i/eps) h u
//! combined:    d_t u = (i/eps) h (1 - mu d_xx)^{1/2} u
//! ```
//!
//! with a fixed depth profile `h`. The oscillator has the closed form
//! `u0 exp(i t h / eps)`, the transport model is solved along characteristics
//! and the combined model by diagonalizing `h^{1/2} L h^{1/2}` with
//! `L = (1 - mu d_xx)^{1/2}`, which is similar to `h L`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{fft_forward, fft_inverse, interpolate_coefficients, GridSpec, ScalarField};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A complex-valued field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.n_points,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        Self { grid, values: grid.points().into_iter().map(f).collect() }
    }

    pub fn from_real(f: &ScalarField) -> Self {
        Self { grid: f.grid(), values: f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft_forward(&mut buf);
        buf
    }

    pub fn from_coefficients(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Self {
        fft_inverse(&mut coeffs);
        Self { grid, values: coeffs }
    }

    pub fn apply_multiplier(&self, m: impl Fn(usize, f64) -> Complex64) -> Self {
        let mut c = self.coefficients();
        for (k, v) in c.iter_mut().enumerate() {
            *v *= m(k, self.grid.wavenumber(k));
        }
        Self::from_coefficients(self.grid, c)
    }

    /// `d_x^m`; odd orders drop the Nyquist mode.
    pub fn derivative(&self, m: u32) -> Self {
        let grid = self.grid;
        self.apply_multiplier(|k, kappa| {
            if m % 2 == 1 && grid.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                (I * kappa).powu(m)
            }
        })
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// `(int |u|^2 / h dx)^{1/2}`, the norm conserved by the transport and combined models.
    pub fn weighted_l2_norm(&self, h: &ScalarField) -> f64 {
        let s: f64 = self.values.iter().zip(h.values()).map(|(v, h)| v.norm_sqr() / h).sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn interpolate_at(&self, x: f64) -> Complex64 {
        interpolate_coefficients(self.grid, &self.coefficients(), x)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyModel {
    Transport,
    Oscillator,
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub model: ToyModel,
    pub epsilon: f64,
    pub mu: f64,
    pub h_profile: ScalarField,
    pub u0: ComplexField,
}

impl ToySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParams(format!("mu must be non-negative, got {}", self.mu)));
        }
        if self.h_profile.grid() != self.u0.grid() {
            return Err(Error::InvalidField("depth and initial data live on different grids".into()));
        }
        let min_depth = self.h_profile.min();
        if !(min_depth > 0.0) {
            return Err(Error::Cavitation { min_depth, h_star: 0.0 });
        }
        Ok(())
    }

    fn expect(&self, model: ToyModel) -> Result<()> {
        if self.model != model {
            return Err(Error::Domain(format!("spec describes the {:?} model, not {model:?}", self.model)));
        }
        self.validate()
    }
}

/// `u0(x) exp(i t h(x) / eps)`
pub fn toy_oscillator_exact(spec: &ToySpec, t: f64) -> Result<ComplexField> {
    spec.expect(ToyModel::Oscillator)?;
    let eps = spec.epsilon;
    let values = spec
        .u0
        .values()
        .iter()
        .zip(spec.h_profile.values())
        .map(|(u, h)| u * Complex64::from_polar(1.0, t * h / eps))
        .collect();
    Ok(ComplexField { grid: spec.u0.grid(), values })
}

/// Positional tolerance of the characteristic tracing.
pub const CHARACTERISTIC_TOL: f64 = 1e-11;

/// `u(t, x) = u0(Y(t))` where `dY/ds = h(Y) / eps`, `Y(0) = x`.
pub fn toy_transport_solve(spec: &ToySpec, t: f64) -> Result<ComplexField> {
    spec.expect(ToyModel::Transport)?;
    let grid = spec.u0.grid();
    let h_coeffs = spec.h_profile.coefficients();
    let speed = |y: f64| interpolate_coefficients(grid, &h_coeffs, y).re / spec.epsilon;
    let trace = |steps: usize| -> Vec<f64> {
        let ds = t / steps as f64;
        grid.points()
            .into_iter()
            .map(|mut y| {
                for _ in 0..steps {
                    let k1 = speed(y);
                    let k2 = speed(y + 0.5 * ds * k1);
                    let k3 = speed(y + 0.5 * ds * k2);
                    let k4 = speed(y + ds * k3);
                    y += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                y
            })
            .collect()
    };
    let h_max = spec.h_profile.max();
    // Start from roughly one step per tenth of a cell.
    let mut steps = ((t.abs() * h_max / spec.epsilon) / (0.1 * grid.dx())).ceil().max(1.0) as usize;
    steps = steps.min(1 << 16);
    let mut coarse = trace(steps);
    let mut feet = None;
    for _ in 0..8 {
        let fine = trace(2 * steps);
        let err = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err <= CHARACTERISTIC_TOL * grid.domain_length {
            feet = Some(fine);
            break;
        }
        steps *= 2;
        coarse = fine;
    }
    let feet = feet.ok_or_else(|| Error::Domain("characteristic tracing did not reach its tolerance".into()))?;
    let u_coeffs = spec.u0.coefficients();
    let values = feet.into_iter().map(|y| interpolate_coefficients(grid, &u_coeffs, y)).collect();
    Ok(ComplexField { grid, values })
}

/// Eigendecomposition of `h^{1/2} L h^{1/2}`, reusable for many output times.
#[derive(Debug, Clone)]
pub struct CombinedPropagator {
    grid: GridSpec,
    epsilon: f64,
    sqrt_h: Vec<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    u0: ComplexField,
}

impl CombinedPropagator {
    pub fn new(spec: &ToySpec) -> Result<Self> {
        spec.expect(ToyModel::Combined)?;
        let grid = spec.u0.grid();
        let n = grid.n_points;
        let mu = spec.mu;
        let sqrt_h: Vec<f64> = spec.h_profile.values().iter().map(|h| h.sqrt()).collect();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = ScalarField::new(grid, e)?
                .apply_multiplier(|_, kappa| Complex64::new((1.0 + mu * kappa * kappa).sqrt(), 0.0));
            for i in 0..n {
                m[(i, j)] = sqrt_h[i] * col.values()[i] * sqrt_h[j];
            }
        }
        // Symmetrize rounding noise away.
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        Ok(Self {
            grid,
            epsilon: spec.epsilon,
            sqrt_h,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            u0: spec.u0.clone(),
        })
    }

    /// `u(t) = h^{1/2} Q exp(i Lambda t / eps) Q^T h^{-1/2} u0`
    pub fn at(&self, t: f64) -> ComplexField {
        let n = self.grid.n_points;
        let q = &self.eigenvectors;
        let w: Vec<Complex64> = (0..n).map(|i| self.u0.values()[i] / self.sqrt_h[i]).collect();
        let mut coeff = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in coeff.iter_mut().enumerate() {
            let col = q.column(k);
            let proj: Complex64 = (0..n).map(|i| w[i] * col[i]).sum();
            *c = proj * Complex64::from_polar(1.0, self.eigenvalues[k] * t / self.epsilon);
        }
        let values = (0..n)
            .map(|i| {
                let row = q.row(i);
                let s: Complex64 = (0..n).map(|k| coeff[k] * row[k]).sum();
                s * self.sqrt_h[i]
            })
            .collect();
        ComplexField { grid: self.grid, values }
    }
}

pub fn toy_combined_solve(spec: &ToySpec, t: f64) -> Result<ComplexField> {
    Ok(CombinedPropagator::new(spec)?.at(t))
}

/// Pseudo-spectral RK4 for the combined model with `steps` equal steps,
/// an independent check of the propagator.
pub fn toy_combined_rk4(spec: &ToySpec, t: f64, steps: usize) -> Result<ComplexField> {
    spec.expect(ToyModel::Combined)?;
    let mu = spec.mu;
    let eps = spec.epsilon;
    let h = spec.h_profile.values().to_vec();
    let rhs = |u: &ComplexField| -> ComplexField {
        let lu = u.apply_multiplier(|_, kappa| Complex64::new((1.0 + mu * kappa * kappa).sqrt(), 0.0));
        let values = lu.values.iter().zip(&h).map(|(v, h)| I * h / eps * v).collect();
        ComplexField { grid: u.grid, values }
    };
    let axpy = |a: &ComplexField, c: f64, b: &ComplexField| ComplexField {
        grid: a.grid,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + c * y).collect(),
    };
    let dt = t / steps.max(1) as f64;
    let mut u = spec.u0.clone();
    for _ in 0..steps {
        let k1 = rhs(&u);
        let k2 = rhs(&axpy(&u, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&u, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&u, dt, &k3));
        u = axpy(&axpy(&axpy(&axpy(&u, dt / 6.0, &k1), dt / 3.0, &k2), dt / 3.0, &k3), dt / 6.0, &k4);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic_2pi(n).unwrap()
    }

    fn u0(g: GridSpec) -> ComplexField {
        ComplexField::from_fn(g, |x| Complex64::new(x.cos(), 0.5 * (2.0 * x).sin()) + 0.3)
    }

    fn spec(model: ToyModel, g: GridSpec, delta: f64, eps: f64, mu: f64) -> ToySpec {
        ToySpec {
            model,
            epsilon: eps,
            mu,
            h_profile: ScalarField::from_fn(g, |x| 1.0 + delta * x.cos()),
            u0: u0(g),
        }
    }

    #[test]
    fn oscillator_examples() {
        let g = grid(64);
        let s = spec(ToyModel::Oscillator, g, 0.0, 0.1, 0.0);
        let u = toy_oscillator_exact(&s, 0.0).unwrap();
        assert_eq!(u, s.u0);
        let u = toy_oscillator_exact(&s, 3.7).unwrap();
        assert!((u.derivative(1).l2_norm() - s.u0.derivative(1).l2_norm()).abs() < 1e-12);
        let shifted = s.u0.values()[5] * Complex64::from_polar(1.0, 37.0);
        assert!((u.values()[5] - shifted).norm() < 1e-13);
    }

    #[test]
    fn oscillator_gradient_norm_closed_form() {
        let g = grid(256);
        let (delta, eps) = (0.1, 0.5);
        let s = spec(ToyModel::Oscillator, g, delta, eps, 0.0);
        let up = s.u0.derivative(1);
        let hp = ScalarField::from_fn(g, |x| -delta * x.sin());
        for t in [0.0, 1.0, 10.0] {
            // d_x u = (u0' + i (t/eps) h' u0) exp(i t h / eps)
            let exact: f64 = (0..g.n_points)
                .map(|j| (up.values()[j] + I * (t / eps) * hp.values()[j] * s.u0.values()[j]).norm_sqr())
                .sum::<f64>()
                * g.dx();
            let measured = toy_oscillator_exact(&s, t).unwrap().derivative(1).l2_norm().powi(2);
            assert!((measured - exact).abs() < 1e-10 * exact, "t {t}");
        }
    }

    #[test]
    fn transport_examples() {
        let g = grid(64);
        let c = 1.3;
        let eps = 0.2;
        let mut s = spec(ToyModel::Transport, g, 0.0, eps, 0.0);
        s.h_profile = ScalarField::constant(g, c);
        assert!(toy_transport_solve(&s, 0.0).unwrap().sub(&s.u0).max_abs() < 1e-13);
        let t = 0.7;
        let u = toy_transport_solve(&s, t).unwrap();
        let exact = ComplexField::from_fn(g, |x| {
            let y = x + c * t / eps;
            Complex64::new(y.cos(), 0.5 * (2.0 * y).sin()) + 0.3
        });
        assert!(u.sub(&exact).max_abs() < 1e-9);
    }

    #[test]
    fn transport_preserves_sup_and_weighted_norm() {
        let g = grid(128);
        let s = spec(ToyModel::Transport, g, 0.3, 0.5, 0.0);
        let u = toy_transport_solve(&s, 1.0).unwrap();
        // The maximum of |u0| is attained between grid points; compare on a fine grid.
        let fine = grid(4096);
        let sup = |f: &ComplexField| {
            let c = f.coefficients();
            fine.points().into_iter().map(|x| interpolate_coefficients(g, &c, x).norm()).fold(0.0, f64::max)
        };
        assert!((sup(&u) - sup(&s.u0)).abs() < 1e-6);
        let w0 = s.u0.weighted_l2_norm(&s.h_profile);
        assert!((u.weighted_l2_norm(&s.h_profile) - w0).abs() < 1e-8 * w0);
    }

    #[test]
    fn transport_solves_the_equation() {
        let g = grid(128);
        let s = spec(ToyModel::Transport, g, 0.3, 0.5, 0.0);
        let (t, dt) = (0.4, 1e-3);
        let a = toy_transport_solve(&s, t - dt).unwrap();
        let b = toy_transport_solve(&s, t + dt).unwrap();
        let u = toy_transport_solve(&s, t).unwrap();
        let ux = u.derivative(1);
        for j in 0..g.n_points {
            let ut = (b.values()[j] - a.values()[j]) / (2.0 * dt);
            let rhs = s.h_profile.values()[j] / s.epsilon * ux.values()[j];
            assert!((ut - rhs).norm() < 1e-4 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn combined_reduces_to_known_cases() {
        let g = grid(64);
        // mu = 0: the oscillator.
        let s = spec(ToyModel::Combined, g, 0.2, 0.3, 0.0);
        let mut o = s.clone();
        o.model = ToyModel::Oscillator;
        let t = 2.0;
        let diff = toy_combined_solve(&s, t).unwrap().sub(&toy_oscillator_exact(&o, t).unwrap()).max_abs();
        assert!(diff < 1e-10, "{diff}");
        // Constant depth: a Fourier multiplier.
        let mut s = spec(ToyModel::Combined, g, 0.0, 0.3, 0.5);
        s.h_profile = ScalarField::constant(g, 1.2);
        let u = toy_combined_solve(&s, t).unwrap();
        let exact = s.u0.apply_multiplier(|_, k| {
            Complex64::from_polar(1.0, 1.2 / 0.3 * (1.0 + 0.5 * k * k).sqrt() * t)
        });
        assert!(u.sub(&exact).max_abs() < 1e-10);
    }

    #[test]
    fn combined_propagator_matches_rk4_and_conserves_weighted_norm() {
        let g = grid(32);
        let s = spec(ToyModel::Combined, g, 0.3, 1.0, 0.2);
        let t = 1.0;
        let exact = toy_combined_solve(&s, t).unwrap();
        let e1 = toy_combined_rk4(&s, t, 400).unwrap().sub(&exact).l2_norm();
        let e2 = toy_combined_rk4(&s, t, 800).unwrap().sub(&exact).l2_norm();
        let order = (e1 / e2).log2();
        assert!(order > 3.7, "order {order}");
        let w0 = s.u0.weighted_l2_norm(&s.h_profile);
        assert!((exact.weighted_l2_norm(&s.h_profile) - w0).abs() < 1e-10 * w0);
    }

    #[test]
    fn wrong_model_is_rejected() {
        let g = grid(16);
        let s = spec(ToyModel::Transport, g, 0.1, 1.0, 0.0);
        assert!(toy_oscillator_exact(&s, 1.0).is_err());
        assert!(toy_combined_solve(&s, 1.0).is_err());
    }
}
