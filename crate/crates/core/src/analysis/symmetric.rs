//! Symmetric structure in the balanced unknowns `(zeta, u, iota, kappa)`:
//! `S_t (d_t V + u . grad V) + S_x d_x V + S_y d_y V = lambda^{1/2} J V + G(V)`.

use nalgebra::DVector;

use super::symbol::DenseMatrix;
use crate::spectral::ScalarField;
use crate::state::{ParamSet, StateV};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedSymbolPoint {
    pub zeta: f64,
    pub u: [f64; 2],
    pub iota: f64,
    pub kappa: f64,
    pub xi: [f64; 2],
    pub mu: f64,
    pub lambda: f64,
    pub dim: usize,
}

impl BalancedSymbolPoint {
    pub fn new_1d(zeta: f64, u: f64, iota: f64, kappa: f64, xi: f64, mu: f64, lambda: f64) -> Self {
        Self { zeta, u: [u, 0.0], iota, kappa, xi: [xi, 0.0], mu, lambda, dim: 1 }
    }

    pub fn new_2d(
        zeta: f64,
        u: [f64; 2],
        iota: f64,
        kappa: f64,
        xi: [f64; 2],
        mu: f64,
        lambda: f64,
    ) -> Self {
        Self { zeta, u, iota, kappa, xi, mu, lambda, dim: 2 }
    }

    pub fn depth(&self) -> f64 {
        1.0 + self.zeta
    }

    /// `1 + iota^2 / (3 h^2)`
    pub fn alpha(&self) -> f64 {
        balanced_alpha(self.depth(), self.iota)
    }

    /// `(1 - kappa^2 h^2 / (lambda mu)) / (1 + 2 iota / ((lambda mu)^{1/2} h))`
    pub fn beta(&self) -> f64 {
        balanced_beta(self.depth(), self.iota, self.kappa, self.lambda * self.mu)
    }

    /// Pointwise margin `1 - max(h |kappa|, 2 |iota| / h) / (lambda mu)^{1/2}`.
    pub fn margin(&self) -> f64 {
        pointwise_margin(self.depth(), self.iota, self.kappa, self.lambda * self.mu)
    }
}

fn balanced_alpha(h: f64, iota: f64) -> f64 {
    1.0 + iota * iota / (3.0 * h * h)
}

fn balanced_beta(h: f64, iota: f64, kappa: f64, lambda_mu: f64) -> f64 {
    (1.0 - kappa * kappa * h * h / lambda_mu) / (1.0 + 2.0 * iota / (lambda_mu.sqrt() * h))
}

fn pointwise_margin(h: f64, iota: f64, kappa: f64, lambda_mu: f64) -> f64 {
    1.0 - (h * kappa.abs()).max(2.0 * iota.abs() / h) / lambda_mu.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    pub s_t: DenseMatrix,
    /// `S_x xi_x + S_y xi_y`
    pub s_xi: DenseMatrix,
    pub g: DVector<f64>,
}

pub fn symmetric_form(p: &BalancedSymbolPoint) -> SymmetricForm {
    let d = p.dim;
    let n = d + 3;
    let (h, alpha, beta) = (p.depth(), p.alpha(), p.beta());
    let sqrt_lm = (p.lambda * p.mu).sqrt();
    let (iota_idx, kappa_idx) = (d + 1, d + 2);

    let mut s_t = DenseMatrix::zeros(n, n);
    s_t[(0, 0)] = 3.0 * alpha * beta;
    for i in 1..=d {
        s_t[(i, i)] = 3.0 * h * beta;
    }
    let off = -p.kappa * h * h / sqrt_lm;
    s_t[(iota_idx, iota_idx)] = 1.0 / h;
    s_t[(iota_idx, kappa_idx)] = off;
    s_t[(kappa_idx, iota_idx)] = off;
    s_t[(kappa_idx, kappa_idx)] = h * h * h;

    let mut s_xi = DenseMatrix::zeros(n, n);
    let coupling = p.kappa * p.kappa * h * h / sqrt_lm;
    for i in 0..d {
        let xi = p.xi[i];
        s_xi[(0, 1 + i)] = 3.0 * h * alpha * beta * xi;
        s_xi[(1 + i, 0)] = 3.0 * h * alpha * beta * xi;
        s_xi[(1 + i, iota_idx)] = coupling * xi;
        s_xi[(iota_idx, 1 + i)] = coupling * xi;
    }

    let inv_sqrt_mu = 1.0 / p.mu.sqrt();
    let mut g = DVector::zeros(n);
    g[iota_idx] = inv_sqrt_mu * p.kappa * p.iota / h;
    g[kappa_idx] = -inv_sqrt_mu * h * h * h * p.kappa * p.kappa;

    SymmetricForm { s_t, s_xi, g }
}

/// `1 - max_x max(h |kappa|, 2 |iota| / h) / (lambda mu)^{1/2}`. A positive
/// value `delta` means the hyperbolicity condition holds with `delta_* = delta`.
pub fn hyperbolicity_margin(v: &StateV, p: &ParamSet) -> f64 {
    let lm = p.lambda_mu();
    v.zeta
        .values()
        .iter()
        .zip(v.iota.values())
        .zip(v.kappa.values())
        .map(|((&z, &i), &k)| pointwise_margin(1.0 + z, i, k, lm))
        .fold(f64::INFINITY, f64::min)
}

/// Quadratic energy `(S_t(V) V, V)_{L2}` in dimension one.
pub fn quadratic_energy(v: &StateV, p: &ParamSet) -> f64 {
    let lm = p.lambda_mu();
    let sqrt_lm = lm.sqrt();
    let density: Vec<f64> = (0..v.zeta.len())
        .map(|j| {
            let (z, u, i, k) = (
                v.zeta.values()[j],
                v.u.values()[j],
                v.iota.values()[j],
                v.kappa.values()[j],
            );
            let h = 1.0 + z;
            let alpha = balanced_alpha(h, i);
            let beta = balanced_beta(h, i, k, lm);
            3.0 * alpha * beta * z * z + 3.0 * h * beta * u * u + i * i / h
                - 2.0 * k * h * h / sqrt_lm * i * k
                + h * h * h * k * k
        })
        .collect();
    ScalarField::from_vec(v.grid(), density).integral()
}
