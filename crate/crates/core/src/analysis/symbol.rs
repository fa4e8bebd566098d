//! Pointwise principal symbol of the relaxation system in the physical
//! unknowns `(zeta, u, eta, w)`, its characteristic roots and a Friedrichs
//! symmetrizer.

use nalgebra::DMatrix;

use crate::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// A state value and a frequency at one point, in dimension 1 or 2.
///
/// Unused second components of `u` and `xi` are ignored when `dim == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolPoint {
    pub zeta: f64,
    pub u: [f64; 2],
    pub eta: f64,
    pub w: f64,
    pub xi: [f64; 2],
    pub mu: f64,
    pub lambda: f64,
    pub dim: usize,
}

impl SymbolPoint {
    pub fn new_1d(zeta: f64, u: f64, eta: f64, w: f64, xi: f64, mu: f64, lambda: f64) -> Self {
        Self { zeta, u: [u, 0.0], eta, w, xi: [xi, 0.0], mu, lambda, dim: 1 }
    }

    pub fn new_2d(zeta: f64, u: [f64; 2], eta: f64, w: f64, xi: [f64; 2], mu: f64, lambda: f64) -> Self {
        Self { zeta, u, eta, w, xi, mu, lambda, dim: 2 }
    }

    pub fn depth(&self) -> f64 {
        1.0 + self.zeta
    }

    /// `1 + mu lambda eta^2 / (3 h^3)`
    pub fn alpha(&self) -> f64 {
        let h = self.depth();
        1.0 + self.mu * self.lambda * self.eta * self.eta / (3.0 * h * h * h)
    }

    /// `(mu lambda / 3h) (1 - 2 eta / h)`
    pub fn beta(&self) -> f64 {
        let h = self.depth();
        self.mu * self.lambda / (3.0 * h) * (1.0 - 2.0 * self.eta / h)
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi[..self.dim].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `u . xi`
    pub fn advection(&self) -> f64 {
        (0..self.dim).map(|i| self.u[i] * self.xi[i]).sum()
    }

    /// System size `d + 3`.
    pub fn size(&self) -> usize {
        self.dim + 3
    }
}

/// Roots `Theta` of the characteristic equation, with multiplicities, and
/// the advective shift `u . xi`. The roots in `tau` are `-u . xi + Theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSpeeds {
    pub advective_shift: f64,
    pub theta: Vec<(f64, usize)>,
}

impl CharacteristicSpeeds {
    /// All `d + 3` roots `tau`, repeated according to multiplicity.
    pub fn tau_roots(&self) -> Vec<f64> {
        self.theta
            .iter()
            .flat_map(|&(t, m)| std::iter::repeat(t - self.advective_shift).take(m))
            .collect()
    }
}

pub fn characteristic_speeds(p: &SymbolPoint) -> Result<CharacteristicSpeeds> {
    let h = p.depth();
    if h <= 0.0 {
        return Err(Error::Cavitation { min_depth: h, h_star: 0.0 });
    }
    let alpha_h = p.alpha() * h;
    if alpha_h < 0.0 {
        return Err(Error::NonHyperbolic { alpha_h });
    }
    let c = alpha_h.sqrt() * p.xi_norm();
    Ok(CharacteristicSpeeds {
        advective_shift: p.advection(),
        theta: vec![(0.0, p.dim + 1), (c, 1), (-c, 1)],
    })
}

/// Jacobian `A_axis(U)` of the first-order part, with `axis` 0 for `x`, 1 for `y`.
pub fn flux_jacobian(p: &SymbolPoint, axis: usize) -> DenseMatrix {
    assert!(axis < p.dim, "axis {axis} out of range for dimension {}", p.dim);
    let n = p.size();
    let (h, alpha, beta) = (p.depth(), p.alpha(), p.beta());
    let eta_idx = p.dim + 1;
    let ui = 1 + axis;
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = p.u[axis];
    }
    a[(0, ui)] = h;
    a[(ui, 0)] = alpha;
    a[(ui, eta_idx)] = beta;
    a
}

/// `xi_x A_x + xi_y A_y`; the characteristic roots are minus its eigenvalues.
pub fn symbol_matrix(p: &SymbolPoint) -> DenseMatrix {
    (0..p.dim).fold(DenseMatrix::zeros(p.size(), p.size()), |acc, axis| {
        acc + flux_jacobian(p, axis) * p.xi[axis]
    })
}

/// Smallest `gamma` for which the `(zeta, eta)` block `(alpha, beta; beta, gamma)`
/// is positive definite: `beta^2 / alpha`.
pub fn gamma_min(p: &SymbolPoint) -> f64 {
    let beta = p.beta();
    beta * beta / p.alpha()
}

/// `2 beta^2 / alpha + 1`
pub fn default_gamma(p: &SymbolPoint) -> f64 {
    2.0 * gamma_min(p) + 1.0
}

/// Block symmetrizer `S` with `S A_x`, `S A_y` symmetric.
pub fn symmetrizer_hyp(p: &SymbolPoint, gamma: f64) -> DenseMatrix {
    let n = p.size();
    let eta_idx = p.dim + 1;
    let mut s = DenseMatrix::zeros(n, n);
    s[(0, 0)] = p.alpha();
    s[(0, eta_idx)] = p.beta();
    s[(eta_idx, 0)] = p.beta();
    for i in 1..=p.dim {
        s[(i, i)] = p.depth();
    }
    s[(eta_idx, eta_idx)] = gamma;
    s[(n - 1, n - 1)] = 1.0;
    s
}
