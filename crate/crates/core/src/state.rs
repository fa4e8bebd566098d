//! Physical and balanced unknowns of the relaxation system and the
//! parameter set they depend on.

use serde::{Deserialize, Serialize};

use crate::spectral::{GridSpec, ScalarField};
use crate::{Error, Result};

/// Relaxation parameter `lambda`, shallowness `mu`, the bound `nu` of the
/// admissible parameter set, and the depth floor `h_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_h_star")]
    pub h_star: f64,
}

fn default_nu() -> f64 {
    10.0
}

fn default_h_star() -> f64 {
    0.5
}

impl ParamSet {
    pub fn new(lambda: f64, mu: f64, nu: f64, h_star: f64) -> Result<Self> {
        let p = Self { lambda, mu, nu, h_star };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the default `nu = 10` and `h_star = 0.5`.
    pub fn with_defaults(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(lambda, mu, default_nu(), default_h_star())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("nu", self.nu),
            ("h_star", self.h_star),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn lambda_mu(&self) -> f64 {
        self.lambda * self.mu
    }

    /// `1/lambda + mu + 1/(lambda mu)`, the quantity bounded by `nu`.
    pub fn s_nu_measure(&self) -> f64 {
        1.0 / self.lambda + self.mu + 1.0 / self.lambda_mu()
    }

    pub fn in_s_nu(&self) -> bool {
        self.s_nu_measure() <= self.nu
    }
}

pub(crate) fn check_depth(h: &ScalarField, h_star: f64) -> Result<()> {
    let min_depth = h.min();
    if !(min_depth >= h_star) {
        return Err(Error::Cavitation { min_depth, h_star });
    }
    Ok(())
}

/// Physical unknowns `(zeta, u, eta, w)`; the depth is `h = 1 + zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateU {
    pub zeta: ScalarField,
    pub u: ScalarField,
    pub eta: ScalarField,
    pub w: ScalarField,
}

impl StateU {
    pub fn new(zeta: ScalarField, u: ScalarField, eta: ScalarField, w: ScalarField) -> Self {
        Self { zeta, u, eta, w }
    }

    /// Fluid at rest: `zeta = 0, u = 0, eta = 1, w = 0`.
    pub fn rest(grid: GridSpec) -> Self {
        Self {
            zeta: ScalarField::zeros(grid),
            u: ScalarField::zeros(grid),
            eta: ScalarField::constant(grid, 1.0),
            w: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.zeta.grid()
    }

    pub fn depth(&self) -> ScalarField {
        &self.zeta + 1.0
    }

    /// `eta - h`
    pub fn relaxation_gap(&self) -> ScalarField {
        self.eta.zip_map(&self.zeta, |e, z| e - 1.0 - z)
    }

    pub fn check_depth(&self, h_star: f64) -> Result<()> {
        check_depth(&self.depth(), h_star)
    }

    pub fn fields(&self) -> [&ScalarField; 4] {
        [&self.zeta, &self.u, &self.eta, &self.w]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    /// `self + c * other`, componentwise.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self {
            zeta: self.zeta.axpy(c, &other.zeta),
            u: self.u.axpy(c, &other.u),
            eta: self.eta.axpy(c, &other.eta),
            w: self.w.axpy(c, &other.w),
        }
    }
}

/// Balanced unknowns `(zeta, u, iota, kappa)`. Also used as a generic
/// four-component field vector by the projector algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct StateV {
    pub zeta: ScalarField,
    pub u: ScalarField,
    pub iota: ScalarField,
    pub kappa: ScalarField,
}

impl StateV {
    pub fn new(zeta: ScalarField, u: ScalarField, iota: ScalarField, kappa: ScalarField) -> Self {
        Self { zeta, u, iota, kappa }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let z = ScalarField::zeros(grid);
        Self { zeta: z.clone(), u: z.clone(), iota: z.clone(), kappa: z }
    }

    pub fn grid(&self) -> GridSpec {
        self.zeta.grid()
    }

    pub fn depth(&self) -> ScalarField {
        &self.zeta + 1.0
    }

    pub fn check_depth(&self, h_star: f64) -> Result<()> {
        check_depth(&self.depth(), h_star)
    }

    pub fn fields(&self) -> [&ScalarField; 4] {
        [&self.zeta, &self.u, &self.iota, &self.kappa]
    }

    pub fn from_fields([zeta, u, iota, kappa]: [ScalarField; 4]) -> Self {
        Self { zeta, u, iota, kappa }
    }

    pub fn map_fields(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { zeta: f(&self.zeta), u: f(&self.u), iota: f(&self.iota), kappa: f(&self.kappa) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            zeta: &self.zeta - &other.zeta,
            u: &self.u - &other.u,
            iota: &self.iota - &other.iota,
            kappa: &self.kappa - &other.kappa,
        }
    }

    /// Sum of the componentwise `L2` inner products.
    pub fn inner(&self, other: &Self) -> f64 {
        self.fields().iter().zip(other.fields()).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `(sum_c ||c||_{H^s}^2)^{1/2}`
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.fields().iter().map(|f| f.sobolev_norm(s).powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.fields().iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }
}

/// `iota = (mu lambda)^{1/2} (eta - h)`, `kappa = mu^{1/2} w / h`.
pub fn to_balanced(state: &StateU, p: &ParamSet) -> Result<StateV> {
    let h = state.depth();
    check_depth(&h, p.h_star)?;
    let iota = state.relaxation_gap().scale(p.lambda_mu().sqrt());
    let sqrt_mu = p.mu.sqrt();
    let kappa = state.w.zip_map(&h, |w, h| sqrt_mu * w / h);
    Ok(StateV { zeta: state.zeta.clone(), u: state.u.clone(), iota, kappa })
}

/// Inverse of [`to_balanced`].
pub fn from_balanced(state: &StateV, p: &ParamSet) -> Result<StateU> {
    let h = state.depth();
    check_depth(&h, p.h_star)?;
    let inv = 1.0 / p.lambda_mu().sqrt();
    let eta = state.iota.zip_map(&h, |i, h| h + inv * i);
    let inv_sqrt_mu = 1.0 / p.mu.sqrt();
    let w = state.kappa.zip_map(&h, |k, h| inv_sqrt_mu * h * k);
    Ok(StateU { zeta: state.zeta.clone(), u: state.u.clone(), eta, w })
}
