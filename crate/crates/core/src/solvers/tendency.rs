//! Right-hand sides of the relaxation (FG) and Green-Naghdi (GN) systems
//! on the one-dimensional torus.

use crate::elliptic;
use crate::spectral::ScalarField;
use crate::state::{check_depth, ParamSet, StateU};
use crate::Result;

/// Surface elevation and velocity of the reference GN system.
#[derive(Debug, Clone, PartialEq)]
pub struct GnState {
    pub zeta: ScalarField,
    pub u: ScalarField,
}

impl GnState {
    pub fn new(zeta: ScalarField, u: ScalarField) -> Self {
        Self { zeta, u }
    }

    pub fn depth(&self) -> ScalarField {
        &self.zeta + 1.0
    }

    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self { zeta: self.zeta.axpy(c, &other.zeta), u: self.u.axpy(c, &other.u) }
    }

    pub fn is_finite(&self) -> bool {
        self.zeta.is_finite() && self.u.is_finite()
    }
}

impl From<&StateU> for GnState {
    fn from(s: &StateU) -> Self {
        Self { zeta: s.zeta.clone(), u: s.u.clone() }
    }
}

/// Tendency split into the advective/dispersive part and the two relaxation
/// sources `w` (in the eta equation) and `-(lambda/h^2)(eta - h)` (in the w equation).
pub(crate) struct FgParts {
    pub nonstiff: StateU,
    pub eta_source: ScalarField,
    pub w_source: ScalarField,
}

pub(crate) fn fg_parts(s: &StateU, p: &ParamSet) -> Result<FgParts> {
    let h = s.depth();
    check_depth(&h, p.h_star)?;
    let inv_h = h.recip();
    let q = s.relaxation_gap();

    let zeta_t = h.product(&s.u).dx().scale(-1.0);

    let pressure = s.eta.product(&q).product(&inv_h).dx();
    let u_t = &(&s.zeta.dx() + &s.u.product(&s.u.dx())).scale(-1.0)
        + &inv_h.product(&pressure).scale(p.lambda_mu() / 3.0);

    let eta_adv = s.u.product(&s.eta.dx()).scale(-1.0);
    let w_adv = s.u.product(&s.w.dx()).scale(-1.0);

    let lambda = p.lambda;
    let w_source = q.zip_map(&h, |q, h| -lambda * q / (h * h));
    Ok(FgParts {
        nonstiff: StateU::new(zeta_t, u_t, eta_adv, w_adv),
        eta_source: s.w.clone(),
        w_source,
    })
}

/// Full FG right-hand side `(d_t zeta, d_t u, d_t eta, d_t w)`.
pub fn fg_tendency(s: &StateU, p: &ParamSet) -> Result<StateU> {
    let FgParts { mut nonstiff, eta_source, w_source } = fg_parts(s, p)?;
    nonstiff.eta = &nonstiff.eta + &eta_source;
    nonstiff.w = &nonstiff.w + &w_source;
    Ok(nonstiff)
}

/// FG right-hand side without the relaxation sources, the flow that the
/// split scheme advances with RK4.
pub fn fg_nonstiff_tendency(s: &StateU, p: &ParamSet) -> Result<StateU> {
    Ok(fg_parts(s, p)?.nonstiff)
}

/// GN right-hand side, with the velocity tendency obtained from
/// `T[h] u_t = -zeta' - u u' - (mu/(3h)) (h^3 (u'^2 - u u''))'`.
pub fn gn_tendency(s: &GnState, p: &ParamSet) -> Result<GnState> {
    let h = s.depth();
    check_depth(&h, p.h_star)?;
    let zeta_t = h.product(&s.u).dx().scale(-1.0);
    let ux = s.u.dx();
    let uxx = s.u.dxx();
    let h3 = h.product(&h).product(&h);
    let q = &ux.product(&ux) - &s.u.product(&uxx);
    let dispersive = h.recip().product(&h3.product(&q).dx());
    let rhs = (&(&s.zeta.dx() + &s.u.product(&ux)) + &dispersive.scale(p.mu / 3.0)).scale(-1.0);
    let u_t = elliptic::T_solve(&h, &rhs, p.mu)?;
    Ok(GnState { zeta: zeta_t, u: u_t })
}

/// Exact flow of `d_t eta = w`, `d_t w = -(lambda/h^2)(eta - h)` with `h`
/// frozen: a pointwise rotation with frequency `omega = lambda^{1/2} / h`.
pub fn relaxation_substep_exact(
    eta: &ScalarField,
    w: &ScalarField,
    h: &ScalarField,
    dt: f64,
    lambda: f64,
) -> (ScalarField, ScalarField) {
    let n = eta.len();
    let mut eta_new = Vec::with_capacity(n);
    let mut w_new = Vec::with_capacity(n);
    let sqrt_lambda = lambda.sqrt();
    for j in 0..n {
        let (e, w0, hj) = (eta.values()[j], w.values()[j], h.values()[j]);
        let omega = sqrt_lambda / hj;
        let (sin, cos) = (omega * dt).sin_cos();
        let q0 = e - hj;
        eta_new.push(hj + q0 * cos + w0 / omega * sin);
        w_new.push(-omega * q0 * sin + w0 * cos);
    }
    let grid = eta.grid();
    (ScalarField::from_vec(grid, eta_new), ScalarField::from_vec(grid, w_new))
}
