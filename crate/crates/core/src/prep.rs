//! Well-prepared initial data for the relaxation system.
//!
//! Given `(zeta0, u0)` the augmented unknowns are chosen so that the first
//! `m` time derivatives of `eta - h` stay bounded as `lambda` grows:
//!
//! ```text
//! m = 0:  eta0 = h0,                 w0 = 0
//! m = 1:  eta0 = h0,                 w0 = c1
//! m = 2:  eta0 = h0 + c2 / lambda,   w0 = c1
//! ```
//!
//! with `c1 = -h0 u0'` and `t[h0] c2 = h0^3 (u0 u0'' - u0'^2 - zeta0'' - (u0 u0')')`.

use crate::elliptic;
use crate::solvers::{fg_tendency, Trajectory};
use crate::spectral::ScalarField;
use crate::state::{check_depth, ParamSet, StateU};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub order_m: u32,
    pub state: StateU,
    pub c1: Option<ScalarField>,
    pub c2: Option<ScalarField>,
}

fn check_positive_depth(h: &ScalarField) -> Result<()> {
    let min_depth = h.min();
    if !(min_depth > 0.0) {
        return Err(Error::Cavitation { min_depth, h_star: 0.0 });
    }
    Ok(())
}

/// `c1 = -(1 + zeta0) u0'`
pub fn compute_c1(zeta0: &ScalarField, u0: &ScalarField) -> Result<ScalarField> {
    let h0 = zeta0 + 1.0;
    check_positive_depth(&h0)?;
    Ok((&h0 * &u0.dx()).scale(-1.0))
}

/// Right-hand side `h0^3 (u0 u0'' - u0'^2 - zeta0'' - (u0 u0')')` of the c2 equation.
pub fn c2_rhs(zeta0: &ScalarField, u0: &ScalarField) -> ScalarField {
    let h0 = zeta0 + 1.0;
    let ux = u0.dx();
    let uxx = u0.dxx();
    let bracket = &(&(u0 * &uxx) - &(&ux * &ux)) - &(&zeta0.dxx() + &(u0 * &ux).dx());
    let h3 = h0.map(|h| h * h * h);
    &h3 * &bracket
}

pub fn compute_c2(zeta0: &ScalarField, u0: &ScalarField, mu: f64) -> Result<ScalarField> {
    let h0 = zeta0 + 1.0;
    check_positive_depth(&h0)?;
    elliptic::t_solve(&h0, &c2_rhs(zeta0, u0), mu)
}

pub fn prepare(zeta0: &ScalarField, u0: &ScalarField, m: u32, p: &ParamSet) -> Result<PreparedData> {
    if m > 2 {
        return Err(Error::NotImplemented(format!(
            "preparation order {m}: only m <= 2 is available, higher orders need the general \
             recursion for the correctors c(j), which is not implemented"
        )));
    }
    p.validate()?;
    let h0 = zeta0 + 1.0;
    check_depth(&h0, p.h_star)?;
    let grid = zeta0.grid();
    let c1 = if m >= 1 { Some(compute_c1(zeta0, u0)?) } else { None };
    let c2 = if m >= 2 { Some(compute_c2(zeta0, u0, p.mu)?) } else { None };
    let eta0 = match &c2 {
        Some(c2) => h0.axpy(1.0 / p.lambda, c2),
        None => h0,
    };
    let w0 = c1.clone().unwrap_or_else(|| ScalarField::zeros(grid));
    Ok(PreparedData { order_m: m, state: StateU::new(zeta0.clone(), u0.clone(), eta0, w0), c1, c2 })
}

/// `q = eta - h` and its first two time derivatives at a state, obtained by
/// composing the FG right-hand side with exact spatial derivatives:
///
/// ```text
/// q_t  = -u q' + w + h u'
/// q_tt = -u_t q' - u (q_t)' + w_t + h_t u' + h (u_t)'
/// ```
#[derive(Debug, Clone)]
pub struct GapDerivatives {
    pub q: ScalarField,
    pub q_t: ScalarField,
    pub q_tt: ScalarField,
}

pub fn composed_gap_derivatives(s: &StateU, p: &ParamSet) -> Result<GapDerivatives> {
    let f = fg_tendency(s, p)?;
    let h = s.depth();
    let q = s.relaxation_gap();
    let ux = s.u.dx();
    let qx = q.dx();
    let q_t = &(&s.w - &(&s.u * &qx)) + &(&h * &ux);
    let q_tt = &(&(&f.w + &(&f.zeta * &ux)) + &(&h * &f.u.dx()))
        - &(&(&f.u * &qx) + &(&s.u * &q_t.dx()));
    Ok(GapDerivatives { q, q_t, q_tt })
}

/// `lambda ||eta - h||_{H^s}` at every snapshot of an FG trajectory.
pub fn preparedness_report(traj: &Trajectory<StateU>, p: &ParamSet, s: f64) -> Vec<f64> {
    traj.states.iter().map(|u| p.lambda * u.relaxation_gap().sobolev_norm(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{integrate, Scheme, StepPolicy};
    use crate::spectral::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::periodic_2pi(64).unwrap()
    }

    #[test]
    fn c1_examples() {
        let g = grid();
        let zero = ScalarField::zeros(g);
        assert_eq!(compute_c1(&zero, &ScalarField::constant(g, 0.7)).unwrap().max_abs(), 0.0);
        let c1 = compute_c1(&zero, &ScalarField::from_fn(g, |x| 0.1 * x.sin())).unwrap();
        assert!((&c1 - &ScalarField::from_fn(g, |x| -0.1 * x.cos())).max_abs() < 1e-15);
        let zeta = ScalarField::from_fn(g, f64::cos);
        let c1 = compute_c1(&zeta.scale(0.5), &ScalarField::from_fn(g, f64::sin)).unwrap();
        let expected = ScalarField::from_fn(g, |x| -(1.0 + 0.5 * x.cos()) * x.cos());
        assert!((&c1 - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn c2_of_sine_velocity() {
        let g = grid();
        let (a, mu) = (0.3, 0.4);
        let zero = ScalarField::zeros(g);
        let u0 = ScalarField::from_fn(g, |x| a * x.sin());
        assert_eq!(compute_c2(&zero, &zero, mu).unwrap().max_abs(), 0.0);
        let c2 = compute_c2(&zero, &u0, mu).unwrap();
        let expected =
            ScalarField::from_fn(g, |x| -a * a - a * a * (2.0 * x).cos() / (1.0 + 4.0 * mu / 3.0));
        assert!((&c2 - &expected).max_abs() < 1e-10);
    }

    #[test]
    fn c2_solves_its_equation() {
        let g = grid();
        let zeta = ScalarField::from_modes(g, &[(1, 0.1, 0.05), (3, -0.02, 0.03)]);
        let u = ScalarField::from_modes(g, &[(0, 0.1, 0.0), (1, 0.2, -0.1), (2, 0.05, 0.0)]);
        let c2 = compute_c2(&zeta, &u, 0.1).unwrap();
        let back = elliptic::t_apply(&(&zeta + 1.0), &c2, 0.1).unwrap();
        let rhs = c2_rhs(&zeta, &u);
        assert!((&back - &rhs).l2_norm() <= 1e-9 * rhs.l2_norm());
    }

    #[test]
    fn prepare_orders() {
        let g = grid();
        let p = ParamSet::with_defaults(100.0, 0.1).unwrap();
        let zeta = ScalarField::from_fn(g, |x| 0.1 * x.cos());
        let u = ScalarField::from_fn(g, |x| 0.1 * x.sin());
        let d0 = prepare(&zeta, &u, 0, &p).unwrap();
        assert_eq!(d0.state.eta, &zeta + 1.0);
        assert_eq!(d0.state.w.max_abs(), 0.0);
        let d1 = prepare(&zeta, &ScalarField::constant(g, 0.3), 1, &p).unwrap();
        assert_eq!(d1.state.w.max_abs(), 0.0);
        assert_eq!(d1.state.eta, &zeta + 1.0);

        let zero = ScalarField::zeros(g);
        let d2 = prepare(&zero, &u, 2, &p).unwrap();
        let a = 0.1;
        let expected = ScalarField::from_fn(g, |x| {
            1.0 + (-a * a - a * a * (2.0 * x).cos() / (1.0 + 4.0 * p.mu / 3.0)) / 100.0
        });
        assert!((&d2.state.eta - &expected).max_abs() < 1e-12);
        assert!(matches!(prepare(&zero, &u, 3, &p), Err(Error::NotImplemented(_))));
    }

    #[test]
    fn first_order_data_has_vanishing_gap_rate() {
        let g = grid();
        let p = ParamSet::with_defaults(1e3, 0.1).unwrap();
        let zeta = ScalarField::from_modes(g, &[(1, 0.1, 0.02), (2, 0.0, 0.03)]);
        let u = ScalarField::from_modes(g, &[(1, -0.05, 0.1), (3, 0.01, 0.0)]);
        let d = prepare(&zeta, &u, 1, &p).unwrap();
        let gd = composed_gap_derivatives(&d.state, &p).unwrap();
        assert!(gd.q_t.max_abs() < 1e-9);
        // m = 0 leaves an O(1) rate.
        let d = prepare(&zeta, &u, 0, &p).unwrap();
        assert!(composed_gap_derivatives(&d.state, &p).unwrap().q_t.max_abs() > 1e-2);
    }

    #[test]
    fn composed_second_derivative_matches_time_differences() {
        let g = GridSpec::periodic_2pi(32).unwrap();
        let p = ParamSet::with_defaults(40.0, 0.2).unwrap();
        let zeta = ScalarField::from_fn(g, |x| 0.1 * x.sin());
        let u = ScalarField::from_fn(g, |x| 0.1 * (x + 1.0).cos());
        let s0 = prepare(&zeta, &u, 0, &p).unwrap().state;
        let gd = composed_gap_derivatives(&s0, &p).unwrap();
        let error = |dt: f64| {
            let mut policy = StepPolicy::new(Scheme::Rk4Explicit, dt, dt);
            policy.cfl_number = 0.05;
            let q1 = integrate(&s0, &p, &policy).unwrap().states[1].relaxation_gap();
            // 2 (q(dt) - q - dt q_t) / dt^2 = q_tt + O(dt)
            let fd = (&q1 - &gd.q.axpy(dt, &gd.q_t)).scale(2.0 / (dt * dt));
            (&fd - &gd.q_tt).max_abs()
        };
        let (e1, e2) = (error(1e-3), error(5e-4));
        assert!(e1 < 5e-3 && gd.q_tt.max_abs() > 0.1, "{e1}");
        assert!((e1 / e2 - 2.0).abs() < 0.2, "{e1} {e2}");
    }

    #[test]
    fn rest_report_is_zero() {
        let g = grid();
        let p = ParamSet::with_defaults(100.0, 0.1).unwrap();
        let traj = integrate(&StateU::rest(g), &p, &StepPolicy::new(Scheme::StrangSplit, 0.1, 0.05)).unwrap();
        assert!(preparedness_report(&traj, &p, 1.0).iter().all(|&v| v == 0.0));
    }
}
