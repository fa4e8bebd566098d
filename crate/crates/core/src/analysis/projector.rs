//! The skew operator `J^mu` and the projections onto its kernel (regular
//! part) and onto its non-zero spectrum (singular part), realized as 4x4
//! Fourier multipliers acting on `(zeta, u, iota, kappa)` in dimension one.
//!
//! Per mode, with `a = mu^{1/2} xi` (the first-derivative symbol, zero at
//! the Nyquist slot) and `q = 1 + a^2`:
//!
//! ```text
//! J      = [0 0 0 0; 0 0 ia 0; 0 ia 0 1; 0 0 -1 0]
//! Pi^r   = [1 0 0 0; 0 1/q 0 ia/q; 0 0 0 0; 0 -ia/q 0 a^2/q]
//! Pi^sing = Id - Pi^r
//! ```

use num_complex::Complex64;

use crate::spectral::ScalarField;
use crate::state::StateV;
use crate::{Error, Result};

type ModeMatrix = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Regular,
    Singular,
}

fn apply_mode_matrix(v: &StateV, mu: f64, symbol: impl Fn(f64) -> ModeMatrix) -> StateV {
    let grid = v.grid();
    let coeffs: Vec<Vec<Complex64>> = v.fields().iter().map(|f| f.coefficients()).collect();
    let mut out = vec![vec![ZERO; grid.n_points]; 4];
    let sqrt_mu = mu.sqrt();
    for k in 0..grid.n_points {
        let xi = if grid.is_nyquist(k) { 0.0 } else { grid.wavenumber(k) };
        let m = symbol(sqrt_mu * xi);
        for (r, row) in m.iter().enumerate() {
            out[r][k] = row.iter().zip(&coeffs).map(|(m, c)| m * c[k]).sum();
        }
    }
    let mut fields = out.into_iter().map(|c| ScalarField::from_coefficients(grid, c));
    StateV::from_fields(std::array::from_fn(|_| fields.next().unwrap()))
}

fn regular_symbol(a: f64) -> ModeMatrix {
    let q = 1.0 + a * a;
    let ia = Complex64::new(0.0, a / q);
    [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, Complex64::new(1.0 / q, 0.0), ZERO, ia],
        [ZERO, ZERO, ZERO, ZERO],
        [ZERO, -ia, ZERO, Complex64::new(a * a / q, 0.0)],
    ]
}

fn singular_symbol(a: f64) -> ModeMatrix {
    let r = regular_symbol(a);
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { ONE - r[i][j] } else { -r[i][j] }))
}

fn j_symbol(a: f64) -> ModeMatrix {
    let ia = Complex64::new(0.0, a);
    [
        [ZERO, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ia, ZERO],
        [ZERO, ia, ZERO, ONE],
        [ZERO, ZERO, -ONE, ZERO],
    ]
}

pub fn projector_apply(f: &StateV, mu: f64, which: Projection) -> StateV {
    match which {
        Projection::Regular => apply_mode_matrix(f, mu, regular_symbol),
        Projection::Singular => apply_mode_matrix(f, mu, singular_symbol),
    }
}

/// `J^mu f = (0, mu^{1/2} d_x iota, mu^{1/2} d_x u + kappa, -iota)`
pub fn j_apply(f: &StateV, mu: f64) -> StateV {
    let s = mu.sqrt();
    StateV {
        zeta: ScalarField::zeros(f.grid()),
        u: f.iota.dx().scale(s),
        iota: f.u.dx().scale(s).axpy(1.0, &f.kappa),
        kappa: f.iota.scale(-1.0),
    }
}

/// Relative size of the regular component above which an input is not
/// considered to lie in the singular subspace.
pub const SINGULAR_SUBSPACE_TOL: f64 = 1e-10;

/// Unique `V` in the singular subspace with `J^mu V = U`, given by the
/// multiplier `-J^mu / (1 - mu d_xx)`.
pub fn j_inverse_singular(u: &StateV, mu: f64) -> Result<StateV> {
    let norm = u.l2_norm();
    let regular = projector_apply(u, mu, Projection::Regular).l2_norm();
    if regular > SINGULAR_SUBSPACE_TOL * norm {
        return Err(Error::Domain(format!(
            "input is not in the singular subspace: |Pi^r U| / |U| = {:.3e}",
            regular / norm
        )));
    }
    Ok(apply_mode_matrix(u, mu, |a| {
        let q = 1.0 + a * a;
        let j = j_symbol(a);
        std::array::from_fn(|r| std::array::from_fn(|c| -j[r][c] / q))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::periodic_2pi(32).unwrap()
    }

    fn sample(g: GridSpec) -> StateV {
        StateV::new(
            ScalarField::from_modes(g, &[(0, 0.3, 0.0), (2, 0.1, -0.4)]),
            ScalarField::from_modes(g, &[(0, -0.2, 0.0), (1, 0.5, 0.2), (7, 0.0, 0.1)]),
            ScalarField::from_modes(g, &[(0, 0.7, 0.0), (3, -0.3, 0.6)]),
            ScalarField::from_modes(g, &[(0, 0.1, 0.0), (1, 0.2, 0.2), (5, 0.05, 0.0)]),
        )
    }

    #[test]
    fn zero_frequency_split() {
        let g = grid();
        let mut v = StateV::zeros(g);
        for (i, f) in [&mut v.zeta, &mut v.u, &mut v.iota, &mut v.kappa].into_iter().enumerate() {
            *f = ScalarField::constant(g, 1.0 + i as f64);
        }
        let r = projector_apply(&v, 0.3, Projection::Regular);
        let s = projector_apply(&v, 0.3, Projection::Singular);
        assert!((&r.zeta + -1.0).max_abs() < 1e-14);
        assert!((&r.u + -2.0).max_abs() < 1e-14);
        assert!(r.iota.max_abs() < 1e-14 && r.kappa.max_abs() < 1e-14);
        assert!(s.zeta.max_abs() < 1e-14 && s.u.max_abs() < 1e-14);
        assert!((&s.iota + -3.0).max_abs() < 1e-14);
    }

    #[test]
    fn regular_velocity_multiplier_is_one_half_at_unit_mu_xi_squared() {
        let g = grid();
        let mut v = StateV::zeros(g);
        v.u = ScalarField::from_fn(g, |x| (2.0 * x).cos());
        let r = projector_apply(&v, 0.25, Projection::Regular);
        assert!((&r.u - &v.u.scale(0.5)).max_abs() < 1e-14);
    }

    #[test]
    fn projector_algebra() {
        let g = grid();
        let v = sample(g);
        let mu = 0.37;
        let r = projector_apply(&v, mu, Projection::Regular);
        let s = projector_apply(&v, mu, Projection::Singular);
        let rr = projector_apply(&r, mu, Projection::Regular);
        let ss = projector_apply(&s, mu, Projection::Singular);
        let sr = projector_apply(&r, mu, Projection::Singular);
        let scale = v.max_abs();
        assert!(rr.sub(&r).max_abs() < 1e-12 * scale);
        assert!(ss.sub(&s).max_abs() < 1e-12 * scale);
        assert!(sr.max_abs() < 1e-12 * scale);
        let sum = StateV::from_fields(std::array::from_fn(|i| r.fields()[i] + s.fields()[i]));
        assert!(sum.sub(&v).max_abs() < 1e-12 * scale);
        let lhs = v.l2_norm().powi(2);
        let rhs = r.l2_norm().powi(2) + s.l2_norm().powi(2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
        // Symmetry.
        let w = sample(g).map_fields(|f| f.dx());
        let a = projector_apply(&v, mu, Projection::Regular).inner(&w);
        let b = v.inner(&projector_apply(&w, mu, Projection::Regular));
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        // J Pi^r = 0, Pi^sing J = J.
        assert!(j_apply(&r, mu).max_abs() < 1e-12 * scale);
        let jv = j_apply(&v, mu);
        let sjv = projector_apply(&jv, mu, Projection::Singular);
        assert!(sjv.sub(&jv).max_abs() < 1e-12 * scale);
        let js = j_apply(&s, mu);
        assert!(js.sub(&jv).max_abs() < 1e-12 * scale);
    }

    #[test]
    fn j_examples() {
        let g = grid();
        let mut f = StateV::zeros(g);
        f.iota = ScalarField::constant(g, 0.8);
        let jf = j_apply(&f, 0.5);
        assert!((&jf.kappa + 0.8).max_abs() < 1e-15);
        assert!(jf.u.max_abs() < 1e-14 && jf.iota.max_abs() < 1e-14);

        let mut f = StateV::zeros(g);
        f.u = ScalarField::from_fn(g, f64::sin);
        let jf = j_apply(&f, 1.0);
        assert!((&jf.iota - &ScalarField::from_fn(g, f64::cos)).max_abs() < 1e-14);

        let v = sample(g);
        assert!(j_apply(&v, 0.2).inner(&v).abs() < 1e-12 * v.inner(&v));
    }

    #[test]
    fn inverse_on_zero_frequency_sector() {
        let g = grid();
        let mut u = StateV::zeros(g);
        u.iota = ScalarField::constant(g, 0.3);
        u.kappa = ScalarField::constant(g, -1.1);
        let v = j_inverse_singular(&u, 0.4).unwrap();
        assert!((&v.iota + -1.1).max_abs() < 1e-14);
        assert!((&v.kappa + -0.3).max_abs() < 1e-14);
        assert!(j_apply(&v, 0.4).sub(&u).max_abs() < 1e-14);
    }

    #[test]
    fn inverse_rejects_regular_input() {
        let g = grid();
        let mut u = StateV::zeros(g);
        u.zeta = ScalarField::from_fn(g, f64::cos);
        assert!(matches!(j_inverse_singular(&u, 0.4), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_inverts_on_singular_subspace() {
        let g = grid();
        for mu in [1e-3, 0.1, 1.0] {
            let u = projector_apply(&sample(g), mu, Projection::Singular);
            let v = j_inverse_singular(&u, mu).unwrap();
            assert!(projector_apply(&v, mu, Projection::Regular).l2_norm() < 1e-12 * v.l2_norm());
            assert!(j_apply(&v, mu).sub(&u).l2_norm() <= 1e-10 * u.l2_norm());
        }
    }
}
