//! The elliptic operators
//!
//! ```text
//! t[h] psi = psi - (mu/3) h^3 d_x (h^{-1} d_x psi)
//! T[h] v   = v   - (mu/(3h)) d_x (h^3 d_x v)
//! ```
//!
//! and their inverses. Both are symmetric positive definite after
//! multiplication by `h^{-3}` and `h` respectively, so the solvers run
//! preconditioned conjugate gradients on the weighted forms with a
//! constant-depth spectral preconditioner. The operators use plain
//! pointwise products (no dealiasing), so that the conjugation identities
//! `T[h](h^{-1} d_x psi) = h^{-1} d_x t[h] psi` and
//! `h^3 d_x T[h] v = t[h](h^3 d_x v)` hold to rounding on the grid.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::spectral::{GridSpec, ScalarField};
use crate::{Error, Result};

/// Relative residual target of the solvers.
pub const SOLVE_TOL: f64 = 1e-10;

/// Largest grid on which a failed iterative solve falls back to a dense one.
pub const DENSE_FALLBACK_MAX_N: usize = 512;

thread_local! {
    static SOLVE_CALLS: Cell<u64> = const { Cell::new(0) };
    static SOLVE_ITERATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Per-thread instrumentation of elliptic solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveCounters {
    pub calls: u64,
    pub iterations: u64,
}

pub fn counters() -> SolveCounters {
    SolveCounters {
        calls: SOLVE_CALLS.with(Cell::get),
        iterations: SOLVE_ITERATIONS.with(Cell::get),
    }
}

pub fn reset_counters() {
    SOLVE_CALLS.with(|c| c.set(0));
    SOLVE_ITERATIONS.with(|c| c.set(0));
}

fn record(iterations: usize) {
    SOLVE_CALLS.with(|c| c.set(c.get() + 1));
    SOLVE_ITERATIONS.with(|c| c.set(c.get() + iterations as u64));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Trivial,
    ConjugateGradient,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||op(x) - rhs||_{L2} / ||rhs||_{L2}` of the returned solution.
    pub relative_residual: f64,
    pub method: SolveMethod,
}

fn check_positive(h: &ScalarField) -> Result<()> {
    let min_depth = h.min();
    if !(min_depth > 0.0) {
        return Err(Error::Cavitation { min_depth, h_star: 0.0 });
    }
    Ok(())
}

pub fn t_apply(h: &ScalarField, psi: &ScalarField, mu: f64) -> Result<ScalarField> {
    check_positive(h)?;
    Ok(t_apply_unchecked(h, psi, mu))
}

fn t_apply_unchecked(h: &ScalarField, psi: &ScalarField, mu: f64) -> ScalarField {
    let h3 = h.map(|v| v * v * v);
    let inner = (&h.recip() * &psi.dx()).dx();
    psi.axpy(-mu / 3.0, &(&h3 * &inner))
}

#[allow(non_snake_case)]
pub fn T_apply(h: &ScalarField, v: &ScalarField, mu: f64) -> Result<ScalarField> {
    check_positive(h)?;
    Ok(big_t_apply_unchecked(h, v, mu))
}

fn big_t_apply_unchecked(h: &ScalarField, v: &ScalarField, mu: f64) -> ScalarField {
    let h3 = h.map(|x| x * x * x);
    let inner = (&h3 * &v.dx()).dx();
    v.axpy(-mu / 3.0, &(&h.recip() * &inner))
}

pub fn t_solve(h: &ScalarField, rhs: &ScalarField, mu: f64) -> Result<ScalarField> {
    t_solve_with_stats(h, rhs, mu).map(|(x, _)| x)
}

/// Solves `t[h] psi = rhs`.
pub fn t_solve_with_stats(
    h: &ScalarField,
    rhs: &ScalarField,
    mu: f64,
) -> Result<(ScalarField, SolveStats)> {
    check_positive(h)?;
    let grid = h.grid();
    let inv_h = h.recip();
    let inv_h3 = h.map(|v| 1.0 / (v * v * v));
    let h3 = h.map(|v| v * v * v);
    let hbar = h.mean();
    let weighted = WeightedProblem {
        grid,
        apply: &|x: &ScalarField| {
            let lap = (&inv_h * &x.dx()).dx();
            (&inv_h3 * x).axpy(-mu / 3.0, &lap)
        },
        precond_symbol: &|kd: f64| 1.0 / (hbar.powi(-3) + mu / 3.0 * kd * kd / hbar),
        to_residual: &|r: &ScalarField| &h3 * r,
    };
    let b = &inv_h3 * rhs;
    solve(&weighted, &b, rhs, &|x| t_apply_unchecked(h, x, mu))
}

#[allow(non_snake_case)]
pub fn T_solve(h: &ScalarField, rhs: &ScalarField, mu: f64) -> Result<ScalarField> {
    T_solve_with_stats(h, rhs, mu).map(|(x, _)| x)
}

/// Solves `T[h] v = rhs`.
#[allow(non_snake_case)]
pub fn T_solve_with_stats(
    h: &ScalarField,
    rhs: &ScalarField,
    mu: f64,
) -> Result<(ScalarField, SolveStats)> {
    check_positive(h)?;
    let grid = h.grid();
    let h3 = h.map(|v| v * v * v);
    let inv_h = h.recip();
    let hbar = h.mean();
    let weighted = WeightedProblem {
        grid,
        apply: &|x: &ScalarField| {
            let lap = (&h3 * &x.dx()).dx();
            (h * x).axpy(-mu / 3.0, &lap)
        },
        precond_symbol: &|kd: f64| 1.0 / (hbar + mu / 3.0 * hbar.powi(3) * kd * kd),
        to_residual: &|r: &ScalarField| &inv_h * r,
    };
    let b = h * rhs;
    solve(&weighted, &b, rhs, &|x| big_t_apply_unchecked(h, x, mu))
}

/// `A x = b` with `A` symmetric positive definite; `to_residual` maps a
/// residual of the weighted system back to a residual of the original one.
struct WeightedProblem<'a> {
    grid: GridSpec,
    apply: &'a dyn Fn(&ScalarField) -> ScalarField,
    precond_symbol: &'a dyn Fn(f64) -> f64,
    to_residual: &'a dyn Fn(&ScalarField) -> ScalarField,
}

impl WeightedProblem<'_> {
    fn precondition(&self, r: &ScalarField) -> ScalarField {
        let grid = self.grid;
        r.apply_multiplier(|k, kappa| {
            let kd = if grid.is_nyquist(k) { 0.0 } else { kappa };
            Complex64::new((self.precond_symbol)(kd), 0.0)
        })
    }
}

fn solve(
    problem: &WeightedProblem<'_>,
    b: &ScalarField,
    rhs: &ScalarField,
    original: &dyn Fn(&ScalarField) -> ScalarField,
) -> Result<(ScalarField, SolveStats)> {
    let grid = problem.grid;
    let rhs_norm = rhs.l2_norm();
    if rhs_norm == 0.0 {
        record(0);
        let stats = SolveStats { iterations: 0, relative_residual: 0.0, method: SolveMethod::Trivial };
        return Ok((ScalarField::zeros(grid), stats));
    }
    let target = SOLVE_TOL * rhs_norm;
    let max_iter = 10 * grid.n_points;
    let true_residual = |x: &ScalarField| (&original(x) - rhs).l2_norm();

    let mut x = problem.precondition(b);
    let mut total = 0;
    // Restart if the recursively updated residual drifted from the true one.
    for _ in 0..3 {
        let (x_new, iters) = pcg(problem, b, x, target, max_iter - total);
        x = x_new;
        total += iters;
        let res = true_residual(&x);
        if res <= target {
            record(total);
            let stats = SolveStats {
                iterations: total,
                relative_residual: res / rhs_norm,
                method: SolveMethod::ConjugateGradient,
            };
            return Ok((x, stats));
        }
        if total >= max_iter {
            break;
        }
    }

    let res = true_residual(&x) / rhs_norm;
    if grid.n_points <= DENSE_FALLBACK_MAX_N {
        let x = dense_solve(grid, b, problem.apply)?;
        let dense_res = true_residual(&x) / rhs_norm;
        if dense_res <= SOLVE_TOL {
            record(total);
            let stats =
                SolveStats { iterations: total, relative_residual: dense_res, method: SolveMethod::Dense };
            return Ok((x, stats));
        }
    }
    Err(Error::SolverFailure { iterations: total, residual: res })
}

fn pcg(
    problem: &WeightedProblem<'_>,
    b: &ScalarField,
    x0: ScalarField,
    target: f64,
    max_iter: usize,
) -> (ScalarField, usize) {
    let mut x = x0;
    let mut r = b - &(problem.apply)(&x);
    let mut z = problem.precondition(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    for it in 0..max_iter {
        if (problem.to_residual)(&r).l2_norm() <= target {
            return (x, it);
        }
        let ap = (problem.apply)(&p);
        let pap = p.inner(&ap);
        if !(pap > 0.0) {
            return (x, it);
        }
        let step = rz / pap;
        x = x.axpy(step, &p);
        r = r.axpy(-step, &ap);
        z = problem.precondition(&r);
        let rz_new = r.inner(&z);
        p = z.axpy(rz_new / rz, &p);
        rz = rz_new;
    }
    (x, max_iter)
}

/// Assembles the collocation matrix column by column and solves directly.
fn dense_solve(
    grid: GridSpec,
    b: &ScalarField,
    apply: &dyn Fn(&ScalarField) -> ScalarField,
) -> Result<ScalarField> {
    let n = grid.n_points;
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = apply(&ScalarField::from_vec(grid, e));
        a.set_column(j, &DVector::from_column_slice(col.values()));
    }
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(b.values()))
        .ok_or(Error::SolverFailure { iterations: 0, residual: f64::INFINITY })?;
    Ok(ScalarField::from_vec(grid, x.as_slice().to_vec()))
}
