//! Measurable versions of the weighted space-time norms, of the consistency
//! residual and of time derivatives along stored trajectories.

use serde::Serialize;

use crate::analysis::{projector_apply, quadratic_energy, Projection};
use crate::solvers::{fg_tendency, Evolvable, Trajectory};
use crate::spectral::ScalarField;
use crate::state::{to_balanced, ParamSet, StateU, StateV};
use crate::{Error, Result};

/// Width of the finite-difference window.
pub const STENCIL_WIDTH: usize = 7;

/// Highest time derivative estimated from snapshots.
pub const MAX_TIME_DERIVATIVE: usize = 3;

/// Finite-difference weights for derivatives `0..=order` at `z` from the
/// nodes `x` (Fornberg's recursion). `weights[k][i]` multiplies `f(x[i])`
/// in the `k`-th derivative.
pub fn fornberg_weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// `derivatives[i][j][c]` is the estimate of `d_t^j` of component `c` at snapshot `i`.
#[derive(Debug, Clone)]
pub struct TimeDerivatives {
    pub times: Vec<f64>,
    pub derivatives: Vec<Vec<Vec<ScalarField>>>,
    /// Snapshots whose window is not centred (one-sided stencils).
    pub lower_accuracy: Vec<bool>,
}

/// Finite-difference estimates of `d_t^j`, `j <= j_max <= 3`, of every
/// component at every snapshot, from a seven-point window that is centred
/// where possible and shifted inwards near the ends.
pub fn time_derivatives_of(
    times: &[f64],
    snapshots: &[Vec<ScalarField>],
    j_max: usize,
) -> Result<TimeDerivatives> {
    if j_max > MAX_TIME_DERIVATIVE {
        return Err(Error::Domain(format!("time derivatives are available up to order 3, got {j_max}")));
    }
    let n = times.len();
    if n < STENCIL_WIDTH || snapshots.len() != n {
        return Err(Error::Domain(format!(
            "need at least {STENCIL_WIDTH} snapshots for time derivatives, got {n}"
        )));
    }
    let spacing = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing) {
        return Err(Error::Domain("snapshot spacing is not uniform".into()));
    }
    let half = STENCIL_WIDTH / 2;
    let mut derivatives = Vec::with_capacity(n);
    let mut lower_accuracy = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - STENCIL_WIDTH);
        lower_accuracy.push(start + half != i);
        let nodes: Vec<f64> = times[start..start + STENCIL_WIDTH].to_vec();
        let w = fornberg_weights(times[i], &nodes, j_max);
        let per_j = (0..=j_max)
            .map(|j| {
                (0..snapshots[i].len())
                    .map(|c| {
                        let mut acc = ScalarField::zeros(snapshots[i][c].grid());
                        for (k, weight) in w[j].iter().enumerate() {
                            acc = acc.axpy(*weight, &snapshots[start + k][c]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        derivatives.push(per_j);
    }
    Ok(TimeDerivatives { times: times.to_vec(), derivatives, lower_accuracy })
}

pub fn time_derivatives<S: Evolvable>(traj: &Trajectory<S>, j_max: usize) -> Result<TimeDerivatives> {
    let snaps: Vec<Vec<ScalarField>> = traj.states.iter().map(|s| s.components()).collect();
    time_derivatives_of(&traj.times, &snaps, j_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub s: u32,
    pub m: u32,
    pub lambda_tilde: f64,
}

impl NormSpec {
    pub fn new(s: u32, m: u32, lambda_tilde: f64) -> Result<Self> {
        let spec = Self { s, m, lambda_tilde };
        if s < 2 || m < 1 || m > s || !(lambda_tilde >= 1.0) {
            return Err(Error::Domain(format!(
                "norm index needs s >= 2, 1 <= m <= s, lambda_tilde >= 1; got {spec:?}"
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    /// Square root of the truncated weighted sum.
    pub value: f64,
    /// `(j, ||d_t^j V||^2_{H^{s-j}}, weight)` for `j = 0..=min(s, 3)`.
    pub terms: Vec<(u32, f64, f64)>,
    pub truncated_at: u32,
}

/// `sum_{j <= m} ||d_t^j V||^2_{H^{s-j}} + sum_{j > m} lambda_tilde^{m-j} ||d_t^j V||^2_{H^{s-j}}`
/// over `j <= min(s, 3)`, from the time derivatives `dv[j][c]` of the components of `V`.
pub fn triple_norm_from_derivatives(dv: &[Vec<ScalarField>], spec: &NormSpec) -> NormReport {
    let top = spec.s.min(MAX_TIME_DERIVATIVE as u32).min(dv.len() as u32 - 1);
    let mut terms = Vec::new();
    let mut total = 0.0;
    for j in 0..=top {
        let order = (spec.s - j) as f64;
        let sq: f64 = dv[j as usize].iter().map(|f| f.sobolev_norm(order).powi(2)).sum();
        let weight = if j <= spec.m { 1.0 } else { spec.lambda_tilde.powi(spec.m as i32 - j as i32) };
        total += weight * sq;
        terms.push((j, sq, weight));
    }
    NormReport { value: total.sqrt(), terms, truncated_at: top }
}

/// Triple norm of the balanced unknowns of an FG trajectory at snapshot `t_index`.
pub fn triple_norm(traj: &Trajectory<StateU>, t_index: usize, spec: &NormSpec) -> Result<NormReport> {
    let p = traj.params;
    let snaps = traj
        .states
        .iter()
        .map(|s| to_balanced(s, &p).map(|v| v.fields().into_iter().cloned().collect()))
        .collect::<Result<Vec<Vec<ScalarField>>>>()?;
    let j_max = (spec.s as usize).min(MAX_TIME_DERIVATIVE);
    let td = time_derivatives_of(&traj.times, &snaps, j_max)?;
    let dv = td
        .derivatives
        .get(t_index)
        .ok_or_else(|| Error::Domain(format!("snapshot index {t_index} out of range")))?;
    Ok(triple_norm_from_derivatives(dv, spec))
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub field: ScalarField,
    pub l2: f64,
    /// `||r||_{H^{s-2}}`
    pub sobolev: f64,
}

impl ResidualReport {
    fn new(field: ScalarField, s: f64) -> Self {
        let l2 = field.l2_norm();
        let sobolev = field.sobolev_norm(s - 2.0);
        Self { field, l2, sobolev }
    }
}

/// `r = -h (eta - h) eta'' - h^2 (eta'' - h'')` at one FG state, where the
/// material second derivatives come from composing the FG right-hand side:
/// `eta'' = -(lambda/h^2)(eta - h)` and `h^2 h'' = h^3 (u_x^2 - u_xt - u u_xx)`,
/// which gives `r = lambda (eta - h) eta / h + h^2 h''`.
pub fn consistency_residual(s: &StateU, p: &ParamSet, sobolev_index: f64) -> Result<ResidualReport> {
    let f = fg_tendency(s, p)?;
    let h = s.depth();
    let q = s.relaxation_gap();
    let ux = s.u.dx();
    let h3 = h.map(|v| v * v * v);
    let h2_hdd = &h3 * &(&(&ux * &ux) - &(&f.u.dx() + &(&s.u * &s.u.dxx())));
    let r = &(&(&q * &s.eta) * &h.recip()).scale(p.lambda) + &h2_hdd;
    Ok(ResidualReport::new(r, sobolev_index))
}

/// As [`consistency_residual`], with all time derivatives estimated by finite
/// differences along the trajectory and the material derivatives assembled as
/// `f'' = f_tt + u_t f_x + 2 u f_xt + u u_x f_x + u^2 f_xx`.
pub fn consistency_residual_fd(
    traj: &Trajectory<StateU>,
    t_index: usize,
    sobolev_index: f64,
) -> Result<ResidualReport> {
    let td = time_derivatives(traj, 2)?;
    let d = td
        .derivatives
        .get(t_index)
        .ok_or_else(|| Error::Domain(format!("snapshot index {t_index} out of range")))?;
    let s = &traj.states[t_index];
    let (zeta_t, zeta_tt) = (&d[1][0], &d[2][0]);
    let (eta_t, eta_tt) = (&d[1][2], &d[2][2]);
    let u_t = &d[1][1];
    let u = &s.u;
    let ux = u.dx();
    let material2 = |f: &ScalarField, f_t: &ScalarField, f_tt: &ScalarField| {
        let fx = f.dx();
        let terms = [
            f_tt.clone(),
            u_t * &fx,
            (u * &f_t.dx()).scale(2.0),
            &(u * &ux) * &fx,
            &(u * u) * &f.dxx(),
        ];
        terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t)
    };
    let h = s.depth();
    let eta_dd = material2(&s.eta, eta_t, eta_tt);
    let h_dd = material2(&h, zeta_t, zeta_tt);
    let q = s.relaxation_gap();
    let r = (&(&(&h * &q) * &eta_dd) + &(&(&h * &h) * &(&eta_dd - &h_dd))).scale(-1.0);
    Ok(ResidualReport::new(r, sobolev_index))
}

/// Quadratic energy `(S_t(V) V, V)` at every snapshot and its logarithmic
/// derivative by centred differences (one-sided at the ends).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMonitor {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub log_derivative: Vec<f64>,
}

pub fn energy_monitor(traj: &Trajectory<StateU>) -> Result<EnergyMonitor> {
    let p = traj.params;
    let energy = traj
        .states
        .iter()
        .map(|s| to_balanced(s, &p).map(|v| quadratic_energy(&v, &p)))
        .collect::<Result<Vec<f64>>>()?;
    let t = &traj.times;
    let n = t.len();
    let log_derivative = (0..n)
        .map(|i| {
            if n < 2 || energy[i] <= 0.0 {
                return 0.0;
            }
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (energy[b].ln() - energy[a].ln()) / (t[b] - t[a])
        })
        .collect();
    Ok(EnergyMonitor { times: t.clone(), energy, log_derivative })
}

/// `(||V||^2, ||Pi^r V||^2, ||Pi^sing V||^2)` in `L2`.
pub fn projection_split(v: &StateV, mu: f64) -> (f64, f64, f64) {
    let r = projector_apply(v, mu, Projection::Regular);
    let s = projector_apply(v, mu, Projection::Singular);
    (v.l2_norm().powi(2), r.l2_norm().powi(2), s.l2_norm().powi(2))
}
