use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::tendency::{fg_parts, fg_tendency, gn_tendency, relaxation_substep_exact, GnState};
use crate::elliptic;
use crate::spectral::ScalarField;
use crate::state::{ParamSet, StateU};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Explicit,
    StrangSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Fg,
    Gn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl_number: f64,
    /// Multiplier on the `h_min / lambda^{1/2}` cap of explicit FG steps.
    #[serde(default = "default_stiff_safety")]
    pub stiff_safety: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
}

fn default_scheme() -> Scheme {
    Scheme::StrangSplit
}

/// Small enough that the splitting error stays below the `1/lambda`
/// signal up to `lambda mu = 10^4` on 256 points.
fn default_cfl() -> f64 {
    0.05
}

fn default_t_end() -> f64 {
    1.0
}

fn default_snapshot_interval() -> f64 {
    0.05
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self::new(default_scheme(), default_t_end(), default_snapshot_interval())
    }
}

fn default_stiff_safety() -> f64 {
    0.5
}

impl StepPolicy {
    pub fn new(scheme: Scheme, t_end: f64, snapshot_interval: f64) -> Self {
        Self {
            scheme,
            cfl_number: default_cfl(),
            stiff_safety: default_stiff_safety(),
            t_end,
            snapshot_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_number > 0.0 && self.cfl_number <= 1.0) {
            return Err(Error::InvalidParams(format!("cfl_number must lie in (0, 1], got {}", self.cfl_number)));
        }
        if !(self.stiff_safety > 0.0 && self.stiff_safety.is_finite()) {
            return Err(Error::InvalidParams(format!("stiff_safety must be positive, got {}", self.stiff_safety)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParams(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "snapshot_interval must be positive, got {}",
                self.snapshot_interval
            )));
        }
        Ok(())
    }
}

/// A state that one of the two systems can advance in time.
pub trait Evolvable: Clone + Send + Sync {
    const SYSTEM: System;

    fn tendency(&self, p: &ParamSet) -> Result<Self>;
    fn axpy(&self, c: f64, other: &Self) -> Self;
    fn depth(&self) -> ScalarField;
    fn is_finite(&self) -> bool;
    /// Largest characteristic speed `|u| + (alpha h)^{1/2}` on the grid.
    fn max_speed(&self, p: &ParamSet) -> f64;
    fn components(&self) -> Vec<ScalarField>;

    /// One split step; systems without a stiff part fall back to RK4.
    fn split_step(&self, p: &ParamSet, dt: f64) -> Result<Self> {
        rk4(self, dt, |s| s.tendency(p))
    }
}

impl Evolvable for StateU {
    const SYSTEM: System = System::Fg;

    fn tendency(&self, p: &ParamSet) -> Result<Self> {
        fg_tendency(self, p)
    }

    fn axpy(&self, c: f64, other: &Self) -> Self {
        StateU::axpy(self, c, other)
    }

    fn depth(&self) -> ScalarField {
        StateU::depth(self)
    }

    fn is_finite(&self) -> bool {
        StateU::is_finite(self)
    }

    fn max_speed(&self, p: &ParamSet) -> f64 {
        let lm = p.lambda_mu();
        (0..self.zeta.len())
            .map(|j| {
                let h = 1.0 + self.zeta.values()[j];
                let eta = self.eta.values()[j];
                let alpha_h = h + lm * eta * eta / (3.0 * h * h);
                self.u.values()[j].abs() + alpha_h.max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    }

    fn components(&self) -> Vec<ScalarField> {
        self.fields().into_iter().cloned().collect()
    }

    fn split_step(&self, p: &ParamSet, dt: f64) -> Result<Self> {
        let half = relax(self, p, 0.5 * dt);
        let mid = rk4(&half, dt, |s| fg_parts(s, p).map(|parts| parts.nonstiff))?;
        Ok(relax(&mid, p, 0.5 * dt))
    }
}

fn relax(s: &StateU, p: &ParamSet, dt: f64) -> StateU {
    let h = s.depth();
    let (eta, w) = relaxation_substep_exact(&s.eta, &s.w, &h, dt, p.lambda);
    StateU::new(s.zeta.clone(), s.u.clone(), eta, w)
}

impl Evolvable for GnState {
    const SYSTEM: System = System::Gn;

    fn tendency(&self, p: &ParamSet) -> Result<Self> {
        gn_tendency(self, p)
    }

    fn axpy(&self, c: f64, other: &Self) -> Self {
        GnState::axpy(self, c, other)
    }

    fn depth(&self) -> ScalarField {
        GnState::depth(self)
    }

    fn is_finite(&self) -> bool {
        GnState::is_finite(self)
    }

    fn max_speed(&self, _p: &ParamSet) -> f64 {
        (0..self.zeta.len())
            .map(|j| self.u.values()[j].abs() + (1.0 + self.zeta.values()[j]).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    fn components(&self) -> Vec<ScalarField> {
        vec![self.zeta.clone(), self.u.clone()]
    }
}

fn rk4<S: Evolvable>(s: &S, dt: f64, f: impl Fn(&S) -> Result<S>) -> Result<S> {
    let k1 = f(s)?;
    let k2 = f(&s.axpy(0.5 * dt, &k1))?;
    let k3 = f(&s.axpy(0.5 * dt, &k2))?;
    let k4 = f(&s.axpy(dt, &k3))?;
    Ok(s.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4))
}

/// Stable step size for `s`: `cfl dx / max_speed`, further capped by
/// `stiff_safety h_min / lambda^{1/2}` for explicit FG steps.
pub fn stable_dt<S: Evolvable>(s: &S, p: &ParamSet, policy: &StepPolicy) -> f64 {
    let h = s.depth();
    let dx = h.grid().dx();
    let mut dt = policy.cfl_number * dx / s.max_speed(p);
    if S::SYSTEM == System::Fg && policy.scheme == Scheme::Rk4Explicit {
        dt = dt.min(policy.stiff_safety * h.min() / p.lambda.sqrt());
    }
    dt
}

/// Advances `s` by exactly `dt` with the policy's scheme.
pub fn step_with_dt<S: Evolvable>(s: &S, p: &ParamSet, scheme: Scheme, dt: f64) -> Result<S> {
    match scheme {
        Scheme::Rk4Explicit => rk4(s, dt, |x| x.tendency(p)),
        Scheme::StrangSplit => s.split_step(p, dt),
    }
}

/// One step with the policy's stable step size; returns the new state and the step used.
pub fn step<S: Evolvable>(s: &S, p: &ParamSet, policy: &StepPolicy) -> Result<(S, f64)> {
    let dt = stable_dt(s, p, policy);
    Ok((step_with_dt(s, p, policy.scheme, dt)?, dt))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverMeta {
    pub system: System,
    pub scheme: Scheme,
    /// Largest step used.
    pub dt_max: f64,
    pub steps: usize,
    /// Wall-clock seconds of each step.
    pub step_seconds: Vec<f64>,
    pub elliptic_calls: u64,
    pub elliptic_iterations: u64,
}

impl SolverMeta {
    pub fn median_step_seconds(&self) -> f64 {
        median(&self.step_seconds)
    }
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub params: ParamSet,
    pub meta: SolverMeta,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (&f64, &S) {
        (self.times.last().unwrap(), self.states.last().unwrap())
    }
}

/// Integrates to `policy.t_end`, storing a snapshot every `snapshot_interval`
/// (and at `t_end`). Steps are shortened so that snapshot times are hit exactly.
pub fn integrate<S: Evolvable>(s0: &S, p: &ParamSet, policy: &StepPolicy) -> Result<Trajectory<S>> {
    integrate_with_monitor(s0, p, policy, |_, _| {})
}

/// As [`integrate`], calling `monitor(t, state)` after every accepted step.
pub fn integrate_with_monitor<S: Evolvable>(
    s0: &S,
    p: &ParamSet,
    policy: &StepPolicy,
    mut monitor: impl FnMut(f64, &S),
) -> Result<Trajectory<S>> {
    p.validate()?;
    policy.validate()?;
    crate::state::check_depth(&s0.depth(), p.h_star)?;
    if !s0.is_finite() {
        return Err(Error::NonFinite { time: 0.0 });
    }

    let counters0 = elliptic::counters();
    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    let mut step_seconds = Vec::new();
    let mut dt_max: f64 = 0.0;

    let n_full = (policy.t_end / policy.snapshot_interval * (1.0 + 1e-12)).floor() as usize;
    let mut targets: Vec<f64> = (1..=n_full).map(|k| k as f64 * policy.snapshot_interval).collect();
    if targets.last().map_or(policy.t_end > 0.0, |&t| policy.t_end - t > 1e-12 * policy.t_end) {
        targets.push(policy.t_end);
    }

    let mut t = 0.0;
    let mut state = s0.clone();
    for target in targets {
        let dt_cap = stable_dt(&state, p, policy);
        let n_sub = ((target - t) / dt_cap).ceil().max(1.0) as usize;
        let dt = (target - t) / n_sub as f64;
        dt_max = dt_max.max(dt);
        for k in 0..n_sub {
            let clock = Instant::now();
            let next = match step_with_dt(&state, p, policy.scheme, dt) {
                Ok(next) => next,
                Err(Error::Cavitation { min_depth, h_star }) => {
                    return Err(Error::DepthFloor { time: t, min_depth, h_star, snapshot: state.components() })
                }
                Err(e) => return Err(e),
            };
            step_seconds.push(clock.elapsed().as_secs_f64());
            let t_next = if k + 1 == n_sub { target } else { t + dt };
            if !next.is_finite() {
                return Err(Error::NonFinite { time: t_next });
            }
            let min_depth = next.depth().min();
            if min_depth < p.h_star {
                return Err(Error::DepthFloor {
                    time: t_next,
                    min_depth,
                    h_star: p.h_star,
                    snapshot: state.components(),
                });
            }
            state = next;
            t = t_next;
            monitor(t, &state);
        }
        times.push(t);
        states.push(state.clone());
    }

    let counters1 = elliptic::counters();
    let meta = SolverMeta {
        system: S::SYSTEM,
        scheme: policy.scheme,
        dt_max,
        steps: step_seconds.len(),
        step_seconds,
        elliptic_calls: counters1.calls - counters0.calls,
        elliptic_iterations: counters1.iterations - counters0.iterations,
    };
    Ok(Trajectory { times, states, params: *p, meta })
}
