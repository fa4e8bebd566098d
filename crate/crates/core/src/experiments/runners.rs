use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::table::{fit_loglog_slope, Cell, FieldSnapshot, ResultTable};
use crate::analysis::{hyperbolicity_margin, quadratic_energy};
use crate::diagnostics::{consistency_residual, time_derivatives_of, triple_norm_from_derivatives, NormSpec};
use crate::elliptic;
use crate::prep::{composed_gap_derivatives, prepare};
use crate::solvers::{integrate, integrate_with_monitor, step, GnState, Scheme, StepPolicy};
use crate::spectral::ScalarField;
use crate::state::{to_balanced, ParamSet, StateU};
use crate::toy::{toy_oscillator_exact, CombinedPropagator, ComplexField, ToyModel, ToySpec};
use crate::Result;

const OK: &str = "ok";

fn failed(e: &crate::Error) -> Cell {
    // First line only, so the CSV stays one line per row.
    Cell::Text(format!("failed: {}", e.to_string().lines().next().unwrap_or_default()))
}

/// `head ++ tail ++ [hash]`, with the tail replaced by a failure status and
/// missing cells when the run errored.
fn finish_row(mut head: Vec<Cell>, tail: Result<Vec<Cell>>, width: usize, hash: &str) -> Vec<Cell> {
    let n_tail = width - head.len() - 1;
    let tail = tail.unwrap_or_else(|e| {
        let mut v = vec![failed(&e)];
        v.resize(n_tail, Cell::Missing);
        v
    });
    head.extend(tail);
    head.push(hash.into());
    head
}

fn sorted_unique(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Values of `y` at rows with status `ok`, paired with `x`.
fn ok_pairs(t: &ResultTable, rows: &[usize], x: &str, y: &str) -> (Vec<f64>, Vec<f64>) {
    let (xi, yi, si) = (t.column_index(x).unwrap(), t.column_index(y).unwrap(), t.column_index("status").unwrap());
    rows.iter()
        .filter(|&&r| t.rows[r][si].as_str() == Some(OK))
        .filter_map(|&r| Some((t.rows[r][xi].as_f64()?, t.rows[r][yi].as_f64()?)))
        .unzip()
}

fn initial_fields(cfg: &ExperimentConfig) -> Result<(ScalarField, ScalarField)> {
    Ok(cfg.initial_data.fields(cfg.grid.spec()?))
}

pub const CONVERGENCE_COLUMNS: &[&str] = &[
    "lambda",
    "mu",
    "order_m",
    "n_points",
    "status",
    "e_zeta",
    "e_u",
    "e_total",
    "gap_tt_l2_t0",
    "steps",
    "dt_max",
    "median_step_seconds",
    "config_hash",
];

/// FG runs from order-2 prepared data against one GN run from the same
/// `(zeta0, u0)`; `e_total = ||zeta_FG - zeta_GN||_{H^s} + ||u_FG - u_GN||_{H^s}`
/// at `t_end`, with `s = norm_index`. Fits `e_total` and `gap_tt_l2_t0` against lambda.
pub fn run_convergence_lambda(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    const M: u32 = 2;
    let hash = cfg.hash();
    let (zeta0, u0) = initial_fields(cfg)?;
    let s = cfg.norm_index;

    let p_ref = cfg.params.param_set(cfg.params.lambda[0])?;
    // A failed reference marks every row failed.
    let gn = integrate(&GnState::new(zeta0.clone(), u0.clone()), &p_ref, &cfg.policy);

    let lambdas = sorted_unique(&cfg.params.lambda);
    let rows: Vec<Vec<Cell>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let head: Vec<Cell> =
                vec![lambda.into(), cfg.params.mu.into(), M.into(), cfg.grid.n_points.into()];
            let run = || -> Result<Vec<Cell>> {
                let gn_end = match &gn {
                    Ok(traj) => traj.last().1,
                    Err(e) => return Err(crate::Error::Domain(format!("reference run: {e}"))),
                };
                let p = cfg.params.param_set(lambda)?;
                let data = prepare(&zeta0, &u0, M, &p)?;
                let gap_tt = composed_gap_derivatives(&data.state, &p)?.q_tt.l2_norm();
                let fg = integrate(&data.state, &p, &cfg.policy)?;
                let (_, end) = fg.last();
                let e_zeta = (&end.zeta - &gn_end.zeta).sobolev_norm(s);
                let e_u = (&end.u - &gn_end.u).sobolev_norm(s);
                Ok(vec![
                    OK.into(),
                    e_zeta.into(),
                    e_u.into(),
                    (e_zeta + e_u).into(),
                    gap_tt.into(),
                    fg.meta.steps.into(),
                    fg.meta.dt_max.into(),
                    fg.meta.median_step_seconds().into(),
                ])
            };
            finish_row(head, run(), CONVERGENCE_COLUMNS.len(), &hash)
        })
        .collect();

    let mut table = ResultTable::new("convergence_lambda", CONVERGENCE_COLUMNS);
    for row in rows {
        table.push_row(row)?;
    }
    let all: Vec<usize> = (0..table.rows.len()).collect();
    for col in ["e_total", "gap_tt_l2_t0"] {
        let (x, y) = ok_pairs(&table, &all, "lambda", col);
        table.fits.insert(col.to_string(), fit_loglog_slope(&x, &y));
    }
    table.config = Some(cfg.clone());
    Ok(table)
}

pub const PREPAREDNESS_COLUMNS: &[&str] = &[
    "lambda",
    "order_m",
    "mu",
    "n_points",
    "status",
    "sup_lambda_gap",
    "gap_t_l2_t0",
    "gap_tt_l2_t0",
    "sup_residual_l2",
    "rms_residual_l2",
    "sup_triple_norm",
    "min_hyperbolicity_margin",
    "steps",
    "median_step_seconds",
    "config_hash",
];

/// Triple norm of the balanced unknowns at `s0`, estimated from a short burst
/// of seven snapshots spaced to resolve the relaxation frequency `lambda^{1/2}/h`.
fn burst_triple_norm(s0: &StateU, p: &ParamSet, policy: &StepPolicy, spec: &NormSpec) -> Result<f64> {
    let h_min = s0.depth().min();
    let spacing = 0.1 * h_min / p.lambda.sqrt();
    let mut burst = *policy;
    burst.t_end = 6.0 * spacing;
    burst.snapshot_interval = spacing;
    let traj = integrate(s0, p, &burst)?;
    let snaps = traj
        .states
        .iter()
        .map(|s| to_balanced(s, p).map(|v| v.fields().into_iter().cloned().collect()))
        .collect::<Result<Vec<Vec<ScalarField>>>>()?;
    let j_max = (spec.s as usize).min(crate::diagnostics::MAX_TIME_DERIVATIVE);
    let td = time_derivatives_of(&traj.times, &snaps, j_max)?;
    Ok(triple_norm_from_derivatives(&td.derivatives[3], spec).value)
}

/// One FG run per `(lambda, m)`. `sup_lambda_gap` is the supremum over every
/// accepted step of `lambda ||eta - h||_{H^s}`; residual and triple-norm
/// monitors are taken at the snapshots.
pub fn run_preparedness_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let hash = cfg.hash();
    let (zeta0, u0) = initial_fields(cfg)?;
    let s = cfg.norm_index;
    let mut orders = cfg.prep_orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let points: Vec<(f64, u32)> = sorted_unique(&cfg.params.lambda)
        .into_iter()
        .flat_map(|l| orders.iter().map(move |&m| (l, m)))
        .collect();

    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(lambda, m)| {
            let head: Vec<Cell> =
                vec![lambda.into(), m.into(), cfg.params.mu.into(), cfg.grid.n_points.into()];
            let run = || -> Result<Vec<Cell>> {
                let p = cfg.params.param_set(lambda)?;
                let data = prepare(&zeta0, &u0, m, &p)?;
                let gd = composed_gap_derivatives(&data.state, &p)?;
                let mut sup_gap = lambda * gd.q.sobolev_norm(s);
                let traj = integrate_with_monitor(&data.state, &p, &cfg.policy, |_, st| {
                    sup_gap = sup_gap.max(lambda * st.relaxation_gap().sobolev_norm(s));
                })?;
                let residuals = traj
                    .states
                    .iter()
                    .map(|st| consistency_residual(st, &p, s).map(|r| r.l2))
                    .collect::<Result<Vec<f64>>>()?;
                let sup_res = residuals.iter().cloned().fold(0.0, f64::max);
                let rms_res = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
                let spec = NormSpec::new((s.ceil() as u32).max(2), m.max(1), p.lambda_mu().max(1.0))?;
                let mut sup_triple: f64 = 0.0;
                let mut min_margin = f64::INFINITY;
                for st in &traj.states {
                    sup_triple = sup_triple.max(burst_triple_norm(st, &p, &cfg.policy, &spec)?);
                    min_margin = min_margin.min(hyperbolicity_margin(&to_balanced(st, &p)?, &p));
                }
                Ok(vec![
                    OK.into(),
                    sup_gap.into(),
                    gd.q_t.l2_norm().into(),
                    gd.q_tt.l2_norm().into(),
                    sup_res.into(),
                    rms_res.into(),
                    sup_triple.into(),
                    min_margin.into(),
                    traj.meta.steps.into(),
                    traj.meta.median_step_seconds().into(),
                ])
            };
            finish_row(head, run(), PREPAREDNESS_COLUMNS.len(), &hash)
        })
        .collect();

    let mut table = ResultTable::new("preparedness_sweep", PREPAREDNESS_COLUMNS);
    for row in rows {
        table.push_row(row)?;
    }
    for &m in &orders {
        let rows = table.filter_rows("order_m", &Cell::from(m));
        for col in ["sup_lambda_gap", "gap_tt_l2_t0", "sup_residual_l2", "rms_residual_l2"] {
            let (x, y) = ok_pairs(&table, &rows, "lambda", col);
            table.fits.insert(format!("{col}_m{m}"), fit_loglog_slope(&x, &y));
        }
    }
    table.config = Some(cfg.clone());
    Ok(table)
}

pub const BENCHMARK_COLUMNS: &[&str] = &[
    "system",
    "scheme",
    "n_points",
    "lambda",
    "dt",
    "steps",
    "repeats",
    "median_step_seconds",
    "step_seconds_spread",
    "seconds_per_time_unit",
    "elliptic_calls_per_step",
    "elliptic_iterations_per_step",
    "config_hash",
];

/// Times `repeats x steps` steps of `s0`, returning per-repeat median step
/// seconds, the step size and the elliptic counters accumulated over all steps.
fn time_steps<S: crate::solvers::Evolvable>(
    s0: &S,
    p: &ParamSet,
    policy: &StepPolicy,
    repeats: usize,
    steps: usize,
) -> Result<(Vec<f64>, f64, u64, u64)> {
    let c0 = elliptic::counters();
    let mut medians = Vec::with_capacity(repeats);
    let mut dt_used = 0.0;
    for _ in 0..repeats {
        let mut s = s0.clone();
        let mut times = Vec::with_capacity(steps);
        for _ in 0..steps {
            let clock = Instant::now();
            let (next, dt) = step(&s, p, policy)?;
            times.push(clock.elapsed().as_secs_f64());
            dt_used = dt;
            s = next;
        }
        medians.push(crate::solvers::median(&times));
    }
    let c1 = elliptic::counters();
    Ok((medians, dt_used, c1.calls - c0.calls, c1.iterations - c0.iterations))
}

/// FG (split scheme) and GN (RK4) advanced from the same order-2 prepared
/// data at the first lambda of the config. Timing runs sequentially on the
/// calling thread.
pub fn run_benchmark_cost(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let hash = cfg.hash();
    let (zeta0, u0) = initial_fields(cfg)?;
    let lambda = cfg.params.lambda[0];
    let p = cfg.params.param_set(lambda)?;
    let data = prepare(&zeta0, &u0, 2, &p)?;
    let (repeats, steps) = (cfg.benchmark.repeats, cfg.benchmark.steps);
    let mut table = ResultTable::new("benchmark_cost", BENCHMARK_COLUMNS);

    let fg_policy = StepPolicy { scheme: Scheme::StrangSplit, ..cfg.policy };
    let gn_policy = StepPolicy { scheme: Scheme::Rk4Explicit, ..cfg.policy };
    let fg = time_steps(&data.state, &p, &fg_policy, repeats, steps)?;
    let gn = time_steps(&GnState::new(zeta0, u0), &p, &gn_policy, repeats, steps)?;
    for (system, scheme, (medians, dt, calls, iterations)) in
        [("fg", "strang_split", fg), ("gn", "rk4_explicit", gn)]
    {
        let med = crate::solvers::median(&medians);
        let spread = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - medians.iter().cloned().fold(f64::INFINITY, f64::min);
        let total = (repeats * steps) as f64;
        table.push_row(vec![
            system.into(),
            scheme.into(),
            cfg.grid.n_points.into(),
            lambda.into(),
            dt.into(),
            steps.into(),
            repeats.into(),
            med.into(),
            spread.into(),
            (med / dt).into(),
            (calls as f64 / total).into(),
            (iterations as f64 / total).into(),
            hash.as_str().into(),
        ])?;
    }
    table.config = Some(cfg.clone());
    Ok(table)
}

pub const TOY_COLUMNS: &[&str] = &[
    "model",
    "mu",
    "order_m",
    "epsilon",
    "delta",
    "n_points",
    "sup_ratio",
    "measured_slope",
    "analytic_slope",
    "weighted_l2_drift",
    "config_hash",
];

/// Toy-model demonstrations on `h = 1 + delta cos x`, `u0 = cos x`:
///
/// - oscillator: late-time slope of `||d_x u||` against `||u0 h'|| / eps`;
/// - combined: `sup_t ||d_x^m u|| mu^{m/2} / ||u0||` over `t in [0, 1/delta]`.
pub fn run_toy_demo(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let hash = cfg.hash();
    let t = &cfg.toy;
    let grid = cfg.grid.spec()?;
    let delta = t.delta;
    let h = ScalarField::from_fn(grid, |x| 1.0 + delta * x.cos());
    let u0 = ComplexField::from_fn(grid, |x| Complex64::new(x.cos(), 0.0));
    let mut table = ResultTable::new("toy_demo", TOY_COLUMNS);

    // The oscillator only depends on t / eps. Late times approach the
    // asymptotic slope, but the local wavenumber delta t / eps of the phase
    // must stay well below the Nyquist mode: stop at a sixth of n.
    let osc = ToySpec { model: ToyModel::Oscillator, epsilon: t.epsilon, mu: 0.0, h_profile: h.clone(), u0: u0.clone() };
    let t2 = grid.n_points as f64 / (6.0 * delta) * t.epsilon;
    let t1 = 0.5 * t2;
    let d1 = toy_oscillator_exact(&osc, t1)?.derivative(1).l2_norm();
    let d2 = toy_oscillator_exact(&osc, t2)?.derivative(1).l2_norm();
    let measured = (d2 - d1) / (t2 - t1);
    let u0h = ComplexField::from_fn(grid, |x| Complex64::new(-delta * x.sin() * x.cos(), 0.0));
    let analytic = u0h.l2_norm() / t.epsilon;
    let osc_end = toy_oscillator_exact(&osc, t2)?;
    let drift = (osc_end.l2_norm() - u0.l2_norm()).abs() / u0.l2_norm();
    table.push_row(vec![
        "oscillator".into(),
        Cell::Missing,
        1u32.into(),
        t.epsilon.into(),
        delta.into(),
        grid.n_points.into(),
        Cell::Missing,
        measured.into(),
        analytic.into(),
        drift.into(),
        hash.as_str().into(),
    ])?;

    let mut orders = t.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let mus = sorted_unique(&t.mu);
    let rows: Vec<Result<Vec<Vec<Cell>>>> = mus
        .par_iter()
        .map(|&mu| {
            let spec = ToySpec { model: ToyModel::Combined, epsilon: t.epsilon, mu, h_profile: h.clone(), u0: u0.clone() };
            let prop = CombinedPropagator::new(&spec)?;
            let n0 = u0.l2_norm();
            let w0 = u0.weighted_l2_norm(&h);
            let mut sup = vec![0.0f64; orders.len()];
            let mut drift: f64 = 0.0;
            let t_final = 1.0 / delta;
            for k in 0..t.samples {
                let tk = t_final * k as f64 / (t.samples - 1) as f64;
                let u = prop.at(tk);
                for (i, &m) in orders.iter().enumerate() {
                    let r = u.derivative(m).l2_norm() * mu.powf(m as f64 / 2.0) / n0;
                    sup[i] = sup[i].max(r);
                }
                drift = drift.max((u.weighted_l2_norm(&h) - w0).abs() / w0);
            }
            Ok(orders
                .iter()
                .zip(sup)
                .map(|(&m, r)| {
                    vec![
                        "combined".into(),
                        mu.into(),
                        m.into(),
                        t.epsilon.into(),
                        delta.into(),
                        grid.n_points.into(),
                        r.into(),
                        Cell::Missing,
                        Cell::Missing,
                        drift.into(),
                        hash.as_str().into(),
                    ]
                })
                .collect())
        })
        .collect();
    for group in rows {
        for row in group? {
            table.push_row(row)?;
        }
    }
    table.config = Some(cfg.clone());
    Ok(table)
}

pub const SINGLE_RUN_COLUMNS: &[&str] = &[
    "time",
    "lambda",
    "order_m",
    "mass",
    "lambda_gap",
    "residual_l2",
    "quadratic_energy",
    "hyperbolicity_margin",
    "config_hash",
];

/// One FG run at the first lambda and the highest listed preparation order,
/// one row per snapshot; initial and final states are attached as snapshots.
pub fn run_single_run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let hash = cfg.hash();
    let (zeta0, u0) = initial_fields(cfg)?;
    let lambda = cfg.params.lambda[0];
    let m = *cfg.prep_orders.iter().max().unwrap();
    let p = cfg.params.param_set(lambda)?;
    let data = prepare(&zeta0, &u0, m, &p)?;
    let traj = integrate(&data.state, &p, &cfg.policy)?;
    let s = cfg.norm_index;
    let mut table = ResultTable::new("single_run", SINGLE_RUN_COLUMNS);
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let v = to_balanced(st, &p)?;
        table.push_row(vec![
            (*t).into(),
            lambda.into(),
            m.into(),
            st.zeta.integral().into(),
            (lambda * st.relaxation_gap().sobolev_norm(s)).into(),
            consistency_residual(st, &p, s)?.l2.into(),
            quadratic_energy(&v, &p).into(),
            hyperbolicity_margin(&v, &p).into(),
            hash.as_str().into(),
        ])?;
    }
    let n = cfg.grid.n_points;
    for (name, st) in [("single_run_initial", &traj.states[0]), ("single_run_final", traj.last().1)] {
        table.snapshots.push(FieldSnapshot {
            name: name.to_string(),
            shape: vec![4, n],
            data: st.fields().iter().flat_map(|f| f.values().iter().copied()).collect(),
            description: "rows zeta, u, eta, w on the uniform grid x_j = j L / n".into(),
        });
    }
    table.config = Some(cfg.clone());
    Ok(table)
}

/// Dispatches on `kind`.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ResultTable> {
    match kind {
        ExperimentKind::ConvergenceLambda => run_convergence_lambda(cfg),
        ExperimentKind::PreparednessSweep => run_preparedness_sweep(cfg),
        ExperimentKind::BenchmarkCost => run_benchmark_cost(cfg),
        ExperimentKind::ToyDemo => run_toy_demo(cfg),
        ExperimentKind::SingleRun => run_single_run(cfg),
    }
}
