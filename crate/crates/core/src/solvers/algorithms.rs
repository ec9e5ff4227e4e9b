//! The iteration drivers themselves.

use crate::linalg::Vector;
use crate::objective::Objective;
use crate::sparsity::{separable_bregman_argmin, SeparableKernel, SparseIterate};

use super::steps::{line_search, newton_attempt, restart_step, weighted_step};
use super::trace::{RunTrace, StepEvent, Termination, TraceRecord};
use super::{DiagonalScaling, DsmSchedule, SolverConfig};

/// Accumulates records (and optionally iterates) during a run.
struct Tracer {
    records: Vec<TraceRecord>,
    iterates: Option<Vec<Vector>>,
}

impl Tracer {
    fn start<M: Objective>(model: &M, x0: &SparseIterate, cfg: &SolverConfig) -> (Self, f64) {
        let f0 = model.value(x0.x());
        let tracer = Tracer {
            records: vec![TraceRecord {
                iter: 0,
                f: f0,
                support: x0.support(),
                step_norm: 0.0,
                event: StepEvent::Gradient,
                momentum: None,
            }],
            iterates: cfg.record_iterates.then(|| vec![x0.x().clone()]),
        };
        (tracer, f0)
    }

    fn push(
        &mut self,
        iter: usize,
        f: f64,
        x: &SparseIterate,
        step_norm: f64,
        event: StepEvent,
        momentum: Option<f64>,
    ) {
        self.records.push(TraceRecord { iter, f, support: x.support(), step_norm, event, momentum });
        if let Some(list) = &mut self.iterates {
            list.push(x.x().clone());
        }
    }

    fn finish(self, final_x: SparseIterate, termination: Termination, cfg: &SolverConfig) -> RunTrace {
        RunTrace {
            records: self.records,
            final_x,
            termination,
            config: cfg.clone(),
            iterates: self.iterates,
        }
    }
}

/// A step of this norm from a point of norm `x_norm` counts as "no move".
fn is_fixed(step_norm: f64, x_norm: f64, cfg: &SolverConfig) -> bool {
    step_norm <= cfg.fixed_point_tol * x_norm.max(1.0)
}

fn residual_at_or_below<M: Objective>(model: &M, x: &Vector, tol: f64) -> bool {
    model.residual_norm(x).map_or(false, |r| r <= tol)
}

/// Population standard deviation, two-pass for stability at tiny variances.
fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Shared driver for plain step maps (no line search): applies `step` until
/// the residual tolerance, a fixed point, the budget, or a nonfinite value.
/// `fixed_needed` consecutive no-move steps are required before declaring a
/// fixed point; a cyclic schedule passes its full cycle length so that every
/// scheduled scaling is verified to hold still.
fn run_step_map<M, F>(
    model: &M,
    x0: &SparseIterate,
    cfg: &SolverConfig,
    fixed_needed: usize,
    mut step: F,
) -> RunTrace
where
    M: Objective,
    F: FnMut(&SparseIterate, usize) -> (SparseIterate, StepEvent),
{
    cfg.validate().expect("invalid solver configuration");
    let (mut tracer, f0) = Tracer::start(model, x0, cfg);
    if !f0.is_finite() {
        return tracer.finish(x0.clone(), Termination::NonFinite { iter: 0 }, cfg);
    }
    if residual_at_or_below(model, x0.x(), cfg.residual_tol) {
        return tracer.finish(x0.clone(), Termination::ResidualTol, cfg);
    }
    let mut x = x0.clone();
    let mut consecutive_fixed = 0;
    for iter in 1..=cfg.max_iters {
        let (cand, event) = step(&x, iter);
        let step_norm = cand.x().sub(x.x()).norm();
        let f_c = model.value(cand.x());
        if !(f_c.is_finite() && cand.x().is_finite()) {
            tracer.push(iter, f_c, &cand, step_norm, event, None);
            return tracer.finish(x, Termination::NonFinite { iter }, cfg);
        }
        if is_fixed(step_norm, x.x().norm(), cfg) {
            consecutive_fixed += 1;
            if consecutive_fixed >= fixed_needed {
                return tracer.finish(x, Termination::FixedPoint, cfg);
            }
            continue;
        }
        consecutive_fixed = 0;
        x = cand;
        tracer.push(iter, f_c, &x, step_norm, event, None);
        if residual_at_or_below(model, x.x(), cfg.residual_tol) {
            return tracer.finish(x, Termination::ResidualTol, cfg);
        }
    }
    tracer.finish(x, Termination::MaxIters, cfg)
}

/// Iterative weighted hard thresholding with a fixed scaling: repeat the
/// weighted step until it stops moving or the residual tolerance is met.
pub fn iwht<M: Objective>(
    model: &M,
    x0: &SparseIterate,
    d: &DiagonalScaling,
    cfg: &SolverConfig,
) -> RunTrace {
    assert_eq!(d.len(), x0.dim(), "iwht: scaling dimension mismatch");
    run_step_map(model, x0, cfg, 1, |x, _| (weighted_step(model, x, d), StepEvent::Gradient))
}

/// Cyclic variant: the schedule's scalings are applied round-robin, each for
/// `schedule.period()` iterations, with `dsm_switch` events marking the
/// changeovers. A fixed point is declared only after a full cycle of
/// no-move steps.
pub fn ciwht<M: Objective>(
    model: &M,
    x0: &SparseIterate,
    schedule: &DsmSchedule,
    cfg: &SolverConfig,
) -> RunTrace {
    assert_eq!(schedule.dim(), x0.dim(), "ciwht: schedule dimension mismatch");
    let fixed_needed = schedule.cycle_len() * schedule.period();
    let mut last_idx = 0usize;
    run_step_map(model, x0, cfg, fixed_needed, move |x, iter| {
        let idx = schedule.index_at(iter);
        let event = if idx == last_idx { StepEvent::Gradient } else { StepEvent::DsmSwitch };
        last_idx = idx;
        (weighted_step(model, x, &schedule.scalings()[idx]), event)
    })
}

/// Bregman proximal gradient: the thresholding step generalized to a
/// separable kernel `h` with step constant `l`. With a quadratic kernel this
/// reproduces `iwht` exactly.
pub fn bpg<M: Objective, K: SeparableKernel>(
    model: &M,
    x0: &SparseIterate,
    kernel: &K,
    l: f64,
    cfg: &SolverConfig,
) -> RunTrace {
    assert_eq!(kernel.dim(), x0.dim(), "bpg: kernel dimension mismatch");
    assert!(l > 0.0, "bpg: step constant must be positive");
    run_step_map(model, x0, cfg, 1, |x, _| {
        (separable_bregman_argmin(model, x, kernel, l), StepEvent::Gradient)
    })
}

/// Line search + restart + optional restricted Newton polish over a scaling
/// schedule. Per iteration: backtracking step with the scheduled scaling,
/// then the Newton attempt when enabled. A stalled step map triggers the
/// gradient-based restart jump while the model's residual is still above
/// tolerance; otherwise stalling ends the run. Newton-enabled runs also stop
/// when the trailing objective window goes flat.
pub fn gpnp<M: Objective>(
    model: &M,
    x0: &SparseIterate,
    schedule: &DsmSchedule,
    cfg: &SolverConfig,
) -> RunTrace {
    cfg.validate().expect("invalid solver configuration");
    assert_eq!(schedule.dim(), x0.dim(), "gpnp: schedule dimension mismatch");
    let (mut tracer, f0) = Tracer::start(model, x0, cfg);
    if !f0.is_finite() {
        return tracer.finish(x0.clone(), Termination::NonFinite { iter: 0 }, cfg);
    }
    if residual_at_or_below(model, x0.x(), cfg.residual_tol) {
        return tracer.finish(x0.clone(), Termination::ResidualTol, cfg);
    }
    let mut x = x0.clone();
    let mut f_x = f0;
    let mut last_idx = 0usize;
    let mut recent_f: Vec<f64> = Vec::new();
    // a point is abandoned (restart or stop) only once the step stalls for a
    // full schedule cycle: a point fixed under one scaling may still be moved
    // by the next one, and that escape is cheaper than a restart jump
    let stalls_needed = schedule.cycle_len() * schedule.period();
    let mut stalls = 0usize;
    // restarts always jump along the most conservative scaling in the cycle
    // so the reach of a jump does not depend on which scaling stalled
    let restart_d = schedule
        .scalings()
        .iter()
        .max_by(|a, b| a.max_weight().total_cmp(&b.max_weight()))
        .expect("schedule is never empty");
    for iter in 1..=cfg.max_iters {
        let idx = schedule.index_at(iter);
        let step_event =
            if idx == last_idx { StepEvent::Gradient } else { StepEvent::DsmSwitch };
        last_idx = idx;
        let d = &schedule.scalings()[idx];

        let g = model.gradient(x.x());
        let out = line_search(model, x.x(), x.sparsity(), f_x, &g, d, &cfg.line_search);
        let step_norm = out.point.x().sub(x.x()).norm();
        if !(out.f.is_finite() && out.point.x().is_finite()) {
            tracer.push(iter, out.f, &out.point, step_norm, step_event, None);
            return tracer.finish(x, Termination::NonFinite { iter }, cfg);
        }

        if is_fixed(step_norm, x.x().norm(), cfg) {
            stalls += 1;
            if stalls < stalls_needed {
                // record the no-move step and let the schedule rotate; the
                // stagnation window tracks progress values only, so repeated
                // stall objectives do not imitate a flat tail
                tracer.push(iter, f_x, &x, step_norm, step_event, None);
                continue;
            }
            stalls = 0;
            // every scaling stalls here: jump away while the residual says
            // the instance is unsolved, polish if Newton can still move, or
            // stop
            let unsolved = model.residual_norm(x.x()).map_or(false, |r| r > cfg.residual_tol);
            if unsolved {
                let jump = restart_step(model, &x, restart_d, cfg.restart_gamma);
                let jump_norm = jump.x().sub(x.x()).norm();
                let f_j = model.value(jump.x());
                if !(f_j.is_finite() && jump.x().is_finite()) {
                    tracer.push(iter, f_j, &jump, jump_norm, StepEvent::Restart, None);
                    return tracer.finish(x, Termination::NonFinite { iter }, cfg);
                }
                if is_fixed(jump_norm, x.x().norm(), cfg) {
                    return tracer.finish(x, Termination::FixedPoint, cfg);
                }
                x = jump;
                f_x = f_j;
                tracer.push(iter, f_x, &x, jump_norm, StepEvent::Restart, None);
                recent_f.push(f_x);
                continue;
            }
            if cfg.use_newton {
                let polish = newton_attempt(model, &x, f_x, cfg.line_search.beta);
                let move_norm = polish.point.x().sub(x.x()).norm();
                if polish.accepted && !is_fixed(move_norm, x.x().norm(), cfg) {
                    x = polish.point;
                    f_x = polish.f;
                    tracer.push(iter, f_x, &x, move_norm, StepEvent::NewtonAccepted, None);
                    recent_f.push(f_x);
                    if residual_at_or_below(model, x.x(), cfg.residual_tol) {
                        return tracer.finish(x, Termination::ResidualTol, cfg);
                    }
                    continue;
                }
            }
            return tracer.finish(x, Termination::FixedPoint, cfg);
        }

        stalls = 0;
        x = out.point;
        f_x = out.f;
        tracer.push(iter, f_x, &x, step_norm, step_event, None);

        if cfg.use_newton {
            let polish = newton_attempt(model, &x, f_x, cfg.line_search.beta);
            if polish.accepted {
                let move_norm = polish.point.x().sub(x.x()).norm();
                if move_norm > 0.0 {
                    x = polish.point;
                    f_x = polish.f;
                    tracer.push(iter, f_x, &x, move_norm, StepEvent::NewtonAccepted, None);
                }
            } else {
                tracer.push(iter, f_x, &x, 0.0, StepEvent::NewtonRejected, None);
            }
        }

        recent_f.push(f_x);
        if residual_at_or_below(model, x.x(), cfg.residual_tol) {
            return tracer.finish(x, Termination::ResidualTol, cfg);
        }
        if cfg.use_newton && recent_f.len() >= cfg.trace_window {
            let window = &recent_f[recent_f.len() - cfg.trace_window..];
            if std_dev(window) < cfg.trace_std_tol {
                return tracer.finish(x, Termination::Stagnation, cfg);
            }
        }
    }
    tracer.finish(x, Termination::MaxIters, cfg)
}

/// Monotone accelerated driver: line-searched step at the extrapolated point
/// `y`, keep the better of the stepped point and the incumbent, and carry
/// momentum only while the step helps. A support change or a rejected
/// candidate (stepped value above the incumbent's) resets the momentum
/// (`t = 1`, `y = x`) and is tagged `momentum_reset` in the trace.
pub fn mfista<M: Objective>(
    model: &M,
    x0: &SparseIterate,
    schedule: &DsmSchedule,
    cfg: &SolverConfig,
) -> RunTrace {
    cfg.validate().expect("invalid solver configuration");
    assert_eq!(schedule.dim(), x0.dim(), "mfista: schedule dimension mismatch");
    let (mut tracer, f0) = Tracer::start(model, x0, cfg);
    if !f0.is_finite() {
        return tracer.finish(x0.clone(), Termination::NonFinite { iter: 0 }, cfg);
    }
    if residual_at_or_below(model, x0.x(), cfg.residual_tol) {
        return tracer.finish(x0.clone(), Termination::ResidualTol, cfg);
    }
    let n = x0.dim();
    let s = x0.sparsity();
    let mut x = x0.clone();
    let mut f_x = f0;
    let mut y = x0.x().clone();
    let mut t = 1.0f64;
    let mut last_idx = 0usize;
    for iter in 1..=cfg.max_iters {
        let idx = schedule.index_at(iter);
        let switch = idx != last_idx;
        last_idx = idx;
        let d = &schedule.scalings()[idx];

        let f_y = model.value(&y);
        let g_y = model.gradient(&y);
        let z = line_search(model, &y, s, f_y, &g_y, d, &cfg.line_search).point;
        let f_z = model.value(z.x());
        if !(f_z.is_finite() && z.x().is_finite()) {
            tracer.push(iter, f_z, &z, 0.0, StepEvent::Gradient, None);
            return tracer.finish(x, Termination::NonFinite { iter }, cfg);
        }

        // monotone pick: never let the accelerated point worsen the incumbent
        let rejected = f_z > f_x;
        let (x_next, f_next) = if rejected { (x.clone(), f_x) } else { (z.clone(), f_z) };
        let step_norm = x_next.x().sub(x.x()).norm();

        // Drop the momentum when the stepped support moves or the candidate
        // was rejected. Rejection means the extrapolation overshot; restarting
        // from the incumbent restores plain descent steps instead of letting
        // the overshoot cycle persist.
        let (y_next, event) = if rejected || z.support() != x.support() {
            t = 1.0;
            (x_next.x().clone(), StepEvent::MomentumReset)
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let a = t / t_next;
            let b = (t - 1.0) / t_next;
            let y_new = Vector::from_fn(n, |i| {
                x_next.x()[i]
                    + a * (z.x()[i] - x_next.x()[i])
                    + b * (x_next.x()[i] - x.x()[i])
            });
            t = t_next;
            (y_new, if switch { StepEvent::DsmSwitch } else { StepEvent::Gradient })
        };

        let x_still = is_fixed(step_norm, x.x().norm(), cfg);
        let y_still = is_fixed(y_next.sub(&y).norm(), y.norm(), cfg);
        if x_still && y_still {
            return tracer.finish(x, Termination::FixedPoint, cfg);
        }

        x = x_next;
        f_x = f_next;
        y = y_next;
        tracer.push(iter, f_x, &x, step_norm, event, Some(t));
        if residual_at_or_below(model, x.x(), cfg.residual_tol) {
            return tracer.finish(x, Termination::ResidualTol, cfg);
        }
    }
    tracer.finish(x, Termination::MaxIters, cfg)
}
