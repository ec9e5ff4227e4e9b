//! Step primitives shared by the drivers: the scaled thresholding update,
//! backtracking line search over it, the restart jump, and the restricted
//! Newton polish.

use crate::linalg::{solve_spd, Vector};
use crate::objective::Objective;
use crate::sparsity::{project_sparse, SparseIterate};

use super::{DiagonalScaling, LineSearchParams};

/// One thresholding update with weights `mult * d` starting from the dense
/// point `x` (callers may pass points that are denser than `s`, e.g. a
/// momentum extrapolation): scale up, take the gradient step, keep the `s`
/// largest entries, scale back down.
pub(crate) fn scaled_threshold_step(
    x: &Vector,
    g: &Vector,
    s: usize,
    d: &DiagonalScaling,
    mult: f64,
) -> SparseIterate {
    let n = x.len();
    assert_eq!(d.len(), n, "scaled_threshold_step: scaling dimension mismatch");
    assert!(mult > 0.0, "scaled_threshold_step: multiplier must be positive");
    let sm = mult.sqrt();
    let z = Vector::from_fn(n, |i| {
        let r = sm * d.sqrt_weights()[i];
        r * x[i] - g[i] / r
    });
    let zp = project_sparse(&z, s);
    let stepped = Vector::from_fn(n, |i| {
        if zp[i] == 0.0 {
            0.0
        } else {
            zp[i] / (sm * d.sqrt_weights()[i])
        }
    });
    SparseIterate::new(stepped, s).expect("projection respects the sparsity budget")
}

/// The plain weighted hard-thresholding step
/// `x+ = D^{-1/2} P_{C_s}(D^{1/2} x - D^{-1/2} grad f(x))`.
pub fn weighted_step<M: Objective>(
    model: &M,
    x: &SparseIterate,
    d: &DiagonalScaling,
) -> SparseIterate {
    let g = model.gradient(x.x());
    scaled_threshold_step(x.x(), &g, x.sparsity(), d, 1.0)
}

pub(crate) struct SearchOutcome {
    pub point: SparseIterate,
    pub f: f64,
    /// False when every trial failed the sufficient-decrease test and the
    /// unscaled fallback was returned. Drivers take the point either way;
    /// only tests distinguish the two cases.
    #[cfg_attr(not(test), allow(dead_code))]
    pub accepted: bool,
}

/// Backtracking over the thresholding step: trial `j` in `1..=trials` uses
/// weights `alpha^(trials - j) * d`, so the scan starts at the most
/// aggressive step and stops at the first trial satisfying
/// `f(x_j) <= f_x - beta * ||x_j - x||^2`. If none passes, the last trial
/// (the plain full-weight step, safe whenever `d` dominates the curvature)
/// is returned with `accepted = false`.
pub(crate) fn line_search<M: Objective>(
    model: &M,
    x: &Vector,
    s: usize,
    f_x: f64,
    g: &Vector,
    d: &DiagonalScaling,
    p: &LineSearchParams,
) -> SearchOutcome {
    let mut last = None;
    for j in 1..=p.trials {
        let mult = p.alpha.powi((p.trials - j) as i32);
        let cand = scaled_threshold_step(x, g, s, d, mult);
        let f_c = model.value(cand.x());
        let dist_sq = cand.x().sub(x).norm_sq();
        if f_c <= f_x - p.beta * dist_sq {
            return SearchOutcome { point: cand, f: f_c, accepted: true };
        }
        last = Some(SearchOutcome { point: cand, f: f_c, accepted: false });
    }
    last.expect("at least one trial")
}

/// Public wrapper around the backtracking search starting from a feasible
/// point.
pub fn line_search_step<M: Objective>(
    model: &M,
    x: &SparseIterate,
    d: &DiagonalScaling,
    params: &LineSearchParams,
) -> SparseIterate {
    let f_x = model.value(x.x());
    let g = model.gradient(x.x());
    line_search(model, x.x(), x.sparsity(), f_x, &g, d, params).point
}

/// The restart jump: one thresholding step with weights shrunk to
/// `gamma * d`. Small `gamma` makes the gradient term dominate, so the jump
/// can leave the basin of the current fixed point; the caller tags the
/// resulting record as a restart because the objective may increase.
pub fn restart_step<M: Objective>(
    model: &M,
    x: &SparseIterate,
    d: &DiagonalScaling,
    gamma: f64,
) -> SparseIterate {
    assert!(gamma > 0.0 && gamma <= 1.0, "restart_step: gamma must lie in (0, 1]");
    let g = model.gradient(x.x());
    scaled_threshold_step(x.x(), &g, x.sparsity(), d, gamma)
}

pub(crate) struct NewtonOutcome {
    pub point: SparseIterate,
    pub f: f64,
    pub accepted: bool,
}

/// Newton polish restricted to the current support: solve
/// `H_S u = grad_S f(x)` and move `x_S -= u`, keeping the result when it
/// passes the same sufficient-decrease test as the line search. A singular
/// restricted Hessian or a failed decrease test leaves `x` unchanged.
pub(crate) fn newton_attempt<M: Objective>(
    model: &M,
    x: &SparseIterate,
    f_x: f64,
    beta: f64,
) -> NewtonOutcome {
    let reject = |x: &SparseIterate| NewtonOutcome { point: x.clone(), f: f_x, accepted: false };
    let support = x.support();
    if support.is_empty() {
        return NewtonOutcome { point: x.clone(), f: f_x, accepted: true };
    }
    let h = model.restricted_hessian(x.x(), &support);
    let g = model.gradient(x.x());
    let g_s = Vector::from_fn(support.len(), |k| g[support.as_slice()[k]]);
    let u = match solve_spd(&h, &g_s) {
        Ok(u) => u,
        Err(_) => return reject(x),
    };
    let mut v = x.x().clone();
    for (k, &i) in support.iter().enumerate() {
        v[i] -= u[k];
    }
    let cand = match SparseIterate::new(v, x.sparsity()) {
        Ok(c) => c,
        Err(_) => return reject(x),
    };
    let f_c = model.value(cand.x());
    let dist_sq = cand.x().sub(x.x()).norm_sq();
    if f_c.is_finite() && f_c <= f_x - beta * dist_sq {
        NewtonOutcome { point: cand, f: f_c, accepted: true }
    } else {
        reject(x)
    }
}

/// Public wrapper: the polished point on acceptance, `x` otherwise.
pub fn newton_step<M: Objective>(model: &M, x: &SparseIterate, beta: f64) -> SparseIterate {
    assert!(beta > 0.0, "newton_step: beta must be positive");
    let f_x = model.value(x.x());
    newton_attempt(model, x, f_x, beta).point
}
