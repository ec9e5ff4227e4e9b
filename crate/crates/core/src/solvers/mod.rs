//! Iteration drivers built on the weighted hard-thresholding step.
//!
//! Every scheme here shares one primitive: with a positive diagonal scaling
//! `D`, the update
//!
//! ```text
//!     z = P_{C_s}( D^{1/2} x - D^{-1/2} grad f(x) ),    x+ = D^{-1/2} z
//! ```
//!
//! projects a scaled gradient step back onto the sparsity budget. [`iwht`]
//! iterates it with a fixed scaling, [`ciwht`] cycles through a schedule of
//! scalings, [`bpg`] generalizes the step to separable Bregman kernels, and
//! [`gpnp`] composes the step with backtracking line search, restricted
//! Newton acceleration, and a gradient-based restart. [`mfista`] adds
//! monotone momentum on top of the line-searched step. Each driver returns a
//! [`RunTrace`] recording per-iteration objective values, supports, step
//! norms, and event tags, plus the reason the run stopped.
//!
//! Solvers are deterministic: no randomness enters the iteration, so a run
//! is a pure function of the model, start point, scalings, and config.

mod algorithms;
mod steps;
mod trace;

pub use algorithms::{bpg, ciwht, gpnp, iwht, mfista};
pub use steps::{line_search_step, newton_step, restart_step, weighted_step};
pub use trace::{RunTrace, StepEvent, Termination, TraceRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vector;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("scaling weight {index} must be positive and finite, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("safety margin must be finite and >= 1, got {0}")]
    BadSafety(f64),
    #[error("schedule needs at least one scaling")]
    EmptySchedule,
    #[error("schedule period must be at least 1")]
    BadPeriod,
    #[error("schedule mixes dimensions: expected {expected}, got {got}")]
    MixedDimensions { expected: usize, got: usize },
    #[error("config parameter {name} out of range: {got}")]
    BadParameter { name: &'static str, got: f64 },
}

/// Positive diagonal weights for the thresholding step, stored together with
/// their square roots so the step never recomputes them. The optional safety
/// margin (a factor `>= 1` applied once at construction) buys strict
/// domination of the Hessian bound when the caller runs without line search.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalScaling {
    d: Vector,
    sqrt_d: Vector,
    safety: f64,
}

impl DiagonalScaling {
    /// Weights used as-is (safety margin 1).
    pub fn new(d: Vector) -> Result<Self, SolverError> {
        Self::with_safety(d, 1.0)
    }

    /// Multiplies every weight by `safety >= 1` before storing.
    pub fn with_safety(d: Vector, safety: f64) -> Result<Self, SolverError> {
        if !(safety.is_finite() && safety >= 1.0) {
            return Err(SolverError::BadSafety(safety));
        }
        let mut scaled = Vec::with_capacity(d.len());
        for (i, &v) in d.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::NonPositiveWeight { index: i, value: v });
            }
            scaled.push(v * safety);
        }
        let sqrt_d = Vector::from_fn(scaled.len(), |i| scaled[i].sqrt());
        Ok(DiagonalScaling { d: Vector::from_raw(scaled), sqrt_d, safety })
    }

    /// The scalar scaling `value * I`, e.g. a Lipschitz constant.
    pub fn uniform(n: usize, value: f64) -> Result<Self, SolverError> {
        Self::new(Vector::from_raw(vec![value; n]))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Effective weights, safety margin included.
    pub fn weights(&self) -> &Vector {
        &self.d
    }

    pub fn sqrt_weights(&self) -> &Vector {
        &self.sqrt_d
    }

    pub fn safety(&self) -> f64 {
        self.safety
    }

    pub fn max_weight(&self) -> f64 {
        self.d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An ordered cycle of scalings applied round-robin, each held for `period`
/// iterations. A singleton schedule with period 1 reduces every driver to
/// its fixed-scaling form.
#[derive(Clone, Debug, PartialEq)]
pub struct DsmSchedule {
    scalings: Vec<DiagonalScaling>,
    period: usize,
}

impl DsmSchedule {
    pub fn new(scalings: Vec<DiagonalScaling>, period: usize) -> Result<Self, SolverError> {
        if scalings.is_empty() {
            return Err(SolverError::EmptySchedule);
        }
        if period == 0 {
            return Err(SolverError::BadPeriod);
        }
        let expected = scalings[0].len();
        for s in &scalings[1..] {
            if s.len() != expected {
                return Err(SolverError::MixedDimensions { expected, got: s.len() });
            }
        }
        Ok(DsmSchedule { scalings, period })
    }

    pub fn single(d: DiagonalScaling) -> Self {
        DsmSchedule { scalings: vec![d], period: 1 }
    }

    pub fn scalings(&self) -> &[DiagonalScaling] {
        &self.scalings
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.scalings[0].len()
    }

    /// Number of scalings in the cycle.
    pub fn cycle_len(&self) -> usize {
        self.scalings.len()
    }

    /// Index of the scaling used at 1-based iteration `iter`: the first
    /// `period` iterations use scaling 0, the next `period` use scaling 1,
    /// and so on, wrapping around.
    pub(crate) fn index_at(&self, iter: usize) -> usize {
        debug_assert!(iter >= 1);
        ((iter - 1) / self.period) % self.scalings.len()
    }
}

/// Backtracking parameters: trial `j` (1-based) scales the weights by
/// `alpha^(trials - j)`, so the scan starts at the most aggressive step
/// (smallest scaled weights) and ends with the unscaled safe step. A trial
/// point `x_j` is accepted when `f(x_j) <= f(x) - beta * ||x_j - x||^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub alpha: f64,
    pub trials: usize,
    pub beta: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams { alpha: 0.5, trials: 8, beta: 1e-4 }
    }
}

/// Termination, line search, restart, and tracing knobs shared by all
/// drivers. Defaults match the benchmark harness settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Outer iteration budget; line-searched steps and restarts both count.
    pub max_iters: usize,
    /// Stop when the model reports `residual_norm <= residual_tol` (only
    /// meaningful for residual-bearing models such as least squares).
    pub residual_tol: f64,
    /// Number of trailing objective values inspected by the stagnation stop.
    pub trace_window: usize,
    /// Stagnation threshold: stop when the window's standard deviation drops
    /// below this (applied only by Newton-enabled runs).
    pub trace_std_tol: f64,
    pub line_search: LineSearchParams,
    /// Weight multiplier for the restart jump, in (0, 1).
    pub restart_gamma: f64,
    /// Polish each line-searched step with a restricted Newton solve.
    pub use_newton: bool,
    /// A step of norm below `fixed_point_tol * max(1, ||x||)` counts as a
    /// fixed point of the step map.
    pub fixed_point_tol: f64,
    /// Keep every iterate in the trace (memory-heavy; meant for analysis).
    pub record_iterates: bool,
    /// Carried into the trace for provenance; the drivers themselves draw no
    /// randomness.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 15000,
            residual_tol: 1e-10,
            trace_window: 5,
            trace_std_tol: 1e-10,
            line_search: LineSearchParams::default(),
            restart_gamma: 3e-2,
            use_newton: false,
            fixed_point_tol: 1e-13,
            record_iterates: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        fn check(ok: bool, name: &'static str, got: f64) -> Result<(), SolverError> {
            if ok {
                Ok(())
            } else {
                Err(SolverError::BadParameter { name, got })
            }
        }
        check(self.max_iters >= 1, "max_iters", self.max_iters as f64)?;
        check(self.residual_tol.is_finite() && self.residual_tol >= 0.0, "residual_tol", self.residual_tol)?;
        check(self.trace_window >= 2, "trace_window", self.trace_window as f64)?;
        check(self.trace_std_tol.is_finite() && self.trace_std_tol >= 0.0, "trace_std_tol", self.trace_std_tol)?;
        let ls = &self.line_search;
        check(ls.alpha > 0.0 && ls.alpha < 1.0, "line_search.alpha", ls.alpha)?;
        check(ls.trials >= 1, "line_search.trials", ls.trials as f64)?;
        check(ls.beta.is_finite() && ls.beta > 0.0, "line_search.beta", ls.beta)?;
        check(self.restart_gamma > 0.0 && self.restart_gamma < 1.0, "restart_gamma", self.restart_gamma)?;
        check(
            self.fixed_point_tol.is_finite() && self.fixed_point_tol > 0.0,
            "fixed_point_tol",
            self.fixed_point_tol,
        )?;
        Ok(())
    }
}
