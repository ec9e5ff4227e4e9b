//! Run records: what each driver did at every iteration and why it stopped.

use serde::Serialize;

use crate::linalg::{IndexSet, Vector};
use crate::sparsity::SparseIterate;

use super::SolverConfig;

/// What produced a trace record. `Gradient` is the plain (possibly
/// line-searched) thresholding step; the others mark the special moves.
/// Objective values are nonincreasing between consecutive records except
/// across a `Restart`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepEvent {
    Gradient,
    NewtonAccepted,
    NewtonRejected,
    Restart,
    DsmSwitch,
    MomentumReset,
}

impl StepEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepEvent::Gradient => "gradient",
            StepEvent::NewtonAccepted => "newton_accepted",
            StepEvent::NewtonRejected => "newton_rejected",
            StepEvent::Restart => "restart",
            StepEvent::DsmSwitch => "dsm_switch",
            StepEvent::MomentumReset => "momentum_reset",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub f: f64,
    pub support: IndexSet,
    pub step_norm: f64,
    pub event: StepEvent,
    /// Momentum parameter after this iteration; set by the accelerated
    /// driver only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    /// Model residual fell to `residual_tol`.
    ResidualTol,
    /// The step map no longer moves the iterate.
    FixedPoint,
    /// Trailing objective window went flat (Newton-enabled runs only).
    Stagnation,
    /// Iteration budget exhausted.
    MaxIters,
    /// Objective or iterate became NaN/infinite at this iteration; the trace
    /// holds the last finite point.
    NonFinite { iter: usize },
}

/// Full account of a solver run: one record per iteration (record 0 is the
/// start point), the final iterate, and the stop reason. `iterates` is
/// populated only when the config asks for it.
#[derive(Clone, Debug, Serialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_x: SparseIterate,
    pub termination: Termination,
    pub config: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vector>>,
}

impl RunTrace {
    pub fn final_point(&self) -> &SparseIterate {
        &self.final_x
    }

    /// Objective at the last record.
    pub fn final_f(&self) -> f64 {
        self.records.last().expect("trace always holds the start record").f
    }

    /// Smallest objective seen anywhere in the trace.
    pub fn best_f(&self) -> f64 {
        self.records.iter().map(|r| r.f).fold(f64::INFINITY, f64::min)
    }

    pub fn iters(&self) -> usize {
        self.records.last().expect("trace always holds the start record").iter
    }

    pub fn event_count(&self, event: StepEvent) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    /// One row per record with the fixed columns
    /// `iter,f,support_size,step_norm,event`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("iter,f,support_size,step_norm,event\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{},{:e},{}\n",
                r.iter,
                r.f,
                r.support.len(),
                r.step_norm,
                r.event.as_str()
            ));
        }
        out
    }

    /// Full serialization including per-record support indices, the final
    /// point, and the config that produced the run.
    pub fn to_json_string(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string(self)
    }
}
