//! Scaling-computation benchmark: cost and quality of the block-coordinate
//! SDP solver across problem sizes.
//!
//! For each size `n` the benchmark builds the Gram matrix of an
//! `(n/8) x n` unit-column Gaussian matrix — the curvature bound the
//! recovery experiments feed to the scaling solver — and times the
//! block-coordinate method in its sequential (in-place) and parallel
//! (snapshot) sweep modes for the linear and quadratic cost models. Each
//! run records the final duality gap after primal extraction and repair,
//! mirroring the production pipeline, plus the per-sweep dual trajectory.

use anyhow::{ensure, Result};
use hardthresh::dsm::{
    bcm_run, extract_primal_linear, extract_primal_quadratic, repair_feasibility, BmParams,
    DsmModel,
};
use hardthresh::linalg::{self, DenseMatrix};
use hardthresh::Vector;

use crate::instance::gaussian_unit_columns;
use crate::timing::timed;

/// Row-update order of the block-coordinate method: `Sequential` updates in
/// place (Gauss-Seidel, monotone dual), `Parallel` updates all rows from a
/// pre-sweep snapshot (Jacobi, distributable across workers).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Sequential,
    Parallel,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Sequential => "sequential",
            SweepMode::Parallel => "parallel",
        }
    }
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct DsmBenchSpec {
    /// Signal dimensions to benchmark; the measurement count is `n / 8`
    /// (at least 1), matching the recovery-experiment shape.
    pub sizes: Vec<usize>,
    pub models: Vec<DsmModel>,
    pub modes: Vec<SweepMode>,
    pub seed: u64,
    /// Solver knobs; `parallel` is overridden per mode.
    pub params: BmParams,
}

#[derive(Clone, Debug)]
pub struct DsmBenchRecord {
    pub n: usize,
    pub model: DsmModel,
    pub mode: SweepMode,
    pub seed: u64,
    /// Sweeps actually executed (early exit counts fewer than the budget).
    pub sweeps: usize,
    pub dual: f64,
    /// Cost of the repaired weights under the model.
    pub primal: f64,
    /// `(primal - dual) / max(1, |dual|)`.
    pub gap: f64,
    /// Estimated smallest eigenvalue of `Diag(w) - C` after repair.
    pub feasibility_margin: f64,
    pub wall_millis: f64,
    pub cpu_millis: f64,
    /// Dual objective after each sweep.
    pub dual_trajectory: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct DsmBenchResults {
    pub records: Vec<DsmBenchRecord>,
    /// Sizes that failed, with the error; the benchmark continues past them.
    pub failures: Vec<(usize, String)>,
}

/// Runs every (size, model, mode) combination. A failing size is reported
/// in `failures` and the remaining sizes still run.
pub fn run_dsm_benchmark(spec: &DsmBenchSpec) -> Result<DsmBenchResults> {
    ensure!(!spec.sizes.is_empty(), "need at least one size");
    ensure!(!spec.models.is_empty(), "need at least one cost model");
    ensure!(!spec.modes.is_empty(), "need at least one sweep mode");
    ensure!(
        spec.models.iter().all(|m| *m != DsmModel::Lipschitz),
        "the lipschitz model has no block-coordinate solver to benchmark"
    );
    let mut out = DsmBenchResults::default();
    for &n in &spec.sizes {
        match bench_size(spec, n) {
            Ok(mut records) => out.records.append(&mut records),
            Err(e) => out.failures.push((n, format!("{e:#}"))),
        }
    }
    Ok(out)
}

fn bench_size(spec: &DsmBenchSpec, n: usize) -> Result<Vec<DsmBenchRecord>> {
    ensure!(n >= 2, "size {n} too small for a meaningful benchmark");
    let m = (n / 8).max(1);
    let a = gaussian_unit_columns(m, n, spec.seed);
    let c = a.gram();
    let mut records = Vec::new();
    for &model in &spec.models {
        for &mode in &spec.modes {
            let params = BmParams { parallel: mode == SweepMode::Parallel, ..spec.params };
            let (run, wall_millis, cpu_millis) = timed(|| bcm_run(&c, model, &params));
            let w_raw = match model {
                DsmModel::Linear => extract_primal_linear(&run.factor, &c),
                DsmModel::Quadratic => extract_primal_quadratic(&run.factor),
                DsmModel::Lipschitz => unreachable!("rejected by run_dsm_benchmark"),
            };
            let w = repair_feasibility(&w_raw, &c);
            let dual = run.final_dual();
            let primal = model_cost(model, &w);
            let gap = (primal - dual) / dual.abs().max(1.0);
            let feasibility_margin = linalg::min_eigenvalue(&diag_minus(&w, &c)).value;
            records.push(DsmBenchRecord {
                n,
                model,
                mode,
                seed: spec.seed,
                sweeps: run.sweeps_done,
                dual,
                primal,
                gap,
                feasibility_margin,
                wall_millis,
                cpu_millis,
                dual_trajectory: run.dual_values,
            });
        }
    }
    Ok(records)
}

fn model_cost(model: DsmModel, w: &Vector) -> f64 {
    match model {
        DsmModel::Linear => w.iter().sum(),
        DsmModel::Quadratic => 0.5 * w.norm_sq(),
        DsmModel::Lipschitz => w.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn diag_minus(w: &Vector, c: &DenseMatrix) -> DenseMatrix {
    let n = c.rows();
    let mut m = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let src = c.col(j);
        let dst = m.col_mut(j);
        for i in 0..n {
            dst[i] = -src[i];
        }
        dst[j] += w[j];
    }
    m
}

pub fn dsm_records_csv(records: &[DsmBenchRecord]) -> String {
    let mut out = String::from("# dsm-bench v1\n");
    out.push_str("n,model,mode,seed,sweeps,dual,primal,gap,feasibility_margin,wall_millis,cpu_millis\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{:e},{:e},{:.3},{:.3}\n",
            r.n,
            r.model,
            r.mode,
            r.seed,
            r.sweeps,
            r.dual,
            r.primal,
            r.gap,
            r.feasibility_margin,
            r.wall_millis,
            r.cpu_millis
        ));
    }
    out
}

/// Per-sweep dual values with their relative distance to the final dual:
/// one row per executed sweep.
pub fn trajectory_csv(rec: &DsmBenchRecord) -> String {
    let last = *rec.dual_trajectory.last().expect("at least one sweep runs");
    let mut out = String::from("sweep,dual,rel_err\n");
    for (k, &d) in rec.dual_trajectory.iter().enumerate() {
        let rel = (d - last).abs() / last.abs().max(1.0);
        out.push_str(&format!("{},{:e},{:e}\n", k + 1, d, rel));
    }
    out
}

/// File stem identifying one benchmark run, e.g. `trajectory_n250_linear_sequential`.
pub fn trajectory_stem(rec: &DsmBenchRecord) -> String {
    format!("trajectory_n{}_{}_{}", rec.n, rec.model, rec.mode)
}
