//! Recovery-rate experiment grid.
//!
//! A grid crosses sparsity levels with independent seeded instances and
//! runs every selected algorithm on every instance from the zero start.
//! Instances are generated per (level, trial) cell; the scalings are
//! computed once per instance and shared by all algorithms. Results come
//! back in a deterministic order (algorithm, level, trial) regardless of
//! how many worker threads ran the cells, and timings are kept out of the
//! result records so those are reproducible byte-for-byte.

use anyhow::{ensure, Context, Result};
use hardthresh::solvers::{SolverConfig, StepEvent, Termination};
use hardthresh::sparsity::SparseIterate;
use hardthresh::LeastSquares;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::algs::{AlgorithmId, ScalingBundle};
use crate::instance::{evaluate_recovery, generate_cs_instance, trial_seed};
use crate::timing::timed;

#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Measurement count (rows of the instance matrix).
    pub m: usize,
    /// Signal dimension (columns).
    pub n: usize,
    /// Planted sparsity levels, one batch of trials per level.
    pub sparsity_levels: Vec<usize>,
    /// Independent instances per level.
    pub trials: usize,
    pub algorithms: Vec<AlgorithmId>,
    /// Master seed; each cell derives its own seed from it.
    pub master_seed: u64,
    pub solver: SolverConfig,
    /// Report per-cell completion on stderr.
    pub progress: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.m >= 1 && self.n >= 1, "grid dimensions must be positive");
        ensure!(!self.sparsity_levels.is_empty(), "need at least one sparsity level");
        ensure!(self.trials >= 1, "need at least one trial per level");
        ensure!(!self.algorithms.is_empty(), "need at least one algorithm");
        for &s in &self.sparsity_levels {
            ensure!(
                s >= 1 && s <= self.m.min(self.n),
                "sparsity level {s} out of range for a {}x{} instance",
                self.m,
                self.n
            );
        }
        self.solver.validate().context("solver configuration")?;
        Ok(())
    }
}

/// Outcome of one algorithm on one instance. Every field except the two
/// clock readings is a pure function of the grid spec; the deterministic
/// fields go to `records.csv` and the clocks to `timings.csv`, so the
/// record file is reproducible byte-for-byte.
#[derive(Clone, Debug)]
pub struct RecoveryRecord {
    pub algorithm: AlgorithmId,
    pub s: usize,
    pub trial: usize,
    /// Instance seed (derived from the master seed, level, and trial).
    pub seed: u64,
    pub recovered: bool,
    pub relative_error: f64,
    pub final_f: f64,
    pub iterations: usize,
    pub termination: &'static str,
    /// Iteration pairs where the objective rose outside a restart; the
    /// drivers are designed to keep this at zero.
    pub monotone_violations: usize,
    /// Solver wall time, excluding instance generation and scalings.
    pub wall_millis: f64,
    /// Solver thread-CPU time over the same span.
    pub cpu_millis: f64,
}

/// Clock readings for one phase of one cell. `phase` is either an algorithm
/// name or `"scalings"` for the shared scaling computation, which is kept
/// out of the per-algorithm numbers and reported under its own rows.
#[derive(Clone, Debug)]
pub struct TimingRecord {
    pub phase: &'static str,
    pub s: usize,
    pub trial: usize,
    pub wall_millis: f64,
    pub cpu_millis: f64,
}

#[derive(Clone, Debug)]
pub struct GridResults {
    pub records: Vec<RecoveryRecord>,
    pub timings: Vec<TimingRecord>,
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ResidualTol => "residual_tol",
        Termination::FixedPoint => "fixed_point",
        Termination::Stagnation => "stagnation",
        Termination::MaxIters => "max_iters",
        Termination::NonFinite { .. } => "non_finite",
    }
}

/// Counts record pairs where the objective increased beyond floating-point
/// slack. Pairs entering a restart are exempt: the restart jump is allowed
/// to increase the objective by design.
pub fn monotone_violations(records: &[hardthresh::solvers::TraceRecord]) -> usize {
    records
        .windows(2)
        .filter(|w| w[1].event != StepEvent::Restart)
        .filter(|w| w[1].f > w[0].f + 1e-12 * w[0].f.abs())
        .count()
}

/// Runs every requested algorithm on every (level, trial) instance.
/// Cells run in parallel when a multi-threaded rayon pool is installed;
/// results are reassembled in (algorithm, level, trial) order either way.
pub fn run_grid(spec: &GridSpec) -> Result<GridResults> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.sparsity_levels.len())
        .flat_map(|li| (0..spec.trials).map(move |t| (li, t)))
        .collect();

    let mut cell_results: Vec<(usize, usize, CellResult)> = cells
        .par_iter()
        .map(|&(li, trial)| {
            let s = spec.sparsity_levels[li];
            let out = run_cell(spec, s, trial)
                .with_context(|| format!("cell s={s} trial={trial}"))?;
            if spec.progress {
                eprintln!("done s={s} trial={trial}");
            }
            Ok((li, trial, out))
        })
        .collect::<Result<_>>()?;
    cell_results.sort_by_key(|&(li, trial, _)| (li, trial));

    // regroup into (algorithm, level, trial) order
    let mut records = Vec::with_capacity(spec.algorithms.len() * cells.len());
    for ai in 0..spec.algorithms.len() {
        for &(_, _, ref cell) in &cell_results {
            records.push(cell.records[ai].clone());
        }
    }
    let mut timings = Vec::new();
    for (_, _, cell) in cell_results {
        timings.extend(cell.timings);
    }
    Ok(GridResults { records, timings })
}

struct CellResult {
    /// One record per spec algorithm, in spec order.
    records: Vec<RecoveryRecord>,
    timings: Vec<TimingRecord>,
}

fn run_cell(spec: &GridSpec, s: usize, trial: usize) -> Result<CellResult> {
    let seed = trial_seed(spec.master_seed, s, trial);
    let inst = generate_cs_instance(spec.m, spec.n, s, seed)?;
    let x_star = inst.x_star;
    let model = LeastSquares::new(inst.a, inst.b).context("instance is a valid model")?;

    let (bundle, wall, cpu) = timed(|| ScalingBundle::prepare(&model, &spec.algorithms, seed));
    let bundle = bundle?;
    let mut timings =
        vec![TimingRecord { phase: "scalings", s, trial, wall_millis: wall, cpu_millis: cpu }];

    let x0 = SparseIterate::zeros(spec.n, s);
    let mut records = Vec::with_capacity(spec.algorithms.len());
    for &alg in &spec.algorithms {
        let (trace, wall_millis, cpu_millis) =
            timed(|| alg.run(&model, &x0, &bundle, &spec.solver));
        timings.push(TimingRecord { phase: alg.name(), s, trial, wall_millis, cpu_millis });
        let rec = evaluate_recovery(trace.final_point().x(), x_star.x());
        records.push(RecoveryRecord {
            algorithm: alg,
            s,
            trial,
            seed,
            recovered: rec.recovered,
            relative_error: rec.relative_error,
            final_f: trace.final_f(),
            iterations: trace.iters(),
            termination: termination_name(trace.termination),
            monotone_violations: monotone_violations(&trace.records),
            wall_millis,
            cpu_millis,
        });
    }
    Ok(CellResult { records, timings })
}

/// Percentage of recovered trials for one (algorithm, level) cell.
/// Panics if the grid results contain no such cell.
pub fn recovery_rate(records: &[RecoveryRecord], alg: AlgorithmId, s: usize) -> f64 {
    let cell: Vec<&RecoveryRecord> =
        records.iter().filter(|r| r.algorithm == alg && r.s == s).collect();
    assert!(!cell.is_empty(), "no records for algorithm {alg} at s={s}");
    let hits = cell.iter().filter(|r| r.recovered).count();
    100.0 * hits as f64 / cell.len() as f64
}

/// Deterministic record table, schema-tagged with a leading comment line.
pub fn records_csv(records: &[RecoveryRecord]) -> String {
    let mut out = String::from("# recovery-records v1\n");
    out.push_str(
        "algorithm,s,trial,seed,recovered,relative_error,final_f,iterations,termination,monotone_violations\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{},{},{}\n",
            r.algorithm,
            r.s,
            r.trial,
            r.seed,
            u8::from(r.recovered),
            r.relative_error,
            r.final_f,
            r.iterations,
            r.termination,
            r.monotone_violations
        ));
    }
    out
}

/// Clock table; machine-dependent, hence separate from the records.
pub fn timings_csv(timings: &[TimingRecord]) -> String {
    let mut out = String::from("# phase-timings v1\nphase,s,trial,wall_millis,cpu_millis\n");
    for t in timings {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3}\n",
            t.phase, t.s, t.trial, t.wall_millis, t.cpu_millis
        ));
    }
    out
}

#[derive(Serialize)]
struct SummaryDoc {
    m: usize,
    n: usize,
    sparsity_levels: Vec<usize>,
    trials: usize,
    algorithms: Vec<String>,
    master_seed: u64,
    solver: SolverConfig,
    config_sha256: String,
    rates: Vec<RateCell>,
}

#[derive(Serialize)]
struct RateCell {
    algorithm: String,
    s: usize,
    recovered: usize,
    trials: usize,
    rate_percent: f64,
}

/// Human- and machine-readable run summary: the grid parameters, a hash of
/// them (so result sets can be matched to their configuration), and the
/// per-cell recovery rates.
pub fn summary_json(spec: &GridSpec, records: &[RecoveryRecord]) -> Result<String> {
    let algorithms: Vec<String> = spec.algorithms.iter().map(|a| a.name().to_string()).collect();
    let config_text = serde_json::to_string(&(
        spec.m,
        spec.n,
        &spec.sparsity_levels,
        spec.trials,
        &algorithms,
        spec.master_seed,
        &spec.solver,
    ))?;
    let config_sha256 = format!("{:x}", Sha256::digest(config_text.as_bytes()));

    let mut rates = Vec::new();
    for &alg in &spec.algorithms {
        for &s in &spec.sparsity_levels {
            let cell: Vec<&RecoveryRecord> =
                records.iter().filter(|r| r.algorithm == alg && r.s == s).collect();
            let recovered = cell.iter().filter(|r| r.recovered).count();
            rates.push(RateCell {
                algorithm: alg.name().to_string(),
                s,
                recovered,
                trials: cell.len(),
                rate_percent: if cell.is_empty() {
                    f64::NAN
                } else {
                    100.0 * recovered as f64 / cell.len() as f64
                },
            });
        }
    }
    let doc = SummaryDoc {
        m: spec.m,
        n: spec.n,
        sparsity_levels: spec.sparsity_levels.clone(),
        trials: spec.trials,
        algorithms,
        master_seed: spec.master_seed,
        solver: spec.solver.clone(),
        config_sha256,
        rates,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}
