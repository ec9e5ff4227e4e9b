//! Benchmark harness for the sparse-recovery solvers: seeded instance
//! generation, algorithm dispatch with shared per-instance scalings, the
//! recovery-rate experiment grid, and a cost benchmark for the scaling
//! solver itself. The `hardthresh` binary in this crate exposes all of it
//! on the command line; the library surface exists so integration tests
//! can run the same experiments in-process.

pub mod algs;
pub mod config;
pub mod dsm_bench;
pub mod files;
pub mod grid;
pub mod instance;
pub mod timing;

pub use algs::{AlgorithmId, ScalingBundle, ALL_ALGORITHMS};
pub use grid::{run_grid, GridResults, GridSpec, RecoveryRecord};
pub use instance::{evaluate_recovery, generate_cs_instance, trial_seed, CsInstance};
