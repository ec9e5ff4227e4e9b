//! The benchmarked algorithm family and its scaling requirements.
//!
//! Every algorithm is a combination of one iteration driver from the solver
//! crate with one scaling choice: either the uniform scaling from the
//! largest curvature eigenvalue, a diagonal scaling computed from a
//! semidefinite relaxation, or a cycle over both kinds. [`ScalingBundle`]
//! computes the scalings once per problem instance so that all algorithms
//! sharing an instance reuse them.

use anyhow::{Context, Result};
use hardthresh::dsm::{compute_dsm, BmParams, DsmModel};
use hardthresh::linalg;
use hardthresh::solvers::{
    self, DiagonalScaling, DsmSchedule, RunTrace, SolverConfig,
};
use hardthresh::sparsity::SparseIterate;
use hardthresh::{LeastSquares, Objective, Vector};

/// Safety factor for algorithms that take raw weighted steps with no line
/// search: the scaling must strictly dominate the curvature bound for the
/// descent argument, and an exactly tight scaling would sit on the boundary.
pub const PLAIN_STEP_SAFETY: f64 = 1.0 + 1e-6;

/// The algorithms the benchmark can run. Names (for the CLI and result
/// files) are kebab-case: `iht`, `iwht`, `iht-lsr`, `ciwht-lsr`, `gpnp-l`,
/// `gpnp-dql`, `mfista`, `mfista-dql`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    /// Plain hard-thresholding steps under the uniform scaling.
    Iht,
    /// Plain weighted steps under the linear-model diagonal scaling.
    Iwht,
    /// Uniform scaling with backtracking line search and restarts.
    IhtLsr,
    /// Cycling scalings (quadratic, linear, uniform) with line search and
    /// restarts.
    CiwhtLsr,
    /// Line search, restarts, and restricted Newton polish under the
    /// uniform scaling.
    GpnpL,
    /// The Newton-polished variant on the cycling schedule.
    GpnpDql,
    /// Monotone momentum on the line-searched step, uniform scaling.
    Mfista,
    /// Monotone momentum on the cycling schedule.
    MfistaDql,
}

pub const ALL_ALGORITHMS: [AlgorithmId; 8] = [
    AlgorithmId::Iht,
    AlgorithmId::Iwht,
    AlgorithmId::IhtLsr,
    AlgorithmId::CiwhtLsr,
    AlgorithmId::GpnpL,
    AlgorithmId::GpnpDql,
    AlgorithmId::Mfista,
    AlgorithmId::MfistaDql,
];

impl AlgorithmId {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Iht => "iht",
            AlgorithmId::Iwht => "iwht",
            AlgorithmId::IhtLsr => "iht-lsr",
            AlgorithmId::CiwhtLsr => "ciwht-lsr",
            AlgorithmId::GpnpL => "gpnp-l",
            AlgorithmId::GpnpDql => "gpnp-dql",
            AlgorithmId::Mfista => "mfista",
            AlgorithmId::MfistaDql => "mfista-dql",
        }
    }

    /// Whether the algorithm needs the SDP-derived scalings (as opposed to
    /// only the largest eigenvalue). Lets the harness skip the SDP solves
    /// when no selected algorithm uses them.
    pub fn needs_dsm(self) -> bool {
        matches!(
            self,
            AlgorithmId::Iwht
                | AlgorithmId::CiwhtLsr
                | AlgorithmId::GpnpDql
                | AlgorithmId::MfistaDql
        )
    }

    fn uses_newton(self) -> bool {
        matches!(self, AlgorithmId::GpnpL | AlgorithmId::GpnpDql)
    }

    /// Runs the algorithm on a least-squares model from `x0`, using the
    /// precomputed scalings in `bundle`.
    pub fn run(
        self,
        model: &LeastSquares,
        x0: &SparseIterate,
        bundle: &ScalingBundle,
        base: &SolverConfig,
    ) -> RunTrace {
        let cfg = SolverConfig { use_newton: self.uses_newton(), ..base.clone() };
        let n = model.dim();
        match self {
            AlgorithmId::Iht => {
                let d = bundle.uniform_scaling(n, PLAIN_STEP_SAFETY);
                solvers::iwht(model, x0, &d, &cfg)
            }
            AlgorithmId::Iwht => {
                let d = bundle.linear_scaling(PLAIN_STEP_SAFETY);
                solvers::iwht(model, x0, &d, &cfg)
            }
            AlgorithmId::IhtLsr | AlgorithmId::GpnpL => {
                let schedule = DsmSchedule::single(bundle.uniform_scaling(n, 1.0));
                solvers::gpnp(model, x0, &schedule, &cfg)
            }
            AlgorithmId::CiwhtLsr | AlgorithmId::GpnpDql => {
                solvers::gpnp(model, x0, &bundle.cycling_schedule(n), &cfg)
            }
            AlgorithmId::Mfista => {
                let schedule = DsmSchedule::single(bundle.uniform_scaling(n, 1.0));
                solvers::mfista(model, x0, &schedule, &cfg)
            }
            AlgorithmId::MfistaDql => {
                solvers::mfista(model, x0, &bundle.cycling_schedule(n), &cfg)
            }
        }
    }
}

impl std::fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AlgorithmId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_ALGORITHMS
            .into_iter()
            .find(|a| a.name() == s)
            .with_context(|| {
                let names: Vec<&str> = ALL_ALGORITHMS.iter().map(|a| a.name()).collect();
                format!("unknown algorithm {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Scalings shared by all algorithms on one problem instance: the largest
/// curvature eigenvalue (always computed) and, on demand, the weights of
/// the linear- and quadratic-cost diagonal scalings.
#[derive(Clone, Debug)]
pub struct ScalingBundle {
    /// Largest eigenvalue of the curvature bound.
    pub lambda_max: f64,
    /// Linear-model weights (minimal weight sum), if computed.
    pub linear: Option<Vector>,
    /// Quadratic-model weights (minimal weight norm), if computed.
    pub quadratic: Option<Vector>,
}

impl ScalingBundle {
    /// Computes the scalings needed by `algs` for the model's curvature
    /// bound. The SDP solves are seeded so the bundle is reproducible.
    pub fn prepare<M: Objective>(model: &M, algs: &[AlgorithmId], seed: u64) -> Result<Self> {
        let c = model.hessian_bound();
        let top = linalg::max_eigenvalue(&c, 1e-10);
        anyhow::ensure!(
            top.converged,
            "largest-eigenvalue estimate did not converge (residual {:e})",
            top.residual
        );
        let (linear, quadratic) = if algs.iter().any(|a| a.needs_dsm()) {
            let params = BmParams { seed, ..BmParams::default() };
            let lin = compute_dsm(&c, DsmModel::Linear, &params)
                .context("linear-model scaling failed")?;
            let quad = compute_dsm(&c, DsmModel::Quadratic, &params)
                .context("quadratic-model scaling failed")?;
            (Some(lin.w), Some(quad.w))
        } else {
            (None, None)
        };
        Ok(ScalingBundle { lambda_max: top.value, linear, quadratic })
    }

    /// Uniform scaling `safety * lambda_max * I`.
    pub fn uniform_scaling(&self, n: usize, safety: f64) -> DiagonalScaling {
        DiagonalScaling::with_safety(Vector::from_raw(vec![self.lambda_max; n]), safety)
            .expect("positive eigenvalue scale")
    }

    pub fn linear_scaling(&self, safety: f64) -> DiagonalScaling {
        let w = self.linear.as_ref().expect("linear scaling was not prepared");
        DiagonalScaling::with_safety(w.clone(), safety).expect("repaired weights are positive")
    }

    pub fn quadratic_scaling(&self, safety: f64) -> DiagonalScaling {
        let w = self.quadratic.as_ref().expect("quadratic scaling was not prepared");
        DiagonalScaling::with_safety(w.clone(), safety).expect("repaired weights are positive")
    }

    /// The cycle used by the `-dql` algorithms: quadratic weights, linear
    /// weights, then the uniform scaling, one iteration each.
    pub fn cycling_schedule(&self, n: usize) -> DsmSchedule {
        DsmSchedule::new(
            vec![
                self.quadratic_scaling(1.0),
                self.linear_scaling(1.0),
                self.uniform_scaling(n, 1.0),
            ],
            1,
        )
        .expect("schedule entries share the model dimension")
    }
}
