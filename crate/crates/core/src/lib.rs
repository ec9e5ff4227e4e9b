//! Solvers for cardinality-constrained minimization
//!
//! ```text
//!     min f(x)   subject to   ||x||_0 <= s
//! ```
//!
//! built around diagonally weighted hard-thresholding steps. The crate
//! provides:
//!
//! * [`linalg`]: dense column-major matrices and vectors with the handful of
//!   kernels the solvers need (products, Gram matrices, restricted SPD solves,
//!   extreme eigenvalue estimation). Everything is implemented in-repo so that
//!   results are reproducible bit-for-bit on a given platform.
//! * [`objective`]: the [`Objective`] interface plus least-squares and
//!   logistic-loss models.
//! * [`sparsity`]: the sparse projection, separable Bregman surrogate steps,
//!   and stationarity checkers (support-wise, Bregman, coordinate-wise).
//! * [`solvers`]: the iterative schemes (`iwht`, `ciwht`, `bpg`, `gpnp`,
//!   `mfista`) together with line search, restart, and restricted Newton
//!   building blocks, all recording a [`solvers::RunTrace`].
//! * [`dsm`]: diagonal scaling matrices computed from low-rank block
//!   coordinate ascent on small SDP relaxations, with primal extraction and a
//!   feasibility repair stage.
//!
//! A minimal end-to-end run:
//!
//! ```
//! use hardthresh::{LeastSquares, DenseMatrix, Vector};
//! use hardthresh::sparsity::SparseIterate;
//! use hardthresh::solvers::{self, DiagonalScaling, SolverConfig};
//!
//! // 2x3 system, look for a 1-sparse solution of min 0.5*||Ax - b||^2.
//! let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]]).unwrap();
//! let b = Vector::new(vec![2.0, 0.0]).unwrap();
//! let model = LeastSquares::new(a, b).unwrap();
//! let x0 = SparseIterate::zeros(3, 1);
//! let d = DiagonalScaling::uniform(3, 2.0).unwrap();
//! let trace = solvers::iwht(&model, &x0, &d, &SolverConfig::default());
//! let x = trace.final_point();
//! assert_eq!(x.support().as_slice(), &[0]);
//! ```

pub mod dsm;
pub mod linalg;
pub mod objective;
pub mod sparsity;
pub mod solvers;

pub use linalg::{DenseMatrix, IndexSet, Vector};
pub use objective::{LeastSquares, Logistic, Objective};
