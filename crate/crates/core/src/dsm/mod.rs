//! Diagonal scaling matrices from semidefinite programs.
//!
//! Given a curvature bound `C` (for least squares, the Gram matrix `AᵀA`),
//! a diagonal scaling is a weight vector `w > 0` with `Diag(w) ⪰ C`, so the
//! weighted step of the solvers is a true majorizer. Three cost models pick
//! among the feasible scalings:
//!
//! * **linear** — minimize `Σ w_i`;
//! * **quadratic** — minimize `0.5 Σ w_i²`;
//! * **lipschitz** — minimize `max_i w_i`, whose optimum is the uniform
//!   scaling `λ_max(C) · 1`.
//!
//! The first two are solved through their SDP duals with a low-rank
//! block-coordinate method (see [`bcm`]), followed by a primal extraction
//! and a feasibility repair that certifies `Diag(w) ⪰ C` up to a tiny
//! slack via Cholesky. [`compute_dsm`] runs the whole pipeline and reports
//! the duality gap, so callers can tell how close the scaling is to
//! optimal.

pub mod bcm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, DenseMatrix, Vector};

pub use bcm::{
    bcm_linear, bcm_parallel_sweep, bcm_quadratic, bcm_run, cubic_positive_root, default_rank,
    dual_objective, BcmRun, BmFactor, BmParams,
};

/// Cost model selecting which feasible diagonal scaling to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsmModel {
    Linear,
    Quadratic,
    Lipschitz,
}

impl std::fmt::Display for DsmModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DsmModel::Linear => "linear",
            DsmModel::Quadratic => "quadratic",
            DsmModel::Lipschitz => "lipschitz",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for DsmModel {
    type Err = DsmError;

    fn from_str(s: &str) -> Result<Self, DsmError> {
        match s {
            "linear" => Ok(DsmModel::Linear),
            "quadratic" => Ok(DsmModel::Quadratic),
            "lipschitz" => Ok(DsmModel::Lipschitz),
            other => Err(DsmError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DsmError {
    #[error("curvature matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("curvature matrix is empty")]
    Empty,
    #[error("curvature matrix is not symmetric (max deviation {max_dev:e})")]
    Asymmetric { max_dev: f64 },
    #[error("eigenvalue estimation did not converge (residual {residual:e})")]
    EigenNotConverged { residual: f64 },
    #[error("unknown scaling model {0:?}; expected linear, quadratic or lipschitz")]
    UnknownModel(String),
}

/// A computed diagonal scaling together with its optimality certificates.
#[derive(Clone, Debug, Serialize)]
pub struct DsmSolution {
    /// The scaling weights, strictly positive and repaired to feasibility.
    pub w: Vector,
    /// Final dual objective value (a lower bound on the primal optimum).
    pub dual_objective: f64,
    /// Primal cost of `w` under the chosen model, after repair.
    pub primal_objective: f64,
    /// `(primal - dual) / max(1, |dual|)`; small means near-optimal.
    pub gap: f64,
    /// Estimated `λ_min(Diag(w) - C)`; nonnegative up to estimation error.
    pub feasibility_margin: f64,
    /// Sweeps of the block-coordinate method, or power-iteration count for
    /// the lipschitz model.
    pub iterations: usize,
}

/// Relative Cholesky slack used when certifying `Diag(w) - C ⪰ 0`: the
/// certificate accepts matrices with `λ_min ≥ -5e-11 · λ_max(C)`, far inside
/// every tolerance downstream consumers use.
const CERT_SLACK_REL: f64 = 5e-11;

/// Relative symmetry tolerance on input matrices.
const SYMMETRY_TOL: f64 = 1e-8;

/// `Diag(w) - C` as a dense matrix.
fn diag_minus(w: &Vector, c: &DenseMatrix) -> DenseMatrix {
    let n = c.rows();
    assert_eq!(w.len(), n, "weight/matrix dimension mismatch");
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

fn validate_input(c: &DenseMatrix) -> Result<(), DsmError> {
    if !c.is_square() {
        return Err(DsmError::NotSquare { rows: c.rows(), cols: c.cols() });
    }
    if c.rows() == 0 {
        return Err(DsmError::Empty);
    }
    let dev = c.asymmetry();
    if dev > SYMMETRY_TOL * c.max_abs_entry().max(1.0) {
        return Err(DsmError::Asymmetric { max_dev: dev });
    }
    Ok(())
}

/// Primal weights from a linear-dual factor: `w_i = z_iᵀ Z C_i / z_iᵀ z_i`
/// with `z_i = Z e_i`, evaluated through `B` (`Z = B Bᵀ` is never formed).
/// Near-zero denominators fall back to the diagonal ratio `(ZC)_ii / Z_ii`,
/// and a fully zero row yields `w_i = 0`, which the repair stage lifts.
pub fn extract_primal_linear(factor: &BmFactor, c: &DenseMatrix) -> Vector {
    let n = factor.n();
    assert_eq!(c.rows(), n, "factor/matrix dimension mismatch");
    assert!(c.is_square(), "curvature matrix must be square");
    let bt = factor.transposed();
    let k = factor.rank();
    // M = BᵀB, k x k
    let m = bt.transpose().gram();
    let mut w = Vector::zeros(n);
    let mut y = vec![0.0; k];
    let mut my = vec![0.0; k];
    let mut mb = vec![0.0; k];
    for i in 0..n {
        // y = Bᵀ C_i
        y.iter_mut().for_each(|v| *v = 0.0);
        let ci = c.col(i);
        for (j, &cij) in ci.iter().enumerate() {
            if cij == 0.0 {
                continue;
            }
            let bj = bt.col(j);
            for (yv, &bv) in y.iter_mut().zip(bj) {
                *yv += cij * bv;
            }
        }
        let bi = bt.col(i);
        mat_times(&m, &y, &mut my);
        mat_times(&m, bi, &mut mb);
        let num: f64 = bi.iter().zip(&my).map(|(a, b)| a * b).sum();
        let den: f64 = bi.iter().zip(&mb).map(|(a, b)| a * b).sum();
        w[i] = if den >= 1e-14 {
            num / den
        } else {
            let zii: f64 = bi.iter().map(|v| v * v).sum();
            if zii >= 1e-14 {
                let zci: f64 = bi.iter().zip(&y).map(|(a, b)| a * b).sum();
                zci / zii
            } else {
                0.0
            }
        };
    }
    w
}

/// `out = M v` for a small square `M` given as a `DenseMatrix`.
fn mat_times(m: &DenseMatrix, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        for (o, &mij) in out.iter_mut().zip(m.col(j)) {
            *o += mij * vj;
        }
    }
}

/// Primal weights from a quadratic-dual factor: `w_i = Z_ii = ||B_i||²`.
pub fn extract_primal_quadratic(factor: &BmFactor) -> Vector {
    factor.z_diag()
}

/// Certified feasibility check: Cholesky of `Diag(w) - C + tau I`.
fn certified_feasible(w: &Vector, c: &DenseMatrix, tau: f64) -> bool {
    linalg::psd_certificate(&diag_minus(w, c), tau)
}

fn repair_with(w: &Vector, c: &DenseMatrix, lam_max: f64) -> Vector {
    assert_eq!(w.len(), c.rows(), "weight/matrix dimension mismatch");
    if lam_max <= 0.0 {
        // C ⪯ 0, so any nonnegative diagonal already dominates it
        return w.clone();
    }
    let tau = CERT_SLACK_REL * lam_max;
    if certified_feasible(w, c, tau) {
        return w.clone();
    }
    // smallest certified multiplier: walk the geometric grid up to (just
    // past) 2, then tighten the bracket so the reported cost is not
    // quantized to a grid point
    let mut lo = 1.0f64;
    while lo < 2.0 {
        let hi = lo * 1.01;
        if certified_feasible(&w.scale(hi), c, tau) {
            let mut lo = lo;
            let mut hi = hi;
            for _ in 0..25 {
                let mid = 0.5 * (lo + hi);
                if certified_feasible(&w.scale(mid), c, tau) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return w.scale(hi);
        }
        lo = hi;
    }
    // scaling cannot fix it (e.g. w = 0): shift every coordinate up instead
    let est = linalg::min_eigenvalue(&diag_minus(w, c));
    let mut shift = (est.value.abs() * (1.0 + 1e-6)).max(tau);
    let ones = Vector::from_fn(w.len(), |_| 1.0);
    for _ in 0..100 {
        let lifted = {
            let mut v = w.clone();
            v.axpy(shift, &ones);
            v
        };
        if certified_feasible(&lifted, c, tau) {
            return lifted;
        }
        shift *= 1.5;
    }
    // unconditional fallback: a shift large enough to make Diag(w+s) - C
    // diagonally dominant, hence PSD
    let dominant = (0..c.rows())
        .map(|i| c.col(i).iter().map(|v| v.abs()).sum::<f64>() - w[i])
        .fold(0.0f64, f64::max);
    let mut v = w.clone();
    v.axpy(shift.max(dominant), &ones);
    v
}

/// Smallest certified lift of `w` to feasibility: multiply by the smallest
/// factor in `[1, ~2]` that makes `Diag(w) - C` pass a slacked Cholesky
/// check, refined by bisection; if no factor up to 2 works, shift all
/// coordinates up by (an escalation of) `|λ_min(Diag(w) - C)| · (1 + 1e-6)`.
/// Already-feasible input is returned unchanged, as is any input when
/// `λ_max(C) ≤ 0`.
pub fn repair_feasibility(w: &Vector, c: &DenseMatrix) -> Vector {
    let lam = linalg::max_eigenvalue(c, 1e-10).value;
    repair_with(w, c, lam)
}

/// Uniform scaling from the largest eigenvalue: `w = λ_max(C) · 1`, the
/// optimum of the `max_i w_i` cost. The dual value is the final Rayleigh
/// quotient, so the reported gap only reflects estimation error and repair.
pub fn compute_lipschitz(c: &DenseMatrix) -> Result<DsmSolution, DsmError> {
    compute_dsm(c, DsmModel::Lipschitz, &BmParams::default())
}

/// Strictly positive floor applied after repair so the weights are usable
/// as a scaling (`Diag(w)` only grows, so feasibility is preserved).
fn positivity_floor(mut w: Vector, scale: f64) -> Vector {
    let floor = 1e-12 * scale.max(1.0);
    for v in w.as_mut_slice() {
        *v = v.max(floor);
    }
    w
}

/// Full pipeline: solve the chosen model, extract primal weights, repair
/// them to certified feasibility, and report cost, duality gap and
/// feasibility margin.
pub fn compute_dsm(
    c: &DenseMatrix,
    model: DsmModel,
    params: &BmParams,
) -> Result<DsmSolution, DsmError> {
    validate_input(c)?;
    let top = linalg::max_eigenvalue(c, 1e-10);
    let (w0, dual, iterations) = match model {
        DsmModel::Lipschitz => {
            if !top.converged {
                return Err(DsmError::EigenNotConverged { residual: top.residual });
            }
            (Vector::from_fn(c.rows(), |_| top.value), top.value, top.iterations)
        }
        DsmModel::Linear => {
            let run = bcm_run(c, model, params);
            (extract_primal_linear(&run.factor, c), run.final_dual(), run.sweeps_done)
        }
        DsmModel::Quadratic => {
            let run = bcm_run(c, model, params);
            (extract_primal_quadratic(&run.factor), run.final_dual(), run.sweeps_done)
        }
    };
    let w = positivity_floor(repair_with(&w0, c, top.value), top.value);
    let primal_objective = match model {
        DsmModel::Linear => w.iter().sum(),
        DsmModel::Quadratic => 0.5 * w.norm_sq(),
        DsmModel::Lipschitz => w.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    let gap = (primal_objective - dual) / dual.abs().max(1.0);
    let feasibility_margin = linalg::min_eigenvalue(&diag_minus(&w, c)).value;
    Ok(DsmSolution { w, dual_objective: dual, primal_objective, gap, feasibility_margin, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_eigenvalue;

    fn sym(entries: &[&[f64]]) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = entries.iter().map(|r| r.to_vec()).collect();
        let m = DenseMatrix::from_rows(&rows).unwrap();
        assert_eq!(m.asymmetry(), 0.0, "test matrix must be symmetric");
        m
    }

    #[test]
    fn model_parsing_and_display_round_trip() {
        for model in [DsmModel::Linear, DsmModel::Quadratic, DsmModel::Lipschitz] {
            let s = model.to_string();
            assert_eq!(s.parse::<DsmModel>().unwrap(), model);
        }
        assert!(matches!("foo".parse::<DsmModel>(), Err(DsmError::UnknownModel(_))));
        assert_eq!(serde_json::to_string(&DsmModel::Lipschitz).unwrap(), "\"lipschitz\"");
    }

    #[test]
    fn input_validation_flags_bad_matrices() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            compute_dsm(&rect, DsmModel::Linear, &BmParams::default()),
            Err(DsmError::NotSquare { rows: 2, cols: 3 })
        ));
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            compute_dsm(&asym, DsmModel::Quadratic, &BmParams::default()),
            Err(DsmError::Asymmetric { .. })
        ));
    }

    #[test]
    fn identity_under_linear_model_gives_unit_weights() {
        let c = DenseMatrix::identity(4);
        let sol = compute_dsm(&c, DsmModel::Linear, &BmParams::default()).unwrap();
        for &wi in sol.w.iter() {
            assert!((wi - 1.0).abs() <= 1e-9, "weight {wi}");
        }
        assert!(sol.gap.abs() <= 1e-9, "gap {}", sol.gap);
        assert!(sol.feasibility_margin >= -1e-9, "margin {}", sol.feasibility_margin);
    }

    #[test]
    fn diagonal_matrix_under_linear_model_recovers_the_diagonal() {
        let c = DenseMatrix::diagonal(&Vector::from_raw(vec![1.0, 5.0, 3.0]));
        let sol = compute_dsm(&c, DsmModel::Linear, &BmParams::default()).unwrap();
        for (wi, want) in sol.w.iter().zip([1.0, 5.0, 3.0]) {
            assert!((wi - want).abs() <= 1e-8, "weight {wi} vs {want}");
        }
        assert!((sol.primal_objective - 9.0).abs() <= 1e-7);
        assert!((sol.dual_objective - 9.0).abs() <= 1e-7);
        assert!(sol.gap.abs() <= 1e-8);
    }

    #[test]
    fn identity_under_quadratic_model_gives_unit_weights() {
        let c = DenseMatrix::identity(5);
        let sol = compute_dsm(&c, DsmModel::Quadratic, &BmParams::default()).unwrap();
        for &wi in sol.w.iter() {
            assert!((wi - 1.0).abs() <= 1e-9, "weight {wi}");
        }
        assert!((sol.primal_objective - 2.5).abs() <= 1e-9);
        assert!(sol.gap.abs() <= 1e-9);
    }

    #[test]
    fn exchange_matrix_under_both_bcm_models() {
        let c = sym(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let lin = compute_dsm(&c, DsmModel::Linear, &BmParams::default()).unwrap();
        assert!((lin.dual_objective - 2.0).abs() <= 1e-8, "dual {}", lin.dual_objective);
        for &wi in lin.w.iter() {
            assert!((wi - 1.0).abs() <= 1e-4, "weight {wi}");
        }
        assert!(lin.gap.abs() <= 1e-4, "gap {}", lin.gap);
        assert!(lin.feasibility_margin >= -1e-10, "margin {}", lin.feasibility_margin);

        let quad = compute_dsm(&c, DsmModel::Quadratic, &BmParams::default()).unwrap();
        assert!((quad.primal_objective - 1.0).abs() <= 1e-4, "primal {}", quad.primal_objective);
        assert!(quad.gap.abs() <= 1e-4, "gap {}", quad.gap);
    }

    #[test]
    fn lipschitz_model_is_the_top_eigenvalue_everywhere() {
        let c = DenseMatrix::diagonal(&Vector::from_raw(vec![1.0, 5.0, 3.0]));
        let sol = compute_dsm(&c, DsmModel::Lipschitz, &BmParams::default()).unwrap();
        for &wi in sol.w.iter() {
            assert!((wi - 5.0).abs() <= 1e-6, "weight {wi}");
        }
        assert!((sol.dual_objective - 5.0).abs() <= 1e-6);
        assert!(sol.gap.abs() <= 1e-6, "gap {}", sol.gap);
        assert!(sol.feasibility_margin >= -1e-10 * 5.0);
        assert!(sol.iterations > 0);
    }

    #[test]
    fn random_gram_matrix_gets_small_gaps_and_certified_feasibility() {
        // deterministic non-trivial PSD matrix
        let a = DenseMatrix::from_rows(&[
            vec![0.6, -0.3, 0.8, 0.1, -0.9, 0.4],
            vec![-0.2, 0.7, 0.5, -0.6, 0.3, 0.2],
            vec![0.9, 0.1, -0.4, 0.7, 0.2, -0.5],
            vec![0.3, -0.8, 0.2, 0.4, 0.6, 0.7],
        ])
        .unwrap();
        let c = a.gram();
        let lam = max_eigenvalue(&c, 1e-10).value;
        for model in [DsmModel::Linear, DsmModel::Quadratic] {
            let sol = compute_dsm(&c, model, &BmParams::default()).unwrap();
            assert!(sol.gap <= 0.01, "{model} gap {}", sol.gap);
            assert!(sol.gap >= -1e-8, "{model} dual above primal: {}", sol.gap);
            assert!(
                sol.feasibility_margin >= -1e-10 * lam,
                "{model} margin {}",
                sol.feasibility_margin
            );
            assert!(sol.w.iter().all(|&v| v > 0.0), "{model} weights not positive");
        }
    }

    #[test]
    fn repair_leaves_feasible_weights_unchanged() {
        let c = DenseMatrix::identity(3);
        let w = Vector::from_raw(vec![2.0, 3.0, 1.5]);
        let repaired = repair_feasibility(&w, &c);
        assert_eq!(repaired.as_slice(), w.as_slice());
    }

    #[test]
    fn repair_of_zero_weights_adds_the_eigenvalue_shift() {
        let c = DenseMatrix::identity(3);
        let w = Vector::zeros(3);
        let repaired = repair_feasibility(&w, &c);
        for &v in repaired.iter() {
            assert!((v - (1.0 + 1e-6)).abs() <= 1e-9, "got {v}");
        }
    }

    #[test]
    fn repair_with_nonpositive_curvature_is_identity() {
        let c = DenseMatrix::diagonal(&Vector::from_raw(vec![-1.0, -2.0]));
        let w = Vector::zeros(2);
        let repaired = repair_feasibility(&w, &c);
        assert_eq!(repaired.as_slice(), w.as_slice());
    }

    #[test]
    fn repair_scales_slightly_infeasible_weights_minimally() {
        // Diag(w) - C has lambda_min = -0.1 at w = 0.9 * diag(C)
        let c = DenseMatrix::identity(4);
        let w = Vector::from_raw(vec![0.9; 4]);
        let repaired = repair_feasibility(&w, &c);
        let factor = repaired[0] / 0.9;
        assert!(factor >= 1.0 / 0.9 - 1e-6, "still infeasible: {factor}");
        assert!(factor <= 1.0 / 0.9 + 2e-4, "overshoot: {factor}");
        let margin = linalg::min_eigenvalue(&diag_minus(&repaired, &c)).value;
        assert!(margin >= -1e-10, "margin {margin}");
    }

    #[test]
    fn linear_extraction_flags_zero_rows_as_zero_weight() {
        let mut bt = DenseMatrix::zeros(2, 3);
        // rows 0 and 2 are unit vectors, row 1 is identically zero
        bt.set(0, 0, 1.0);
        bt.set(1, 2, 1.0);
        let factor = BmFactor::from_transposed(bt);
        let w = extract_primal_linear(&factor, &DenseMatrix::identity(3));
        assert!((w[0] - 1.0).abs() <= 1e-12);
        assert_eq!(w[1], 0.0, "zero row must be flagged as zero weight");
        assert!((w[2] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn solution_serializes_with_weights() {
        let sol = compute_dsm(&DenseMatrix::identity(2), DsmModel::Lipschitz, &BmParams::default())
            .unwrap();
        let json = serde_json::to_string(&sol).unwrap();
        assert!(json.contains("\"gap\""), "{json}");
        assert!(json.contains("\"w\""), "{json}");
    }
}
