//! Low-rank block-coordinate ascent for the diagonal-scaling SDP duals.
//!
//! Both duals maximize over PSD matrices `Z` factored as `Z = B Bᵀ` with a
//! thin `B`. The linear-cost dual fixes `Z_ii = 1` and maximizes `<C, Z>`;
//! the quadratic-cost dual leaves the diagonal free and maximizes
//! `<C, Z> - 0.5 * sum_i Z_ii^2`. One block update optimizes a single row
//! of `B` with the rest held fixed, which has a closed form in both cases:
//! normalize the coupling vector (linear), or stretch it by the positive
//! root of a cubic (quadratic).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::linalg::{DenseMatrix, Vector};

use super::DsmModel;

/// Default factor rank: of the order of the square root of the number of
/// constraints, which is enough for these SDPs to admit a low-rank optimum.
pub fn default_rank(n: usize) -> usize {
    ((2 * n) as f64).sqrt().ceil() as usize + 1
}

/// Knobs for a block-coordinate run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BmParams {
    /// Factor rank `k`; `None` picks [`default_rank`].
    pub rank: Option<usize>,
    /// Maximum number of full sweeps over the rows.
    pub sweeps: usize,
    /// Seed for the Gaussian factor initialization.
    pub seed: u64,
    /// Update all rows from the pre-sweep factor (Jacobi) instead of in
    /// place (Gauss-Seidel). Faster per sweep on many cores, but the dual
    /// objective is no longer guaranteed monotone.
    pub parallel: bool,
    /// Early exit once the relative dual change stays below this...
    pub tol: f64,
    /// ...for this many consecutive sweeps.
    pub tol_window: usize,
}

impl Default for BmParams {
    fn default() -> Self {
        BmParams { rank: None, sweeps: 300, seed: 0, parallel: false, tol: 1e-10, tol_window: 5 }
    }
}

/// The factor `B` of `Z = B Bᵀ`, stored transposed (`k x n`, one contiguous
/// column per row of `B`) so block updates touch contiguous memory.
#[derive(Clone, Debug, PartialEq)]
pub struct BmFactor {
    bt: DenseMatrix,
}

impl BmFactor {
    /// Seeded standard Gaussian rows, sampled row by row; unit-normalized
    /// rows when `normalize` is set (the linear dual's constraint).
    pub fn init_gaussian(n: usize, k: usize, seed: u64, normalize: bool) -> Self {
        assert!(n >= 1 && k >= 1, "factor needs at least one row and one column");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bt = DenseMatrix::zeros(k, n);
        for j in 0..n {
            let col = bt.col_mut(j);
            for v in col.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            if normalize {
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for v in col.iter_mut() {
                        *v /= norm;
                    }
                }
            }
        }
        BmFactor { bt }
    }

    pub fn from_transposed(bt: DenseMatrix) -> Self {
        BmFactor { bt }
    }

    /// Number of rows of `B` (the SDP dimension).
    pub fn n(&self) -> usize {
        self.bt.cols()
    }

    /// Factor rank `k`.
    pub fn rank(&self) -> usize {
        self.bt.rows()
    }

    /// Row `j` of `B` as a length-`k` slice.
    pub fn row(&self, j: usize) -> &[f64] {
        self.bt.col(j)
    }

    pub fn row_norm(&self, j: usize) -> f64 {
        self.row(j).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `Z_ij = B_i . B_j` without forming `Z`.
    pub fn z_entry(&self, i: usize, j: usize) -> f64 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum()
    }

    /// The diagonal of `Z = B Bᵀ`.
    pub fn z_diag(&self) -> Vector {
        Vector::from_fn(self.n(), |i| self.row(i).iter().map(|v| v * v).sum())
    }

    pub(crate) fn transposed(&self) -> &DenseMatrix {
        &self.bt
    }
}

/// Coupling vector for row `j`: `g_j = sum_{i != j} C_ij B_i`, the gradient
/// of the dual in row `j` up to the diagonal term.
fn coupling(c: &DenseMatrix, bt: &DenseMatrix, j: usize) -> Vec<f64> {
    let k = bt.rows();
    let cj = c.col(j);
    let mut g = vec![0.0; k];
    for (i, &w) in cj.iter().enumerate() {
        if i == j || w == 0.0 {
            continue;
        }
        let bi = bt.col(i);
        for (gv, &bv) in g.iter_mut().zip(bi) {
            *gv += w * bv;
        }
    }
    g
}

/// New value for row `j` given its coupling vector.
fn updated_row(model: DsmModel, c_jj: f64, g: &[f64], current: &[f64]) -> Option<Vec<f64>> {
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    match model {
        DsmModel::Linear => {
            if gn == 0.0 {
                // any unit row is optimal when the coupling vanishes; keep
                // the current one for determinism
                return None;
            }
            Some(g.iter().map(|v| v / gn).collect())
        }
        DsmModel::Quadratic => {
            if gn == 0.0 {
                // the cubic degenerates to t^3 = c_jj t: stretch the current
                // direction to length sqrt(max(c_jj, 0))
                let t = c_jj.max(0.0).sqrt();
                let rn = current.iter().map(|v| v * v).sum::<f64>().sqrt();
                if rn > 0.0 {
                    return Some(current.iter().map(|v| v * t / rn).collect());
                }
                let mut row = vec![0.0; current.len()];
                row[0] = t;
                return Some(row);
            }
            let t = cubic_positive_root(c_jj, gn);
            Some(g.iter().map(|v| v * t / gn).collect())
        }
        DsmModel::Lipschitz => unreachable!("the Lipschitz model has no factor iteration"),
    }
}

/// One in-place Gauss-Seidel sweep: rows see the updates of the rows before
/// them. This is the variant with the ascent guarantee.
pub(crate) fn sequential_sweep(c: &DenseMatrix, factor: &mut BmFactor, model: DsmModel) {
    let n = factor.n();
    for j in 0..n {
        let g = coupling(c, &factor.bt, j);
        if let Some(row) = updated_row(model, c.get(j, j), &g, factor.bt.col(j)) {
            factor.bt.col_mut(j).copy_from_slice(&row);
        }
    }
}

/// One Jacobi sweep: every coupling vector is computed from the same
/// pre-sweep factor, then all rows are replaced at once. Deterministic
/// regardless of worker count, but not guaranteed monotone.
pub fn bcm_parallel_sweep(c: &DenseMatrix, factor: &BmFactor, model: DsmModel) -> BmFactor {
    let n = factor.n();
    let rows: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let g = coupling(c, &factor.bt, j);
            updated_row(model, c.get(j, j), &g, factor.bt.col(j))
        })
        .collect();
    let mut next = factor.clone();
    for (j, row) in rows.into_iter().enumerate() {
        if let Some(row) = row {
            next.bt.col_mut(j).copy_from_slice(&row);
        }
    }
    next
}

/// Dual objective of the factored iterate under the given model.
pub fn dual_objective(c: &DenseMatrix, factor: &BmFactor, model: DsmModel) -> f64 {
    let n = factor.n();
    let mut inner = 0.0;
    for j in 0..n {
        let g = coupling(c, &factor.bt, j);
        let bj = factor.row(j);
        let cross: f64 = g.iter().zip(bj).map(|(a, b)| a * b).sum();
        let diag_sq: f64 = bj.iter().map(|v| v * v).sum();
        inner += cross + c.get(j, j) * diag_sq;
    }
    match model {
        DsmModel::Linear => inner,
        DsmModel::Quadratic => {
            let penalty: f64 = factor.z_diag().iter().map(|z| 0.5 * z * z).sum();
            inner - penalty
        }
        DsmModel::Lipschitz => unreachable!("the Lipschitz model has no factor iteration"),
    }
}

/// A finished block-coordinate run: the factor, the dual value after each
/// sweep, and how many sweeps actually ran.
#[derive(Clone, Debug)]
pub struct BcmRun {
    pub factor: BmFactor,
    pub dual_values: Vec<f64>,
    pub sweeps_done: usize,
}

impl BcmRun {
    pub fn final_dual(&self) -> f64 {
        *self.dual_values.last().expect("at least one sweep runs")
    }
}

/// Full block-coordinate run for either SDP model.
pub fn bcm_run(c: &DenseMatrix, model: DsmModel, params: &BmParams) -> BcmRun {
    assert!(c.is_square(), "bcm_run: matrix must be square");
    assert!(c.rows() >= 1, "bcm_run: empty matrix");
    assert!(params.sweeps >= 1, "bcm_run: need at least one sweep");
    assert!(params.tol_window >= 1, "bcm_run: tolerance window must be at least 1");
    let n = c.rows();
    let k = params.rank.unwrap_or_else(|| default_rank(n));
    assert!(k >= 1, "bcm_run: rank must be at least 1");
    let normalize = matches!(model, DsmModel::Linear);
    let mut factor = BmFactor::init_gaussian(n, k, params.seed, normalize);
    let mut dual_values = Vec::with_capacity(params.sweeps);
    let mut last = dual_objective(c, &factor, model);
    let mut calm_sweeps = 0;
    let mut sweeps_done = 0;
    for _ in 0..params.sweeps {
        if params.parallel {
            factor = bcm_parallel_sweep(c, &factor, model);
        } else {
            sequential_sweep(c, &mut factor, model);
        }
        sweeps_done += 1;
        let value = dual_objective(c, &factor, model);
        dual_values.push(value);
        if (value - last).abs() <= params.tol * value.abs().max(1.0) {
            calm_sweeps += 1;
            if calm_sweeps >= params.tol_window {
                break;
            }
        } else {
            calm_sweeps = 0;
        }
        last = value;
    }
    BcmRun { factor, dual_values, sweeps_done }
}

/// Sequential block-coordinate ascent for the linear-cost dual.
pub fn bcm_linear(c: &DenseMatrix, k: usize, sweeps: usize, seed: u64) -> BmFactor {
    let params = BmParams { rank: Some(k), sweeps, seed, ..BmParams::default() };
    bcm_run(c, DsmModel::Linear, &params).factor
}

/// Sequential block-coordinate ascent for the quadratic-cost dual.
pub fn bcm_quadratic(c: &DenseMatrix, k: usize, sweeps: usize, seed: u64) -> BmFactor {
    let params = BmParams { rank: Some(k), sweeps, seed, ..BmParams::default() };
    bcm_run(c, DsmModel::Quadratic, &params).factor
}

/// The unique positive root of `t^3 - c*t - g = 0` for `g > 0` (the
/// polynomial is negative at 0 and crosses once). For `g = 0` the equation
/// degenerates and the root is `sqrt(max(c, 0))`. Solved by safeguarded
/// Newton inside an expanding bracket; the residual lands at roundoff
/// (about `1e-12 * max(1, g)` or better).
pub fn cubic_positive_root(c: f64, g: f64) -> f64 {
    assert!(g >= 0.0 && g.is_finite(), "cubic_positive_root: coupling norm must be nonnegative");
    assert!(c.is_finite(), "cubic_positive_root: diagonal must be finite");
    if g == 0.0 {
        return c.max(0.0).sqrt();
    }
    let p = |t: f64| t * t * t - c * t - g;
    // p is increasing past sqrt(max(c,0)/3); this start is at or near the
    // root and p(t0) >= 0 after at most a few doublings
    let mut hi = (1.5 * c.max(0.0).sqrt()).max(g.cbrt()).max(1.0);
    while p(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut t = hi;
    for _ in 0..100 {
        let pt = p(t);
        if pt == 0.0 {
            break;
        }
        if pt < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let dp = 3.0 * t * t - c;
        let newton = t - pt / dp;
        let next = if dp > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-16 * t.max(1.0) {
            t = next;
            break;
        }
        t = next;
    }
    t
}
