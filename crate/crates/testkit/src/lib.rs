//! Independent numerical oracles for testing the solver workspace.
//!
//! Everything here recomputes quantities the main crate also produces, but
//! by a different (usually brute-force) route: dense Jacobi eigensolves
//! instead of power iteration, subset enumeration instead of sorting,
//! central finite differences instead of analytic gradients, subgradient
//! descent instead of the low-rank SDP method. Tests then assert the two
//! routes agree. Keep these implementations boring and obviously correct;
//! speed does not matter at oracle sizes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use hardthresh::linalg::{solve_spd, DenseMatrix, Vector};
use hardthresh::objective::Objective;
use hardthresh::LeastSquares;

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations. Intended as an oracle for power-iteration estimates; cost is
/// cubic per sweep, so keep `n` modest.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    assert!(m.is_square(), "jacobi_eigenvalues: matrix must be square");
    let n = m.rows();
    let scale = m.max_abs_entry().max(1e-300);
    assert!(
        m.asymmetry() <= 1e-8 * scale,
        "jacobi_eigenvalues: matrix must be symmetric"
    );
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let g = a.get(i, p);
                    let h = a.get(i, q);
                    let gp = g - s * (h + tau * g);
                    let hp = h + s * (g - tau * h);
                    a.set(i, p, gp);
                    a.set(p, i, gp);
                    a.set(i, q, hp);
                    a.set(q, i, hp);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Smallest and largest eigenvalue from the Jacobi oracle.
pub fn eig_extremes(m: &DenseMatrix) -> (f64, f64) {
    let eigs = jacobi_eigenvalues(m);
    (*eigs.first().unwrap(), *eigs.last().unwrap())
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn central_difference_gradient<O: Objective + ?Sized>(
    model: &O,
    x: &Vector,
    h: f64,
) -> Vector {
    assert!(h > 0.0, "step must be positive");
    Vector::from_fn(model.dim(), |i| {
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        (model.value(&xp) - model.value(&xm)) / (2.0 * h)
    })
}

// ---------------------------------------------------------------------------
// Brute-force subset search
// ---------------------------------------------------------------------------

/// All size-`s` subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=(n - left) {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    assert!(s <= n, "subset size exceeds ground set");
    let mut out = Vec::new();
    if s == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(0, n, s, &mut Vec::with_capacity(s), &mut out);
    out
}

/// Minimizes `score` over all size-`s` supports by enumeration; strict
/// improvement only, so ties resolve to the lexicographically first subset.
pub fn best_support_by<F: FnMut(&[usize]) -> f64>(
    n: usize,
    s: usize,
    mut score: F,
) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in combinations(n, s) {
        let v = score(&subset);
        match &best {
            Some((_, bv)) if v >= *bv => {}
            _ => best = Some((subset, v)),
        }
    }
    best.expect("at least one subset exists")
}

/// Euclidean projection onto the sparsity set by enumeration: the support
/// keeping the most energy (ties to the lexicographically first subset),
/// with the off-support coordinates zeroed.
pub fn brute_force_projection(v: &Vector, s: usize) -> Vector {
    let n = v.len();
    if s >= n {
        return v.clone();
    }
    // minimizing the dropped energy == maximizing the kept energy
    let (support, _) = best_support_by(n, s, |subset| {
        -subset.iter().map(|&i| v[i] * v[i]).sum::<f64>()
    });
    let mut out = Vector::zeros(n);
    for &i in &support {
        out[i] = v[i];
    }
    out
}

// ---------------------------------------------------------------------------
// Restricted least squares
// ---------------------------------------------------------------------------

/// Columns of `a` selected by `support`, as an `m x |support|` matrix.
pub fn select_columns(a: &DenseMatrix, support: &[usize]) -> DenseMatrix {
    let m = a.rows();
    let mut data = Vec::with_capacity(m * support.len());
    for &j in support {
        data.extend_from_slice(a.col(j));
    }
    DenseMatrix::new(m, support.len(), data).expect("column selection is well-formed")
}

/// Exact minimizer of `0.5 ||A x - b||^2` over vectors supported on
/// `support`, via the normal equations on the selected columns. Returns the
/// full-dimensional minimizer and its objective value.
pub fn restricted_least_squares(
    a: &DenseMatrix,
    b: &Vector,
    support: &[usize],
) -> (Vector, f64) {
    let n = a.cols();
    let mut x = Vector::zeros(n);
    if !support.is_empty() {
        let cols = select_columns(a, support);
        let gram = cols.gram();
        let rhs = cols.matvec_t(b);
        let coef = solve_spd(&gram, &rhs).expect("restricted Gram matrix must be nonsingular");
        for (slot, &j) in support.iter().enumerate() {
            x[j] = coef[slot];
        }
    }
    let r = a.matvec(&x).sub(b);
    let f = 0.5 * r.norm_sq();
    (x, f)
}

// ---------------------------------------------------------------------------
// Affine regression
// ---------------------------------------------------------------------------

/// Ordinary least-squares line through `(x_i, y_i)`.
#[derive(Clone, Copy, Debug)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for an exact fit, and defined as 1
    /// when the responses are constant.
    pub r2: f64,
}

pub fn affine_fit(xs: &[f64], ys: &[f64]) -> AffineFit {
    assert_eq!(xs.len(), ys.len(), "affine_fit: length mismatch");
    assert!(xs.len() >= 2, "affine_fit: need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    assert!(sxx > 0.0, "affine_fit: abscissas are constant");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    AffineFit { slope, intercept, r2 }
}

// ---------------------------------------------------------------------------
// Seeded random test data
// ---------------------------------------------------------------------------

/// Standard Gaussian vector from a fixed seed.
pub fn gaussian_vector(n: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::from_fn(n, |_| StandardNormal.sample(&mut rng))
}

/// Standard Gaussian matrix from a fixed seed, filled column by column.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    DenseMatrix::new(rows, cols, data).expect("dimensions match data length")
}

/// Random symmetric positive semidefinite matrix (a Gaussian Gram matrix).
pub fn random_psd(n: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(n + 2, n, seed).gram()
}

/// Least-squares instance with a planted `s`-sparse solution and exact data
/// `b = A x*`, so the restricted optimum on the true support is zero.
/// Returns the model and the planted signal.
pub fn planted_least_squares(
    m: usize,
    n: usize,
    s: usize,
    seed: u64,
) -> (LeastSquares, Vector) {
    assert!(s <= n, "sparsity exceeds dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = {
        let data: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        DenseMatrix::new(m, n, data).expect("dimensions match data length")
    };
    // partial Fisher-Yates: the first s entries of a shuffled 0..n
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + (rand::Rng::gen_range(&mut rng, 0..(n - i) as u64) as usize);
        idx.swap(i, j);
    }
    let mut x = Vector::zeros(n);
    for &i in &idx[..s] {
        x[i] = StandardNormal.sample(&mut rng);
    }
    let b = a.matvec(&x);
    let model = LeastSquares::new(a, b).expect("planted instance is well-formed");
    (model, x)
}

// ---------------------------------------------------------------------------
// Subgradient oracle for the linear-cost scaling SDP
// ---------------------------------------------------------------------------

/// Bottom eigenvalue and a crude unit eigenvector of a symmetric matrix via
/// the Jacobi-diagonalized inverse-iteration-free route: one inverse power
/// step is overkill here, so instead we recover the eigenvector by solving
/// the near-singular system with a tiny regularizer.
fn bottom_eigenpair(m: &DenseMatrix) -> (f64, Vector) {
    let (lo, hi) = eig_extremes(m);
    let n = m.rows();
    // shifted inverse iteration around the bottom eigenvalue
    let spread = (hi - lo).abs().max(1.0);
    let shift = lo - 1e-8 * spread;
    let mut shifted = m.clone();
    for i in 0..n {
        shifted.set(i, i, shifted.get(i, i) - shift);
    }
    let mut v = Vector::from_fn(n, |i| 1.0 + 0.1 * (i as f64));
    v = v.scale(1.0 / v.norm());
    for _ in 0..50 {
        let w = match solve_spd(&shifted, &v) {
            Ok(w) => w,
            Err(_) => break,
        };
        let nw = w.norm();
        if !nw.is_finite() || nw == 0.0 {
            break;
        }
        v = w.scale(1.0 / nw);
    }
    (lo, v)
}

/// Near-optimal weights for `min Σ w_i  s.t.  Diag(w) ⪰ C` by projected
/// subgradient descent with eigenvector-direction restoration, using the
/// Jacobi oracle for every eigensolve. Slow and only for small `n`; serves
/// as an independent reference for the low-rank SDP pipeline.
pub fn linear_dsm_oracle(c: &DenseMatrix, iters: usize) -> Vector {
    assert!(c.is_square(), "linear_dsm_oracle: matrix must be square");
    let n = c.rows();
    let diag_minus = |w: &Vector| {
        let mut m = c.scale_into_negated();
        for i in 0..n {
            m.set(i, i, m.get(i, i) + w[i]);
        }
        m
    };
    let (_, hi) = eig_extremes(c);
    let scale = hi.abs().max(1.0);
    let restore = |w: &Vector| -> Option<Vector> {
        let mut cur = w.clone();
        for _ in 0..80 {
            let (lam, v) = bottom_eigenpair(&diag_minus(&cur));
            if lam >= -1e-12 * scale {
                return Some(cur);
            }
            // lifting the diagonal along the squared eigenvector moves this
            // direction's Rayleigh quotient at rate sum(v_i^4), so the exact
            // lift that zeroes it is closed-form; a 2% overshoot keeps later
            // passes from stalling when the direction re-emerges, and other
            // deficient directions get their own passes
            let d = Vector::from_fn(n, |i| v[i] * v[i]);
            let rate: f64 = v.iter().map(|vi| vi * vi * vi * vi).sum();
            if rate <= 0.0 {
                return None;
            }
            cur.axpy(1.02 * (-lam) / rate, &d);
        }
        let (lam, _) = bottom_eigenpair(&diag_minus(&cur));
        (lam >= -1e-12 * scale).then_some(cur)
    };
    let start = scale * (1.0 + 1e-6);
    let mut w = Vector::from_fn(n, |_| start);
    let mut best = w.clone();
    let mut best_cost: f64 = w.iter().sum();
    let ones = Vector::from_fn(n, |_| 1.0);
    for k in 1..=iters {
        let eta = 0.5 * start / (k as f64).sqrt();
        let mut cand = w.clone();
        cand.axpy(-eta, &ones);
        for v in cand.as_mut_slice() {
            *v = v.max(0.0);
        }
        // candidates whose restoration fails are skipped; the next
        // iteration retries from the incumbent with a smaller step
        if let Some(r) = restore(&cand) {
            w = r;
            let cost: f64 = w.iter().sum();
            if cost < best_cost {
                best_cost = cost;
                best = w.clone();
            }
        }
    }
    best
}

// small extension trait so the oracle above can negate without a public API
// addition on DenseMatrix
trait NegateExt {
    fn scale_into_negated(&self) -> DenseMatrix;
}

impl NegateExt for DenseMatrix {
    fn scale_into_negated(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows(), self.cols());
        for j in 0..self.cols() {
            let src = self.col(j);
            let dst = out.col_mut(j);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = -s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_spectra() {
        let d = DenseMatrix::diagonal(&Vector::from_raw(vec![3.0, -1.0, 2.0]));
        let eigs = jacobi_eigenvalues(&d);
        assert_eq!(eigs, vec![-1.0, 2.0, 3.0]);

        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = jacobi_eigenvalues(&m);
        assert!((eigs[0] - 1.0).abs() <= 1e-12);
        assert!((eigs[1] - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn jacobi_preserves_trace_invariants() {
        let c = random_psd(7, 42);
        let eigs = jacobi_eigenvalues(&c);
        let trace: f64 = (0..7).map(|i| c.get(i, i)).sum();
        let frob_sq: f64 = c.as_slice().iter().map(|v| v * v).sum();
        let sum: f64 = eigs.iter().sum();
        let sum_sq: f64 = eigs.iter().map(|v| v * v).sum();
        assert!((sum - trace).abs() <= 1e-9 * trace.abs().max(1.0));
        assert!((sum_sq - frob_sq).abs() <= 1e-9 * frob_sq.max(1.0));
        assert!(eigs.iter().all(|&v| v >= -1e-9), "psd matrix with negative eigenvalue");
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let subs = combinations(4, 2);
        assert_eq!(
            subs,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn brute_force_projection_keeps_largest_magnitudes() {
        let v = Vector::from_raw(vec![0.5, -3.0, 2.0, -0.1]);
        let p = brute_force_projection(&v, 2);
        assert_eq!(p.as_slice(), &[0.0, -3.0, 2.0, 0.0]);
    }

    #[test]
    fn restricted_least_squares_zeroes_planted_instances() {
        let (model, xstar) = planted_least_squares(12, 20, 4, 3);
        let support: Vec<usize> = xstar.support().as_slice().to_vec();
        let (x, f) = restricted_least_squares(model.matrix(), model.rhs(), &support);
        assert!(f <= 1e-18, "planted optimum should be zero, got {f}");
        for (a, b) in x.iter().zip(xstar.iter()) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn affine_fit_recovers_exact_lines() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 3.0).collect();
        let fit = affine_fit(&xs, &ys);
        assert!((fit.slope + 2.0).abs() <= 1e-12);
        assert!((fit.intercept - 3.0).abs() <= 1e-12);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn affine_fit_r2_decreases_with_noise() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let noise = gaussian_vector(20, 5);
        let ys: Vec<f64> =
            xs.iter().zip(noise.iter()).map(|(x, n)| 0.5 * x + 10.0 * n).collect();
        let fit = affine_fit(&xs, &ys);
        assert!(fit.r2 < 0.999, "strong noise should not fit exactly, r2 = {}", fit.r2);
    }

    #[test]
    fn finite_differences_match_a_quadratic() {
        let (model, _) = planted_least_squares(8, 5, 2, 9);
        let x = gaussian_vector(5, 11);
        let g = model.gradient(&x);
        let fd = central_difference_gradient(&model, &x, 1e-5);
        for i in 0..5 {
            assert!((g[i] - fd[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "coordinate {i}");
        }
    }

    #[test]
    fn linear_dsm_oracle_beats_the_uniform_scaling_on_diagonal_input() {
        let c = DenseMatrix::diagonal(&Vector::from_raw(vec![1.0, 5.0, 3.0]));
        let w = linear_dsm_oracle(&c, 200);
        let cost: f64 = w.iter().sum();
        // optimum is 9 (the diagonal itself); uniform costs 15
        assert!(cost <= 9.0 * 1.02 + 1e-6, "oracle cost {cost}");
        let (lam, _) = eig_extremes(&DenseMatrix::diagonal(&Vector::from_raw(vec![
            w[0] - 1.0,
            w[1] - 5.0,
            w[2] - 3.0,
        ])));
        assert!(lam >= -1e-9, "oracle output infeasible: {lam}");
    }

    #[test]
    fn gaussian_helpers_are_seed_deterministic() {
        assert_eq!(gaussian_vector(6, 1).as_slice(), gaussian_vector(6, 1).as_slice());
        assert_eq!(gaussian_matrix(3, 4, 2).as_slice(), gaussian_matrix(3, 4, 2).as_slice());
        assert_ne!(gaussian_vector(6, 1).as_slice(), gaussian_vector(6, 2).as_slice());
    }
}
