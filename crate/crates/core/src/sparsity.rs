//! Sparse projection, separable Bregman steps, and stationarity checkers.
//!
//! The cardinality constraint set is `C_s = { x : ||x||_0 <= s }`. Projection
//! onto it keeps the `s` entries of largest magnitude; ties are broken toward
//! the lowest index so the operation is a deterministic function. The
//! checkers grade how far a point is from the three nested optimality
//! notions used by the solvers: support-wise stationarity under a diagonal
//! scaling, Bregman stationarity under a separable kernel, and coordinate-
//! wise minimality.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{IndexSet, Vector};
use crate::objective::Objective;

#[derive(Debug, Error, PartialEq)]
pub enum SparsityError {
    #[error("iterate has {nnz} nonzeros, more than the sparsity budget {s}")]
    TooDense { nnz: usize, s: usize },
    #[error("sparsity budget {s} exceeds dimension {n}")]
    BudgetTooLarge { s: usize, n: usize },
    #[error("kernel weight at {0} must be positive and finite, got {1}")]
    BadWeight(usize, f64),
}

/// A point together with its sparsity budget `s`; the invariant
/// `||x||_0 <= s` is checked at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseIterate {
    x: Vector,
    s: usize,
}

impl SparseIterate {
    pub fn new(x: Vector, s: usize) -> Result<Self, SparsityError> {
        if s > x.len() {
            return Err(SparsityError::BudgetTooLarge { s, n: x.len() });
        }
        let nnz = x.nnz();
        if nnz > s {
            return Err(SparsityError::TooDense { nnz, s });
        }
        Ok(SparseIterate { x, s })
    }

    pub fn zeros(n: usize, s: usize) -> Self {
        assert!(s <= n, "sparsity budget exceeds dimension");
        SparseIterate { x: Vector::zeros(n), s }
    }

    /// Projects an arbitrary vector onto the budget.
    pub fn from_dense(v: &Vector, s: usize) -> Result<Self, SparsityError> {
        if s > v.len() {
            return Err(SparsityError::BudgetTooLarge { s, n: v.len() });
        }
        Ok(SparseIterate { x: project_sparse(v, s), s })
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn support(&self) -> IndexSet {
        self.x.support()
    }

    pub fn into_vector(self) -> Vector {
        self.x
    }
}

/// Indices of the `s` largest values in `scores`, descending, ties broken by
/// lowest index. This single comparator is shared by the projection and the
/// Bregman descent selection so that the two agree on tie handling.
fn top_s_indices(scores: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx.truncate(s.min(scores.len()));
    idx
}

/// Projection onto `C_s`: keeps the `s` entries of largest magnitude
/// (ties toward the lowest index), zeroes the rest. `s = 0` gives the zero
/// vector; `s >= n` returns the input unchanged.
pub fn project_sparse(v: &Vector, s: usize) -> Vector {
    let n = v.len();
    if s >= n {
        return v.clone();
    }
    let scores: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let keep = top_s_indices(&scores, s);
    let mut out = Vector::zeros(n);
    for i in keep {
        out[i] = v[i];
    }
    out
}

/// The `s`-th largest absolute entry of `v` (1-indexed: `s = 1` is the
/// maximum). Entries beyond the number of nonzeros are zero, so the result
/// is 0 whenever `v` has fewer than `s` nonzeros.
pub fn m_s(v: &Vector, s: usize) -> f64 {
    assert!(s >= 1 && s <= v.len(), "m_s: order {s} out of range for dimension {}", v.len());
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    mags[s - 1]
}

/// Outcome of a stationarity check. `max_violation` is 0 exactly at
/// stationary points; `violating_index` names the worst coordinate, and for
/// the coordinate-wise swap test `violating_swap` names the (drop, add)
/// pair realizing the largest improvement.
#[derive(Clone, Debug)]
pub struct StationarityReport {
    pub is_stationary: bool,
    pub max_violation: f64,
    pub violating_index: Option<usize>,
    pub violating_swap: Option<(usize, usize)>,
}

impl StationarityReport {
    fn from_violations(viol: impl IntoIterator<Item = (f64, usize)>, tol: f64) -> Self {
        let mut max_violation = 0.0;
        let mut violating_index = None;
        for (v, i) in viol {
            if v > max_violation {
                max_violation = v;
                violating_index = Some(i);
            }
        }
        StationarityReport {
            is_stationary: max_violation <= tol,
            max_violation,
            violating_index,
            violating_swap: None,
        }
    }
}

/// Support-wise stationarity under a positive diagonal scaling `d`:
/// the gradient must vanish on the support, and off the support it must be
/// dominated by `sqrt(d_j) * M_s(D^{1/2} x)`, the scaled magnitude of the
/// weakest support entry. When `||x||_0 < s` the threshold degenerates to 0
/// and the condition becomes `grad f(x) = 0`.
pub fn check_d_stationary<M: Objective>(
    model: &M,
    x: &SparseIterate,
    d: &Vector,
    tol: f64,
) -> StationarityReport {
    let n = x.dim();
    assert_eq!(d.len(), n, "check_d_stationary: scaling dimension mismatch");
    let g = model.gradient(x.x());
    let support = x.support();
    let scaled = Vector::from_fn(n, |i| d[i].sqrt() * x.x()[i]);
    let m = m_s(&scaled, x.sparsity());
    let viol = (0..n).map(|i| {
        let v = if support.contains(i) {
            g[i].abs()
        } else {
            (g[i].abs() - d[i].sqrt() * m).max(0.0)
        };
        (v, i)
    });
    StationarityReport::from_violations(viol, tol)
}

/// Separable strictly convex kernel `h(x) = sum_i h_i(x_i)` with
/// `h_i(0) = 0`. Minimizers and conjugates fall back to safeguarded
/// one-dimensional Newton solves when no closed form is supplied.
pub trait SeparableKernel {
    fn dim(&self) -> usize;

    /// `h_i(t)`.
    fn value(&self, i: usize, t: f64) -> f64;

    /// `h_i'(t)`, strictly increasing in `t`.
    fn derivative(&self, i: usize, t: f64) -> f64;

    /// `h_i''(t) > 0`.
    fn second_derivative(&self, i: usize, t: f64) -> f64;

    /// Fenchel conjugate `h_i*(y) = sup_t { y t - h_i(t) }`. The default
    /// inverts the derivative numerically; kernels with closed forms should
    /// override.
    fn conjugate(&self, i: usize, y: f64) -> f64 {
        let t = invert_derivative(self, i, y);
        y * t - self.value(i, t)
    }

    /// Minimizer of `phi(t) = a * (t - x) + l * D_{h_i}(t, x)`, which solves
    /// `h_i'(t) = h_i'(x) - a / l`.
    fn argmin_linear_plus_bregman(&self, i: usize, a: f64, l: f64, x: f64) -> f64 {
        invert_derivative(self, i, self.derivative(i, x) - a / l)
    }

    /// Bregman distance `D_{h_i}(t, x) = h_i(t) - h_i(x) - h_i'(x) (t - x)`.
    fn bregman(&self, i: usize, t: f64, x: f64) -> f64 {
        self.value(i, t) - self.value(i, x) - self.derivative(i, x) * (t - x)
    }
}

/// Solves `h_i'(t) = target` by bracketed Newton: the derivative is strictly
/// increasing, so a sign-change bracket always exists and bisection
/// guarantees progress when the Newton update leaves the bracket.
fn invert_derivative<K: SeparableKernel + ?Sized>(k: &K, i: usize, target: f64) -> f64 {
    let f = |t: f64| k.derivative(i, t) - target;
    let f0 = f(0.0);
    if f0 == 0.0 {
        return 0.0;
    }
    // expand a bracket [lo, hi] with f(lo) < 0 < f(hi)
    let (mut lo, mut hi);
    let mut step = 1.0;
    if f0 < 0.0 {
        lo = 0.0;
        hi = step;
        while f(hi) < 0.0 {
            lo = hi;
            step *= 2.0;
            hi = step;
            assert!(step.is_finite(), "invert_derivative: no upper bracket");
        }
    } else {
        hi = 0.0;
        lo = -step;
        while f(lo) > 0.0 {
            hi = lo;
            step *= 2.0;
            lo = -step;
            assert!(step.is_finite(), "invert_derivative: no lower bracket");
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let ft = f(t);
        if ft == 0.0 {
            break;
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d2 = k.second_derivative(i, t);
        let newton = t - ft / d2;
        let next = if d2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-16 * t.abs().max(1e-300) || hi - lo <= f64::EPSILON * (t.abs() + 1.0) {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// Quadratic kernel `h_i(t) = 0.5 * d_i * t^2` with positive weights; the
/// Bregman machinery under this kernel reproduces the diagonally scaled
/// hard-thresholding step exactly.
#[derive(Clone, Debug)]
pub struct QuadraticKernel {
    d: Vector,
}

impl QuadraticKernel {
    pub fn new(d: Vector) -> Result<Self, SparsityError> {
        for (i, v) in d.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(SparsityError::BadWeight(i, *v));
            }
        }
        Ok(QuadraticKernel { d })
    }

    pub fn uniform(n: usize, w: f64) -> Result<Self, SparsityError> {
        Self::new(Vector::from_raw(vec![w; n]))
    }

    pub fn weights(&self) -> &Vector {
        &self.d
    }
}

impl SeparableKernel for QuadraticKernel {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn value(&self, i: usize, t: f64) -> f64 {
        0.5 * self.d[i] * t * t
    }

    fn derivative(&self, i: usize, t: f64) -> f64 {
        self.d[i] * t
    }

    fn second_derivative(&self, i: usize, _t: f64) -> f64 {
        self.d[i]
    }

    fn conjugate(&self, i: usize, y: f64) -> f64 {
        y * y / (2.0 * self.d[i])
    }

    fn argmin_linear_plus_bregman(&self, i: usize, a: f64, l: f64, x: f64) -> f64 {
        x - a / (l * self.d[i])
    }
}

/// Quartic-perturbed kernel `h_i(t) = 0.5 t^2 + 0.25 t^4`, a strictly convex
/// supercoercive kernel without a closed-form conjugate; exercises the
/// numeric inversion paths.
#[derive(Clone, Copy, Debug)]
pub struct QuarticKernel {
    n: usize,
}

impl QuarticKernel {
    pub fn new(n: usize) -> Self {
        QuarticKernel { n }
    }
}

impl SeparableKernel for QuarticKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, _i: usize, t: f64) -> f64 {
        let t2 = t * t;
        0.5 * t2 + 0.25 * t2 * t2
    }

    fn derivative(&self, _i: usize, t: f64) -> f64 {
        t + t * t * t
    }

    fn second_derivative(&self, _i: usize, t: f64) -> f64 {
        1.0 + 3.0 * t * t
    }
}

/// One step of the separable Bregman scheme: minimize the linearized model
/// `<grad f(x), u - x> + l * D_h(u, x)` coordinate-wise, then keep the `s`
/// coordinates with the largest per-coordinate descent
/// `phi_i(0) - phi_i(u_i)` (ties toward the lowest index) and zero the rest.
pub fn separable_bregman_argmin<M: Objective, K: SeparableKernel>(
    model: &M,
    x: &SparseIterate,
    kernel: &K,
    l: f64,
) -> SparseIterate {
    let n = x.dim();
    assert_eq!(kernel.dim(), n, "separable_bregman_argmin: kernel dimension mismatch");
    assert!(l > 0.0, "separable_bregman_argmin: step constant must be positive");
    let g = model.gradient(x.x());
    let mut minimizers = vec![0.0; n];
    let mut descents = vec![0.0; n];
    for i in 0..n {
        let xi = x.x()[i];
        let u = kernel.argmin_linear_plus_bregman(i, g[i], l, xi);
        let phi = |t: f64| g[i] * (t - xi) + l * kernel.bregman(i, t, xi);
        minimizers[i] = u;
        descents[i] = phi(0.0) - phi(u);
    }
    let keep = top_s_indices(&descents, x.sparsity());
    let mut out = Vector::zeros(n);
    for i in keep {
        out[i] = minimizers[i];
    }
    SparseIterate { x: out, s: x.sparsity() }
}

/// Bregman stationarity at step constant `l`: the gradient vanishes on the
/// support, and the conjugate-value threshold test holds between support and
/// off-support coordinates. When the support is not full (fewer than `s`
/// nonzeros) the threshold drops to 0, which forces a zero gradient
/// everywhere. Violations mix gradient units (support part) and conjugate
/// value units (threshold part); both must be below `tol`.
pub fn check_bregman_stationary<M: Objective, K: SeparableKernel>(
    model: &M,
    x: &SparseIterate,
    kernel: &K,
    l: f64,
    tol: f64,
) -> StationarityReport {
    let n = x.dim();
    assert_eq!(kernel.dim(), n, "check_bregman_stationary: kernel dimension mismatch");
    let g = model.gradient(x.x());
    let support = x.support();

    // threshold: weakest conjugate value over the support, padded with the
    // zero-coordinate value 0 when the budget is not exhausted
    let mut threshold = f64::INFINITY;
    for &i in support.iter() {
        let hi = kernel.conjugate(i, kernel.derivative(i, x.x()[i]));
        threshold = threshold.min(hi);
    }
    if support.len() < x.sparsity() || support.is_empty() {
        threshold = threshold.min(0.0);
    }

    let viol = (0..n).map(|j| {
        let v = if support.contains(j) {
            g[j].abs()
        } else {
            let rhs = kernel.conjugate(j, kernel.derivative(j, 0.0) - g[j] / l);
            (rhs - threshold).max(0.0)
        };
        (v, j)
    });
    StationarityReport::from_violations(viol, tol)
}

/// Minimum of `f` along coordinate `j` starting from `base`, returned as the
/// achieved value. Quadratic models use the closed form; everything else is
/// bracketed golden-section to width 1e-10.
fn coordinate_min<M: Objective>(
    model: &M,
    base: &mut Vector,
    f_base: f64,
    g_base: Option<&Vector>,
    curvature: Option<&Vector>,
    j: usize,
) -> f64 {
    if let (Some(g), Some(c)) = (g_base, curvature) {
        let cj = c[j];
        if cj > 1e-300 {
            return f_base - g[j] * g[j] / (2.0 * cj);
        }
        return if g[j] == 0.0 { f_base } else { f64::NEG_INFINITY };
    }
    // golden-section on t around the current entry
    let old = base[j];
    let mut eval = |t: f64| {
        base[j] = old + t;
        let v = model.value(base);
        base[j] = old;
        v
    };
    // expand [a, c] around 0 until the current entry beats both ends, so
    // the interval brackets a local minimizer of the section
    let (mut a, mut c) = (-1.0, 1.0);
    let (mut fa, mut fc) = (eval(a), eval(c));
    let mut width = 1.0;
    for _ in 0..200 {
        if f_base <= fa && f_base <= fc {
            break;
        }
        width *= 2.0;
        if fa < fc {
            a -= width;
            fa = eval(a);
        } else {
            c += width;
            fc = eval(c);
        }
    }
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    while hi - lo > 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    f1.min(f2).min(f_base)
}

/// Coordinate-wise minimality. With spare budget (`||x||_0 < s`) every
/// single-coordinate move must fail to improve `f`; at a full budget every
/// swap (zero one support coordinate, re-optimize any single coordinate of
/// the result) must fail to improve. The report names the best swap found.
pub fn check_cw_minimum<M: Objective>(model: &M, x: &SparseIterate, tol: f64) -> StationarityReport {
    let n = x.dim();
    let f_x = model.value(x.x());
    let curvature = model.quadratic_curvature_diag();
    let support = x.support();
    let full = support.len() == x.sparsity();

    let mut max_violation = 0.0;
    let mut violating_index = None;
    let mut violating_swap = None;

    if !full {
        let mut base = x.x().clone();
        let g = curvature.as_ref().map(|_| model.gradient(&base));
        for j in 0..n {
            let best = coordinate_min(model, &mut base, f_x, g.as_ref(), curvature.as_ref(), j);
            let viol = f_x - best;
            if viol > max_violation {
                max_violation = viol;
                violating_index = Some(j);
                violating_swap = None;
            }
        }
    } else {
        for &i in support.iter() {
            let mut base = x.x().clone();
            base[i] = 0.0;
            let f_base = model.value(&base);
            let g = curvature.as_ref().map(|_| model.gradient(&base));
            for j in 0..n {
                let best = coordinate_min(model, &mut base, f_base, g.as_ref(), curvature.as_ref(), j);
                let viol = f_x - best;
                if viol > max_violation {
                    max_violation = viol;
                    violating_index = Some(j);
                    violating_swap = Some((i, j));
                }
            }
        }
    }

    StationarityReport {
        is_stationary: max_violation <= tol,
        max_violation,
        violating_index,
        violating_swap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::objective::LeastSquares;

    fn vec_of(v: &[f64]) -> Vector {
        Vector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn project_keeps_largest_magnitudes() {
        let v = vec_of(&[3.0, -1.0, 4.0, 1.0, -5.0]);
        let p = project_sparse(&v, 2);
        assert_eq!(p.as_slice(), &[0.0, 0.0, 4.0, 0.0, -5.0]);
    }

    #[test]
    fn project_tie_breaks_to_lowest_index() {
        let v = vec_of(&[2.0, -2.0, 2.0]);
        let p = project_sparse(&v, 2);
        assert_eq!(p.as_slice(), &[2.0, -2.0, 0.0]);
    }

    #[test]
    fn project_edge_budgets() {
        let v = vec_of(&[1.0, -2.0]);
        assert_eq!(project_sparse(&v, 0).as_slice(), &[0.0, 0.0]);
        assert_eq!(project_sparse(&v, 2), v);
        assert_eq!(project_sparse(&v, 5), v);
    }

    #[test]
    fn m_s_orders_magnitudes() {
        let v = vec_of(&[1.0, -3.0, 2.0]);
        assert_eq!(m_s(&v, 1), 3.0);
        assert_eq!(m_s(&v, 2), 2.0);
        assert_eq!(m_s(&v, 3), 1.0);
        // fewer nonzeros than s: padded with zeros
        let w = vec_of(&[0.0, 5.0, 0.0]);
        assert_eq!(m_s(&w, 2), 0.0);
    }

    #[test]
    fn m_s_monotone_in_s() {
        let v = vec_of(&[0.3, -2.2, 1.1, 0.0, 4.0]);
        for s in 1..v.len() {
            assert!(m_s(&v, s) >= m_s(&v, s + 1));
        }
    }

    #[test]
    fn sparse_iterate_validates_budget() {
        let v = vec_of(&[1.0, 2.0, 0.0]);
        assert!(SparseIterate::new(v.clone(), 2).is_ok());
        assert_eq!(
            SparseIterate::new(v, 1).unwrap_err(),
            SparsityError::TooDense { nnz: 2, s: 1 }
        );
        assert_eq!(
            SparseIterate::new(Vector::zeros(2), 3).unwrap_err(),
            SparsityError::BudgetTooLarge { s: 3, n: 2 }
        );
    }

    #[test]
    fn quadratic_kernel_closed_forms() {
        let k = QuadraticKernel::new(vec_of(&[2.0, 0.5])).unwrap();
        assert_eq!(k.value(0, 3.0), 9.0);
        assert_eq!(k.derivative(0, 3.0), 6.0);
        assert_eq!(k.conjugate(0, 4.0), 4.0);
        // argmin of a*(t-x) + l*D_h(t,x) = x - a/(l d)
        assert_eq!(k.argmin_linear_plus_bregman(1, 1.0, 2.0, 0.5), -0.5);
        assert!(QuadraticKernel::new(vec_of(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn kernel_conjugate_identity() {
        // h*(h'(t)) = t h'(t) - h(t) for strictly convex kernels
        let q = QuarticKernel::new(1);
        for &t in &[-2.0, -0.5, 0.0, 0.3, 1.7] {
            let y = q.derivative(0, t);
            let expect = t * y - q.value(0, t);
            let got = q.conjugate(0, y);
            assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs()), "{got} vs {expect}");
        }
        let k = QuadraticKernel::uniform(1, 3.0).unwrap();
        for &t in &[-1.0, 0.4, 2.0] {
            let y = k.derivative(0, t);
            assert!((k.conjugate(0, y) - (t * y - k.value(0, t))).abs() <= 1e-12);
        }
    }

    #[test]
    fn quartic_argmin_solves_optimality() {
        let q = QuarticKernel::new(1);
        let (a, l, x) = (0.7, 2.0, -0.3);
        let u = q.argmin_linear_plus_bregman(0, a, l, x);
        // optimality: a + l*(h'(u) - h'(x)) = 0
        let resid = a + l * (q.derivative(0, u) - q.derivative(0, x));
        assert!(resid.abs() <= 1e-10, "{resid}");
    }

    fn tiny_model() -> LeastSquares {
        // A = I_3, b = (3, 1, 2): f(x) = 0.5||x - b||^2
        LeastSquares::new(DenseMatrix::identity(3), vec_of(&[3.0, 1.0, 2.0])).unwrap()
    }

    #[test]
    fn d_stationary_accepts_projection_fixed_point() {
        // f(x) = 0.5||x - b||^2, s = 1: x* = (3,0,0) is the fixed point
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[3.0, 0.0, 0.0]), 1).unwrap();
        let d = vec_of(&[1.0, 1.0, 1.0]);
        let rep = check_d_stationary(&model, &x, &d, 1e-12);
        assert!(rep.is_stationary, "violation {}", rep.max_violation);
    }

    #[test]
    fn d_stationary_flags_gradient_on_support() {
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[2.0, 0.0, 0.0]), 1).unwrap();
        let d = vec_of(&[1.0, 1.0, 1.0]);
        let rep = check_d_stationary(&model, &x, &d, 1e-8);
        assert!(!rep.is_stationary);
        assert_eq!(rep.violating_index, Some(0));
        assert!((rep.max_violation - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn d_stationary_degenerate_support_requires_zero_gradient() {
        // ||x||_0 < s: stationarity forces grad f = 0 everywhere
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[3.0, 0.0, 0.0]), 2).unwrap();
        let d = vec_of(&[1.0, 1.0, 1.0]);
        let rep = check_d_stationary(&model, &x, &d, 1e-8);
        assert!(!rep.is_stationary);
        // worst off-support gradient is coordinate 2 (|-2| > |-1|)
        assert_eq!(rep.violating_index, Some(2));
    }

    #[test]
    fn bregman_matches_d_stationary_for_quadratic_kernel() {
        let model = tiny_model();
        let d = vec_of(&[1.0, 1.0, 1.0]);
        let k = QuadraticKernel::new(d.clone()).unwrap();
        for (entries, s) in [([3.0, 0.0, 0.0], 1usize), ([0.0, 1.0, 2.0], 2), ([3.0, 0.0, 2.0], 2)] {
            let x = SparseIterate::new(vec_of(&entries), s).unwrap();
            let a = check_d_stationary(&model, &x, &d, 1e-9);
            let b = check_bregman_stationary(&model, &x, &k, 1.0, 1e-9);
            assert_eq!(a.is_stationary, b.is_stationary, "disagree at {entries:?} s={s}");
        }
    }

    #[test]
    fn bregman_at_origin_requires_zero_gradient() {
        let model = tiny_model();
        let k = QuadraticKernel::uniform(3, 1.0).unwrap();
        let x = SparseIterate::zeros(3, 1);
        let rep = check_bregman_stationary(&model, &x, &k, 1.0, 1e-8);
        assert!(!rep.is_stationary);
        // largest conjugate of gradient entries: coordinate 0 (|b_0| = 3)
        assert_eq!(rep.violating_index, Some(0));
    }

    #[test]
    fn separable_argmin_matches_threshold_step_for_quadratic_kernel() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.2, -0.4, 0.0],
            vec![0.3, 1.1, 0.0, 0.5],
            vec![-0.2, 0.0, 0.9, 0.1],
        ])
        .unwrap();
        let b = vec_of(&[1.0, -2.0, 0.5]);
        let model = LeastSquares::new(a, b).unwrap();
        let x = SparseIterate::new(vec_of(&[0.5, 0.0, -1.0, 0.0]), 2).unwrap();
        let weights = vec_of(&[4.0, 5.0, 3.0, 6.0]);
        let k = QuadraticKernel::new(weights.clone()).unwrap();
        let y = separable_bregman_argmin(&model, &x, &k, 1.0);

        // same step written as a scaled hard-thresholding update
        let g = model.gradient(x.x());
        let z = Vector::from_fn(4, |i| {
            weights[i].sqrt() * x.x()[i] - g[i] / weights[i].sqrt()
        });
        let zp = project_sparse(&z, 2);
        for i in 0..4 {
            let expect = if zp[i] == 0.0 { 0.0 } else { zp[i] / weights[i].sqrt() };
            assert!((y.x()[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "coord {i}");
        }
    }

    #[test]
    fn separable_argmin_descents_are_nonnegative() {
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[0.0, 1.0, 0.0]), 1).unwrap();
        let k = QuarticKernel::new(3);
        let y = separable_bregman_argmin(&model, &x, &k, 3.0);
        // surrogate at the output is no worse than staying put
        let g = model.gradient(x.x());
        let surrogate = |v: &Vector| -> f64 {
            (0..3)
                .map(|i| g[i] * (v[i] - x.x()[i]) + 3.0 * k.bregman(i, v[i], x.x()[i]))
                .sum()
        };
        assert!(surrogate(y.x()) <= surrogate(x.x()) + 1e-12);
        assert!(y.x().nnz() <= 1);
    }

    #[test]
    fn cw_minimum_full_budget_swap_detection() {
        // f(x) = 0.5||x - b||^2, b = (3,1,2), s = 1:
        // x = (0,1,0) is d-stationary-like but the swap to (3,0,0) wins.
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[0.0, 1.0, 0.0]), 1).unwrap();
        let rep = check_cw_minimum(&model, &x, 1e-10);
        assert!(!rep.is_stationary);
        assert_eq!(rep.violating_swap, Some((1, 0)));
        // improvement: f(0,1,0) - f(3,0,0) = 6.5 - 2.5 = 4.0
        assert!((rep.max_violation - 4.0).abs() <= 1e-10);
    }

    #[test]
    fn cw_minimum_accepts_global_optimum() {
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[3.0, 0.0, 0.0]), 1).unwrap();
        let rep = check_cw_minimum(&model, &x, 1e-10);
        assert!(rep.is_stationary, "violation {}", rep.max_violation);
    }

    #[test]
    fn cw_minimum_spare_budget_checks_single_moves() {
        let model = tiny_model();
        let x = SparseIterate::new(vec_of(&[3.0, 0.0, 0.0]), 2).unwrap();
        let rep = check_cw_minimum(&model, &x, 1e-10);
        assert!(!rep.is_stationary);
        // adding coordinate 2 improves by 0.5 * 2^2
        assert_eq!(rep.violating_index, Some(2));
        assert!((rep.max_violation - 2.0).abs() <= 1e-10);
        assert_eq!(rep.violating_swap, None);
    }
}
