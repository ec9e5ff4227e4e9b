//! Objective models.
//!
//! The solvers only interact with an objective through [`Objective`]: values,
//! gradients, a global curvature bound, and exact restricted Hessians on a
//! support. The curvature bound `H` is the matrix in the quadratic upper
//! bound
//!
//! ```text
//!     f(y) <= f(x) + <grad f(x), y - x> + 0.5 * (y - x)^T H (y - x)
//! ```
//!
//! and every scaling handed to a solver is expected to dominate it. The
//! least-squares model uses the 1/2-scaled form `0.5 * ||Ax - b||^2`, so its
//! bound `A^T A` is the exact Hessian and the inequality is tight.

use thiserror::Error;

use crate::linalg::{DenseMatrix, IndexSet, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("matrix has {rows} rows but rhs/labels have {got}")]
    RowMismatch { rows: usize, got: usize },
    #[error("label at row {0} is {1}, expected 0 or 1")]
    BadLabel(usize, f64),
    #[error("model must have at least one column")]
    Empty,
}

pub trait Objective {
    /// Ambient dimension n of the decision variable.
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// Symmetric positive semidefinite `H` dominating the curvature of `f`
    /// everywhere (for quadratics: the exact Hessian).
    fn hessian_bound(&self) -> DenseMatrix;

    /// Exact Hessian at `x` restricted to the rows and columns in `s`,
    /// as an `s.len() x s.len()` matrix. Used by the Newton step.
    fn restricted_hessian(&self, x: &Vector, s: &IndexSet) -> DenseMatrix;

    /// For data-fitting models, the residual norm `||Ax - b||` driving the
    /// solver stopping rule; `None` when the model has no such notion.
    fn residual_norm(&self, _x: &Vector) -> Option<f64> {
        None
    }

    /// Exact constant diagonal curvature for quadratic models, used for
    /// closed-form one-dimensional minimizations; `None` otherwise.
    fn quadratic_curvature_diag(&self) -> Option<Vector> {
        None
    }
}

/// `f(x) = 0.5 * ||A x - b||^2` with gradient `A^T (A x - b)` and Hessian
/// `A^T A`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    a: DenseMatrix,
    b: Vector,
}

impl LeastSquares {
    pub fn new(a: DenseMatrix, b: Vector) -> Result<Self, ObjectiveError> {
        if a.cols() == 0 {
            return Err(ObjectiveError::Empty);
        }
        if a.rows() != b.len() {
            return Err(ObjectiveError::RowMismatch { rows: a.rows(), got: b.len() });
        }
        Ok(LeastSquares { a, b })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    /// `A x - b`.
    pub fn residual(&self, x: &Vector) -> Vector {
        self.a.matvec(x).sub(&self.b)
    }
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.residual(x).norm_sq()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.matvec_t(&self.residual(x))
    }

    fn hessian_bound(&self) -> DenseMatrix {
        self.a.gram()
    }

    fn restricted_hessian(&self, _x: &Vector, s: &IndexSet) -> DenseMatrix {
        let k = s.len();
        let mut h = DenseMatrix::zeros(k, k);
        for (jj, &j) in s.iter().enumerate() {
            for (ii, &i) in s.iter().enumerate().take(jj + 1) {
                let v: f64 = self.a.col(i).iter().zip(self.a.col(j)).map(|(p, q)| p * q).sum();
                h.set(ii, jj, v);
                h.set(jj, ii, v);
            }
        }
        h
    }

    fn residual_norm(&self, x: &Vector) -> Option<f64> {
        Some(self.residual(x).norm())
    }

    fn quadratic_curvature_diag(&self) -> Option<Vector> {
        Some(Vector::from_fn(self.a.cols(), |j| self.a.col_norm_sq(j)))
    }
}

/// Logistic loss with labels in {0, 1}:
/// `f(x) = sum_i log(1 + exp(a_i^T x)) - y_i * a_i^T x`.
/// Its Hessian `A^T P(I - P) A` is dominated by the bound `0.25 * A^T A`.
#[derive(Clone, Debug)]
pub struct Logistic {
    a: DenseMatrix,
    y: Vector,
}

impl Logistic {
    pub fn new(a: DenseMatrix, y: Vector) -> Result<Self, ObjectiveError> {
        if a.cols() == 0 {
            return Err(ObjectiveError::Empty);
        }
        if a.rows() != y.len() {
            return Err(ObjectiveError::RowMismatch { rows: a.rows(), got: y.len() });
        }
        for (i, v) in y.iter().enumerate() {
            if *v != 0.0 && *v != 1.0 {
                return Err(ObjectiveError::BadLabel(i, *v));
            }
        }
        Ok(Logistic { a, y })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn labels(&self) -> &Vector {
        &self.y
    }

    /// Per-row sigmoid probabilities at `x`.
    fn probabilities(&self, x: &Vector) -> Vector {
        let z = self.a.matvec(x);
        Vector::from_fn(z.len(), |i| sigmoid(z[i]))
    }
}

/// `log(1 + exp(t))` without overflow for large `|t|`.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let z = self.a.matvec(x);
        (0..z.len()).map(|i| softplus(z[i]) - self.y[i] * z[i]).sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let p = self.probabilities(x);
        self.a.matvec_t(&p.sub(&self.y))
    }

    fn hessian_bound(&self) -> DenseMatrix {
        let mut g = self.a.gram();
        for j in 0..g.cols() {
            for v in g.col_mut(j) {
                *v *= 0.25;
            }
        }
        g
    }

    fn restricted_hessian(&self, x: &Vector, s: &IndexSet) -> DenseMatrix {
        let p = self.probabilities(x);
        let weights: Vec<f64> = p.iter().map(|pi| pi * (1.0 - pi)).collect();
        let k = s.len();
        let mut h = DenseMatrix::zeros(k, k);
        for (jj, &j) in s.iter().enumerate() {
            for (ii, &i) in s.iter().enumerate().take(jj + 1) {
                let v: f64 = self
                    .a
                    .col(i)
                    .iter()
                    .zip(self.a.col(j))
                    .zip(&weights)
                    .map(|((p, q), w)| w * p * q)
                    .sum();
                h.set(ii, jj, v);
                h.set(jj, ii, v);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ls() -> LeastSquares {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![2.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = Vector::new(vec![1.0, 0.0, -1.0]).unwrap();
        LeastSquares::new(a, b).unwrap()
    }

    #[test]
    fn least_squares_value_and_gradient_by_hand() {
        let m = small_ls();
        let x = Vector::new(vec![1.0, 0.0, 1.0]).unwrap();
        // residual = (0, -1, 4)
        assert_eq!(m.value(&x), 0.5 * 17.0);
        // gradient = A^T r
        assert_eq!(m.gradient(&x).as_slice(), &[8.0, -1.0, 5.0]);
    }

    #[test]
    fn least_squares_zero_at_exact_solution() {
        let m = small_ls();
        // b = A * e1 means value at e1 is ... check a consistent system instead
        let xs = Vector::new(vec![0.3, -0.2, 0.7]).unwrap();
        let b = m.matrix().matvec(&xs);
        let m2 = LeastSquares::new(m.matrix().clone(), b).unwrap();
        assert_eq!(m2.value(&xs), 0.0);
        assert!(m2.gradient(&xs).max_abs() <= 1e-15);
        assert_eq!(m2.residual_norm(&xs), Some(0.0));
    }

    #[test]
    fn hessian_bound_is_gram() {
        let m = small_ls();
        let h = m.hessian_bound();
        assert_eq!(h.get(0, 0), 5.0); // col0 = (1,0,2)
        assert_eq!(h.asymmetry(), 0.0);
        let diag = m.quadratic_curvature_diag().unwrap();
        for j in 0..3 {
            assert_eq!(diag[j], h.get(j, j));
        }
    }

    #[test]
    fn restricted_hessian_matches_submatrix() {
        let m = small_ls();
        let s = IndexSet::new(vec![0, 2]).unwrap();
        let h = m.restricted_hessian(&Vector::zeros(3), &s);
        let full = m.hessian_bound();
        for (ii, &i) in s.iter().enumerate() {
            for (jj, &j) in s.iter().enumerate() {
                assert_eq!(h.get(ii, jj), full.get(i, j));
            }
        }
    }

    #[test]
    fn row_mismatch_rejected() {
        let a = DenseMatrix::zeros(3, 2);
        let b = Vector::zeros(2);
        assert_eq!(
            LeastSquares::new(a, b).unwrap_err(),
            ObjectiveError::RowMismatch { rows: 3, got: 2 }
        );
    }

    #[test]
    fn logistic_value_at_zero_is_m_log2() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 1.0], vec![0.2, 0.2]]).unwrap();
        let y = Vector::new(vec![1.0, 0.0, 1.0]).unwrap();
        let m = Logistic::new(a, y).unwrap();
        let f0 = m.value(&Vector::zeros(2));
        assert!((f0 - 3.0 * std::f64::consts::LN_2).abs() <= 1e-14);
    }

    #[test]
    fn logistic_one_class_gradient_at_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let y = Vector::new(vec![1.0, 1.0]).unwrap();
        let m = Logistic::new(a, y).unwrap();
        // p = 1/2 at x = 0, so gradient = A^T (1/2 - 1) = -0.5 * A^T 1
        let g = m.gradient(&Vector::zeros(2));
        assert_eq!(g.as_slice(), &[-2.0, -3.0]);
    }

    #[test]
    fn logistic_rejects_bad_labels() {
        let a = DenseMatrix::zeros(2, 2);
        let y = Vector::new(vec![0.0, 0.5]).unwrap();
        assert_eq!(Logistic::new(a, y).unwrap_err(), ObjectiveError::BadLabel(1, 0.5));
    }

    #[test]
    fn logistic_softplus_stable_for_large_arguments() {
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() <= 1e-16);
        let a = DenseMatrix::from_rows(&[vec![1000.0]]).unwrap();
        let y = Vector::new(vec![0.0]).unwrap();
        let m = Logistic::new(a, y).unwrap();
        let x = Vector::new(vec![1.0]).unwrap();
        assert!(m.value(&x).is_finite());
        assert!(m.gradient(&x).is_finite());
    }
}
