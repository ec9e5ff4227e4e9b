//! Sandwiches the low-rank scaling-matrix solver between independent
//! bounds: the factored dual value can never exceed the cost of any
//! feasible diagonal (weak duality), an independent projected-subgradient
//! reference provides such a feasible diagonal, and a dense eigensolver
//! recomputes every feasibility margin from scratch.

use hardthresh::dsm::{compute_dsm, compute_lipschitz, repair_feasibility, BmParams, DsmModel};
use hardthresh::{DenseMatrix, Vector};
use hardthresh_testkit::{eig_extremes, jacobi_eigenvalues, linear_dsm_oracle, random_psd};

fn dense_margin(w: &Vector, c: &DenseMatrix) -> f64 {
    let n = c.rows();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, if i == j { w[i] - c.get(i, j) } else { -c.get(i, j) });
        }
    }
    jacobi_eigenvalues(&m)[0]
}

#[test]
fn linear_model_sits_between_dual_and_reference_costs() {
    for &n in &[4usize, 6, 8, 10] {
        for seed in 0..3u64 {
            let c = random_psd(n, 10 * n as u64 + seed);
            let (_, lam_max) = eig_extremes(&c);
            let sol = compute_dsm(&c, DsmModel::Linear, &BmParams::default()).unwrap();
            let reference = linear_dsm_oracle(&c, 250);
            let ref_cost: f64 = reference.iter().sum();
            let label = format!("n={n} seed={seed}");

            // weak duality: the dual value lower-bounds every feasible cost
            assert!(
                sol.dual_objective <= ref_cost * (1.0 + 1e-6) + 1e-9,
                "{label}: dual {} exceeds reference cost {ref_cost}",
                sol.dual_objective
            );
            // the returned diagonal is itself feasible, so its cost is an
            // upper bound; near-optimality means it lands close to the dual
            assert!(
                sol.primal_objective >= sol.dual_objective - 1e-8 * (1.0 + sol.dual_objective.abs()),
                "{label}: primal below dual"
            );
            assert!(
                sol.primal_objective <= ref_cost * 1.05 + 1e-9,
                "{label}: primal {} not close to reference {ref_cost}",
                sol.primal_objective
            );
            assert!(sol.gap <= 0.01, "{label}: gap {}", sol.gap);
            assert!(
                dense_margin(&sol.w, &c) >= -1e-10 * lam_max.max(1.0),
                "{label}: infeasible output"
            );
        }
    }
}

#[test]
fn quadratic_model_closes_its_gap_and_stays_feasible() {
    for &n in &[4usize, 7, 10] {
        for seed in 0..3u64 {
            let c = random_psd(n, 31 * n as u64 + seed);
            let (_, lam_max) = eig_extremes(&c);
            let sol = compute_dsm(&c, DsmModel::Quadratic, &BmParams::default()).unwrap();
            let label = format!("n={n} seed={seed}");
            assert!(sol.gap <= 0.01, "{label}: gap {}", sol.gap);
            assert!(
                sol.primal_objective >= sol.dual_objective - 1e-8 * (1.0 + sol.dual_objective.abs()),
                "{label}: primal below dual"
            );
            assert!(
                dense_margin(&sol.w, &c) >= -1e-10 * lam_max.max(1.0),
                "{label}: infeasible output"
            );
            assert!(sol.w.iter().all(|&v| v > 0.0), "{label}: nonpositive weight");
        }
    }
}

#[test]
fn uniform_model_matches_the_dense_top_eigenvalue() {
    for seed in 0..4u64 {
        let c = random_psd(8, 900 + seed);
        let eigs = jacobi_eigenvalues(&c);
        let lam_max = *eigs.last().unwrap();
        let sol = compute_lipschitz(&c).unwrap();
        for &wi in sol.w.iter() {
            assert!(
                (wi - lam_max).abs() <= 1e-8 * lam_max.max(1.0),
                "seed {seed}: weight {wi} vs top eigenvalue {lam_max}"
            );
        }
        assert!(dense_margin(&sol.w, &c) >= -1e-9 * lam_max.max(1.0), "seed {seed}");
    }
}

#[test]
fn repair_restores_feasibility_without_shrinking_weights() {
    for seed in 0..6u64 {
        let c = random_psd(7, 5000 + seed);
        let (_, lam_max) = eig_extremes(&c);
        let feasible = compute_dsm(&c, DsmModel::Linear, &BmParams::default()).unwrap().w;
        // shrink to force infeasibility, then demand the repair recovers it
        let broken = Vector::from_fn(7, |i| 0.9 * feasible[i]);
        let repaired = repair_feasibility(&broken, &c);
        assert!(
            dense_margin(&repaired, &c) >= -1e-9 * lam_max.max(1.0),
            "seed {seed}: repair left the diagonal infeasible"
        );
        for i in 0..7 {
            assert!(
                repaired[i] >= broken[i] * (1.0 - 1e-12),
                "seed {seed}: repair shrank coordinate {i}"
            );
        }
    }
}
