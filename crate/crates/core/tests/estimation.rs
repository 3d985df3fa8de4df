use nalgebra::DMatrix;
use p0dp::estimation::{
    approx_inverse_s, debias_sequence, fit_ldp, jacobian_v, residual_f, solve_p0, DenseMatrix, FailureReason,
    SolverOptions,
};
use p0dp::experiments::median;
use p0dp::graph::DirectedGraph;
use p0dp::model::{linear_parameters, sample_graph, Theta};
use p0dp::privacy::{edge_flip, PrivacyBudget};
use p0dp::seed::stream_rng;
use rayon::prelude::*;

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn s_approximates_inverse_at_n100() {
    let v = jacobian_v(&Theta::zeros(100), 1.0).unwrap();
    let s = approx_inverse_s(&v).unwrap();
    let sv = s.matmul(&v).unwrap();
    let dev = sv.max_abs_deviation_from_identity();
    assert!(dev <= 0.02, "max |SV - I| = {dev}");
    let inv = to_nalgebra(&v).try_inverse().unwrap();
    let gap = max_abs_diff(&inv, &to_nalgebra(&s));
    // Entries of S are O(1/n); the gap to the true inverse is O(1/n^2).
    assert!(gap <= 1e-3, "max |S - V^-1| = {gap}");
}

#[test]
fn s_against_dense_inverse_at_n3() {
    // The smallest size with an invertible Jacobian.
    let mut worst: f64 = 0.0;
    for theta in [
        Theta::zeros(3),
        Theta::new(vec![0.4, -0.2, 0.1], vec![0.3, -0.5, 0.0]).unwrap(),
        Theta::new(vec![-1.0, 0.5, 0.8], vec![0.2, 0.9, 0.0]).unwrap(),
    ] {
        let v = jacobian_v(&theta, 1.0).unwrap();
        let inv = to_nalgebra(&v).try_inverse().unwrap();
        let s = to_nalgebra(&approx_inverse_s(&v).unwrap());
        let scale = inv.abs().max();
        worst = worst.max(max_abs_diff(&inv, &s) / scale);
    }
    // Measured 0.333: at n=3 the O(1/n) error is a third of the inverse's scale.
    assert!(worst < 0.35, "{worst}");
}

#[test]
fn debiasing_is_unbiased() {
    let n = 40;
    let theta = linear_parameters(n, 1.0).unwrap();
    let g = sample_graph(&theta, &mut stream_rng(31, &[]));
    let d = g.bi_degree_sequence().to_f64_vec();
    let budget = PrivacyBudget::new(1.5).unwrap();
    let p = budget.keep_probability();
    let reps = 4000;
    let sums: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let f = edge_flip(&g, &budget, &mut stream_rng(32, &[r as u64])).bi_degree_sequence().to_f64_vec();
            debias_sequence(&f, p).unwrap()
        })
        .collect();
    // Var(d'_i) <= (n-1)/4, scaled by 1/(2p-1)^2 after debiasing.
    let sd = ((n - 1) as f64 / 4.0).sqrt() / (2.0 * p - 1.0);
    let se = sd / (reps as f64).sqrt();
    for k in 0..2 * n {
        let m = sums.iter().map(|s| s[k]).sum::<f64>() / reps as f64;
        assert!((m - d[k]).abs() < 3.0 * se, "coordinate {k}: {m} vs {}", d[k]);
    }
}

#[test]
fn boundary_graph_has_no_estimate() {
    let g = DirectedGraph::from_edges(3, [(0, 1), (0, 2), (1, 2), (2, 0)]).unwrap();
    let r = solve_p0(&g.bi_degree_sequence().to_f64_vec(), 1.0, &SolverOptions::default()).unwrap();
    assert_eq!(r.failure_reason, FailureReason::DegreeOutOfRange);
}

#[test]
fn converged_fits_satisfy_the_residual_bound() {
    let opts = SolverOptions::default();
    for k in 0..20u64 {
        let theta = linear_parameters(30, 0.3 * (k % 4) as f64).unwrap();
        let mut rng = stream_rng(33, &[k]);
        let g = sample_graph(&theta, &mut rng);
        let budget = PrivacyBudget::new(3.0).unwrap();
        let d = edge_flip(&g, &budget, &mut rng).bi_degree_sequence();
        let fit = fit_ldp(&d, &budget, &opts).unwrap();
        if fit.converged {
            let f = residual_f(&fit.theta_hat, &d.to_f64_vec(), budget.keep_probability()).unwrap();
            assert!(f.iter().all(|x| x.abs() <= opts.tolerance));
            assert_eq!(fit.theta_hat.beta[29], 0.0);
            assert_eq!(fit.failure_reason, FailureReason::None);
        }
    }
}

#[test]
fn error_shrinks_from_n50_to_n100() {
    let budget = PrivacyBudget::new(2.0).unwrap();
    let med = |n: usize| {
        let theta = linear_parameters(n, 0.0).unwrap();
        let errs: Vec<f64> = (0..100u64)
            .into_par_iter()
            .filter_map(|r| {
                let mut rng = stream_rng(34, &[n as u64, r]);
                let g = sample_graph(&theta, &mut rng);
                let d = edge_flip(&g, &budget, &mut rng).bi_degree_sequence();
                let fit = fit_ldp(&d, &budget, &SolverOptions::default()).unwrap();
                fit.converged.then(|| fit.theta_hat.linf_distance(&theta))
            })
            .collect();
        median(&errs)
    };
    let (a, b) = (med(50), med(100));
    assert!(b < a, "median error n=100 {b} vs n=50 {a}");
}
