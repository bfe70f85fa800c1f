use nalgebra::DVector;
use proptest::prelude::*;

use kquad::kernels::{KorobovKernel, MaternKernel};
use kquad::point_sets::sample_iid_uniform;
use kquad::wce::{wce_eval, EmbeddingSpec, MeanEmbedding};
use kquad::weights::{
    bq_weights_constrained, bq_weights_exact, gram_matrix, sq_norm, uniform_weights, QuadratureRule,
};
use kquad::Execution;

fn korobov(alpha: u32) -> MeanEmbedding<KorobovKernel> {
    MeanEmbedding::new(
        KorobovKernel::new(alpha, 1).unwrap(),
        EmbeddingSpec::KorobovClosedForm,
    )
    .unwrap()
}

#[test]
fn bq_never_worse_than_uniform() {
    let mut case = 0u64;
    for n in [8usize, 32] {
        for alpha in 1..=3 {
            for rep in 0..4 {
                if case == 20 {
                    break;
                }
                let emb = korobov(alpha);
                let points = sample_iid_uniform(n, 1, 1000 + 7 * case + rep).unwrap();
                let gram = gram_matrix(emb.kernel(), &points, Execution::Sequential);
                let w = bq_weights_exact(&gram, &DVector::from_element(n, 1.0)).unwrap();
                let bq = wce_eval(
                    &emb,
                    &QuadratureRule::new(points.clone(), w.weights).unwrap(),
                )
                .unwrap()
                .e;
                let uni = wce_eval(&emb, &QuadratureRule::uniform(points)).unwrap().e;
                assert!(bq <= uni + 1e-12, "n={n} alpha={alpha}: {bq} > {uni}");
                case += 1;
            }
        }
    }
    assert_eq!(case, 20);
}

#[test]
fn first_order_condition_without_jitter() {
    let emb = MeanEmbedding::new(
        MaternKernel::with_order(2, 1).unwrap(),
        EmbeddingSpec::NumericReference { resolution: 256 },
    )
    .unwrap();
    for seed in 0..10 {
        let points = sample_iid_uniform(12, 1, seed).unwrap();
        let gram = gram_matrix(emb.kernel(), &points, Execution::Sequential);
        let kmean = DVector::from_vec(points.iter().map(|p| emb.mean_at(p).unwrap()).collect());
        let report = bq_weights_exact(&gram, &kmean).unwrap();
        if report.jitter_used == 0.0 {
            let w = DVector::from_vec(report.weights.clone());
            let residual = (&gram * &w - &kmean).norm();
            assert!(residual <= 1e-8 * kmean.norm(), "seed {seed}: {residual}");
        }
    }
}

#[test]
fn feasible_exact_solution_is_returned_unchanged() {
    let emb = korobov(1);
    let points = sample_iid_uniform(16, 1, 5).unwrap();
    let gram = gram_matrix(emb.kernel(), &points, Execution::Sequential);
    let kmean = DVector::from_element(16, 1.0);
    let exact = bq_weights_exact(&gram, &kmean).unwrap();
    let loose = bq_weights_constrained(&gram, &kmean, exact.weight_sq_norm * 10.0).unwrap();
    assert_eq!(loose.weights, exact.weights);
    assert_eq!(loose.lambda, 0.0);
}

#[test]
fn uniform_square_norm() {
    for n in [1usize, 2, 16, 17, 1024, 1031] {
        let w = uniform_weights(n);
        let rel = (sq_norm(&w) * n as f64 - 1.0).abs();
        assert!(rel <= n as f64 * f64::EPSILON, "n={n}: {rel}");
    }
    for n in [1usize, 2, 16, 1024] {
        assert_eq!(sq_norm(&uniform_weights(n)), 1.0 / n as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn constrained_weights_are_feasible(
        n in 4usize..40,
        alpha in 1u32..=3,
        seed in any::<u64>(),
        scale in 0.05f64..4.0,
    ) {
        let emb = korobov(alpha);
        let points = sample_iid_uniform(n, 1, seed).unwrap();
        let gram = gram_matrix(emb.kernel(), &points, Execution::Sequential);
        let kmean = DVector::from_element(n, 1.0);
        let bound = scale / n as f64;
        let report = bq_weights_constrained(&gram, &kmean, bound).unwrap();
        prop_assert!(report.weight_sq_norm <= bound * (1.0 + 1e-6));
        let recomputed = sq_norm(&report.weights);
        prop_assert!((recomputed - report.weight_sq_norm).abs() <= 1e-12 * recomputed);
        let exact = bq_weights_exact(&gram, &kmean).unwrap();
        let wce = |w: Vec<f64>| wce_eval(&emb, &QuadratureRule::new(points.clone(), w).unwrap()).unwrap().e;
        prop_assert!(wce(report.weights) >= wce(exact.weights) - 1e-12);
    }
}
