use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kquad::kernels::{KorobovKernel, MaternKernel};
use kquad::point_sets::{rank1_lattice, sample_iid_uniform, GeneratorVector, PointSet};
use kquad::wce::{lattice_wce_sq, wce_bruteforce, wce_eval, EmbeddingSpec, MeanEmbedding};
use kquad::weights::QuadratureRule;

fn korobov(alpha: u32, d: usize) -> MeanEmbedding<KorobovKernel> {
    MeanEmbedding::new(
        KorobovKernel::new(alpha, d).unwrap(),
        EmbeddingSpec::KorobovClosedForm,
    )
    .unwrap()
}

#[test]
fn lattice_shortcut_matches_double_sum() {
    for (n, z) in [
        (7u64, vec![1]),
        (13, vec![1, 5]),
        (31, vec![1, 12]),
        (61, vec![1, 11]),
    ] {
        for alpha in 1..=3 {
            let gen = GeneratorVector::new(n, z.clone()).unwrap();
            let short = lattice_wce_sq(&gen, alpha).unwrap();
            let rule = QuadratureRule::uniform(rank1_lattice(&gen));
            let full = wce_eval(&korobov(alpha, z.len()), &rule).unwrap().e.powi(2);
            assert!(
                (short - full).abs() <= 1e-10,
                "n={n} alpha={alpha}: {short} vs {full}"
            );
        }
    }
}

#[test]
fn zero_rule_gives_initial_error_for_matern() {
    let emb = MeanEmbedding::new(
        MaternKernel::with_order(2, 1).unwrap(),
        EmbeddingSpec::NumericReference { resolution: 256 },
    )
    .unwrap();
    let rule = QuadratureRule::new(sample_iid_uniform(5, 1, 3).unwrap(), vec![0.0; 5]).unwrap();
    let report = wce_eval(&emb, &rule).unwrap();
    let initial = emb.initial_sq().unwrap();
    assert_eq!(report.radicand(), initial);
    assert_eq!(report.e, initial.sqrt());
}

fn permuted(rule: &QuadratureRule, perm: &[usize]) -> QuadratureRule {
    let d = rule.points().dim();
    let pts: Vec<Vec<f64>> = perm
        .iter()
        .map(|&i| rule.points().point(i).to_vec())
        .collect();
    let w = perm.iter().map(|&i| rule.weights()[i]).collect();
    QuadratureRule::new(PointSet::from_points(d, &pts).unwrap(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fast_and_brute_force_agree(
        n in 1usize..=64,
        d in 1usize..=2,
        alpha in 1u32..=3,
        seed in any::<u64>(),
        w in prop::collection::vec(-1.0f64..2.0, 64),
    ) {
        let points = sample_iid_uniform(n, d, seed).unwrap();
        let weights: Vec<f64> = w[..n].iter().map(|v| v / n as f64).collect();
        let rule = QuadratureRule::new(points, weights).unwrap();
        let emb = korobov(alpha, d);
        let fast = wce_eval(&emb, &rule).unwrap().e;
        let slow = wce_bruteforce(&emb, &rule).unwrap();
        prop_assert!(fast >= 0.0);
        prop_assert!((fast - slow).abs() <= 1e-10 * slow.max(1e-300), "{} vs {}", fast, slow);
    }

    #[test]
    fn permutation_invariant(
        n in 2usize..=30,
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        let points = sample_iid_uniform(n, 2, seed).unwrap();
        let weights: Vec<f64> = (0..n).map(|i| (1.0 + (i % 3) as f64) / (2.0 * n as f64)).collect();
        let rule = QuadratureRule::new(points, weights).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let emb = korobov(2, 2);
        let a = wce_eval(&emb, &rule).unwrap().e;
        let b = wce_eval(&emb, &permuted(&rule, &perm)).unwrap().e;
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }
}
