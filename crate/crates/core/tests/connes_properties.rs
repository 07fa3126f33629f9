use foelner_core::connes::{
    anneal_projection, build_witness_frame, candidate_pool, dense_setup, evaluate_q,
    formula_epsilon, pool_estimate, standard_unitaries, witness_certificate,
    ProjectionSearchConfig, WitnessConfig,
};
use foelner_core::group::GroupDescriptor;
use foelner_core::l2::{compress, GroupAlgebraElement};
use foelner_core::linalg::SmallMatrix;
use proptest::prelude::*;

fn subdiagonal(n: u32, k: usize) -> SmallMatrix {
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|q| {
            (0..k)
                .map(|p| if q == p + 1 { 1.0 / n as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    SmallMatrix::from_real_rows(&rows).unwrap()
}

#[test]
fn witness_frames_are_orthonormal_with_subdiagonal_compressions() {
    for n in 2..=5 {
        for k in [1, 2, 3, 5, 8, 13, 21, 32] {
            for t in [1, 2, 4, 8] {
                let w = build_witness_frame(&WitnessConfig::new(n, k, t)).unwrap();
                let gram = w.gram().unwrap();
                assert!(
                    gram.max_abs_diff(&SmallMatrix::identity(k)) < 1e-10,
                    "n={n} k={k} T={t}"
                );
                for u in standard_unitaries(w.descriptor()) {
                    let a = compress(&u, &w).unwrap();
                    assert!(
                        a.max_abs_diff(&subdiagonal(n, k)) < 1e-12,
                        "n={n} k={k} T={t}"
                    );
                }
            }
        }
    }
}

#[test]
fn certificates_follow_formula_in_k_and_n() {
    for n in 2..=4 {
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let c = witness_certificate(&WitnessConfig::new(n, k, 2)).unwrap();
            assert!((c.certified_epsilon - formula_epsilon(n, k)).abs() < 1e-9);
            assert!(c.certified_epsilon < prev);
            prev = c.certified_epsilon;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn q_verdict_monotone_in_epsilon_and_antitone_in_x(seed in any::<u64>(), k in 1usize..=5, eps in 0.0f64..1.5) {
        let d = GroupDescriptor::free(2).unwrap();
        let all: Vec<GroupAlgebraElement> = ["a1", "a2", "A1"]
            .iter()
            .map(|s| GroupAlgebraElement::unitary(&d.parse_word(s).unwrap()))
            .collect();
        let (space, _) = dense_setup(&all, 3).unwrap();
        let frame = candidate_pool(&space, k, 1, seed).unwrap().pop().unwrap().to_frame(&space).unwrap();
        let small = evaluate_q(&all[..1], &frame, eps).unwrap();
        let large = evaluate_q(&all, &frame, eps).unwrap();
        prop_assert!(!large.verdict || small.verdict);
        let looser = evaluate_q(&all, &frame, eps + 0.1).unwrap();
        prop_assert!(!large.verdict || looser.verdict);
    }

    #[test]
    fn pool_estimates_are_monotone(seed in any::<u64>(), k in 1usize..=4) {
        let d = GroupDescriptor::free(2).unwrap();
        let xs = standard_unitaries(d);
        let (space, us) = dense_setup(&xs, 3).unwrap();
        let pool = candidate_pool(&space, k, 5, seed).unwrap();
        prop_assert!(pool_estimate(&pool, &us[..1]) <= pool_estimate(&pool, &us));
    }
}

#[test]
fn anneal_history_never_increases() {
    let xs = standard_unitaries(GroupDescriptor::free(2).unwrap());
    for seed in 0..4 {
        let cfg = ProjectionSearchConfig::new(xs.clone(), 4, 4, seed, 2_000);
        let r = anneal_projection(&cfg).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].best <= w[0].best));
        assert!(r.history.first().unwrap().best >= r.report.objective - 1e-10);
    }
}
