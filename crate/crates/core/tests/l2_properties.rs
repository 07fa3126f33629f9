use foelner_core::connes::{dense_setup, random_frame};
use foelner_core::group::{GroupDescriptor, Word};
use foelner_core::l2::{
    commutator_ratio, compress, trace_defect, Frame, GroupAlgebraElement, L2Vec,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f2() -> GroupDescriptor {
    GroupDescriptor::free(2).unwrap()
}

fn unitaries() -> Vec<GroupAlgebraElement> {
    ["a1", "a2", "A1", "A2"]
        .iter()
        .map(|s| GroupAlgebraElement::unitary(&f2().parse_word(s).unwrap()))
        .collect()
}

fn frame(seed: u64, radius: usize, k: usize, nnz: usize) -> Frame {
    let (space, _) = dense_setup(&unitaries(), radius).unwrap();
    let k = k.min(space.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_frame(&space, k, nnz, &mut rng)
        .unwrap()
        .to_frame(&space)
        .unwrap()
}

fn word_strategy() -> impl Strategy<Value = Word> {
    prop::collection::vec(0usize..4, 0..4).prop_map(|idx| {
        let letters = f2().letters();
        f2().reduce(&idx.iter().map(|&i| letters[i]).collect::<Vec<_>>())
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_is_isometric_and_composes(
        g in word_strategy(),
        h in word_strategy(),
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17),
    ) {
        let ball = f2().ball(2);
        let v = L2Vec::from_terms(
            f2(),
            ball.elements().iter().zip(&amps).map(|(w, &(re, im))| (w.clone(), Complex64::new(re, im))),
        ).unwrap();
        let lg = GroupAlgebraElement::unitary(&g);
        let lh = GroupAlgebraElement::unitary(&h);
        let lgh = GroupAlgebraElement::unitary(&g.multiply(&h).unwrap());
        let once = lh.apply(&v, 10).unwrap();
        prop_assert!((once.norm() - v.norm()).abs() < 1e-12);
        prop_assert_eq!(lg.apply(&once, 10).unwrap(), lgh.apply(&v, 10).unwrap());
    }

    #[test]
    fn hs_identity_and_ranges(seed in any::<u64>(), radius in 2usize..=4, k in 1usize..=6, nnz in 1usize..40) {
        let e = frame(seed, radius, k, nnz);
        for u in unitaries() {
            let r = commutator_ratio(&u, &e).unwrap();
            prop_assert!(r.discrepancy() < 1e-9, "{:?}", r);
            prop_assert!(r.closed_form >= 0.0 && r.closed_form <= 2f64.sqrt() + 1e-12);
            let d = trace_defect(&u, &e).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            let a = compress(&u, &e).unwrap();
            prop_assert!(a.tau_norm_sq() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn inverse_compresses_to_adjoint(seed in any::<u64>(), k in 1usize..=5) {
        let e = frame(seed, 3, k, 200);
        let us = unitaries();
        for (u, u_inv) in [(&us[0], &us[2]), (&us[1], &us[3])] {
            let a = compress(u, &e).unwrap();
            let b = compress(u_inv, &e).unwrap();
            prop_assert!(b.max_abs_diff(&a.adjoint()) < 1e-10);
        }
    }
}

#[test]
fn identity_compression_is_unitary() {
    let e = Frame::new(vec![L2Vec::delta(&f2().identity())], 1).unwrap();
    let a = compress(&GroupAlgebraElement::unitary(&f2().identity()), &e).unwrap();
    assert_eq!(a.tau_norm_sq(), 1.0);
    assert!(a.is_unitary(1e-15));
}
