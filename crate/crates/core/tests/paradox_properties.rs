use foelner_core::connes::{build_witness_frame, WitnessConfig};
use foelner_core::group::{GroupDescriptor, Letter};
use foelner_core::paradox::{
    chain_audit, displacement_bound, restriction_norm, seeded_frame, standard_space,
    verify_set_identities, PrefixSet, Verdict,
};
use proptest::prelude::*;

fn f2() -> GroupDescriptor {
    GroupDescriptor::free(2).unwrap()
}

#[test]
fn set_identities_hold_on_every_tested_ball() {
    for r in 2..=7 {
        let rep = verify_set_identities(r).unwrap();
        assert!(rep.disjoint, "r={r}");
        assert!(rep.corrected_cover, "r={r}");
        assert!(rep.realization_agrees, "r={r}");
        assert!(rep.literal_uncovered_is_s_a, "r={r}");
        // Words of length 1..r-1 beginning with a.
        let expected: usize = (0..r - 1).map(|j| 3usize.pow(j as u32)).sum();
        assert_eq!(rep.literal_uncovered, expected);
    }
}

#[test]
fn witness_audit_is_consistent() {
    let frame = build_witness_frame(&WitnessConfig::new(2, 8, 6)).unwrap();
    let rep = chain_audit(&frame, false).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    assert!(rep.max_ratio > 1.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partition_and_complement_sums(seed in any::<u64>(), radius in 2usize..=4, k in 1usize..=6, index in 0usize..4) {
        let (space, _) = standard_space(radius).unwrap();
        let frame = seeded_frame(&space, k.min(space.dim()), seed, index).unwrap();
        let rep = chain_audit(&frame, false).unwrap();
        prop_assert!((rep.partition_sum - 1.0).abs() < 1e-12);
        for v in &rep.variants {
            prop_assert!((v.cover_sum - 1.0).abs() < 1e-12);
            prop_assert!(v.disjoint_sum <= 1.0 + 1e-12);
        }
        prop_assert!(rep.displacements.iter().all(|d| d.within));
        prop_assert!(rep.verdict != Verdict::Contradiction);

        let s = PrefixSet::begins_with(f2(), Letter::new(2, true), radius).unwrap()
            .translated(&f2().parse_word("a1").unwrap()).unwrap();
        for col in frame.columns() {
            let split = restriction_norm(col, &s).unwrap() + restriction_norm(col, &s.complement()).unwrap();
            prop_assert!((split - col.norm_sq()).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_never_exceeds_certified(seed in any::<u64>(), k in 1usize..=8, letter in 0usize..4) {
        let (space, xs) = standard_space(4).unwrap();
        let frame = seeded_frame(&space, k, seed, 0).unwrap();
        let l = f2().letters()[letter];
        let s = PrefixSet::begins_with(f2(), l, 4).unwrap();
        for u in &xs {
            let d = displacement_bound(&frame, u, &s).unwrap();
            prop_assert!(d.measured <= d.certified + 1e-12, "{:?}", d);
        }
    }
}
