use proptest::prelude::*;

use uniqset::bumps::BumpSpec;
use uniqset::geometry::{bc_entropy, CompactSet, Generation};
use uniqset::spectrum::{ap_norm, NormRequest};
use uniqset::uniqueness::{
    assemble_uniqueness_set, block_mass_certificate, build_schedule, Atoms, ScheduleConfig, TestMeasure,
};

fn generations() -> impl Strategy<Value = Vec<(u128, f64)>> {
    proptest::collection::vec((1u128..60, 0.001f64..0.08), 1..6)
}

fn set_of(pairs: &[(u128, f64)]) -> CompactSet {
    CompactSet::from_pairs(pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_order_is_irrelevant(pairs in generations(), rot in 0usize..6) {
        let mut shuffled = pairs.clone();
        shuffled.rotate_left(rot % pairs.len());
        shuffled.reverse();
        let (a, b) = (set_of(&pairs).component_stats(), set_of(&shuffled).component_stats());
        prop_assert_eq!(a.count, b.count);
        prop_assert!((a.measure - b.measure).abs() < 1e-12);
        prop_assert!((a.entropy - b.entropy).abs() < 1e-11);
    }

    #[test]
    fn sweep_agrees_with_realized_complement(pairs in generations()) {
        let set = set_of(&pairs);
        let u = set.realized_complement().unwrap().clone();
        let stats = set.component_stats();
        prop_assert_eq!(stats.count, u.len() as u64);
        prop_assert!((stats.measure - u.measure()).abs() < 1e-12);
        prop_assert!((stats.entropy - u.entropy()).abs() < 1e-11);
    }

    #[test]
    fn entropy_stays_below_generation_bound(pairs in generations()) {
        prop_assume!(pairs.iter().map(|p| p.1).sum::<f64>() < 0.9);
        let cert = bc_entropy(&set_of(&pairs)).unwrap();
        prop_assert!(cert.holds(), "{} > {}", cert.exact, cert.lemma_bc_bound);
    }

    #[test]
    fn adding_a_generation_never_grows_e(pairs in generations(), n in 1u128..200, delta in 0.001f64..0.1) {
        let set = set_of(&pairs);
        let bigger = set.with_generation(Generation::new(n, delta).unwrap()).unwrap();
        prop_assert!(bigger.measure() <= set.measure() + 1e-13);
        for k in 0..200 {
            let t = (k as f64 + 0.37) / 200.0;
            prop_assert!(!bigger.contains(t) || set.contains(t));
        }
    }

    #[test]
    fn norm_intervals_are_consistent_across_truncations(
        delta in 0.02f64..0.5,
        l in 2u32..7,
        p in 1.0f64..3.0,
        k1 in 1u64..400,
        extra in 1u64..400,
    ) {
        let spec = BumpSpec::phi_delta_l(delta, l).unwrap();
        let k2 = k1 + extra;
        let a = ap_norm(&spec.spectrum(k1), NormRequest::new(p, k1).unwrap()).unwrap();
        let b = ap_norm(&spec.spectrum(k2), NormRequest::new(p, k2).unwrap()).unwrap();
        prop_assert!(a.lower <= b.lower * (1.0 + 1e-14));
        prop_assert!(b.lower <= a.upper * (1.0 + 1e-14));
        prop_assert!(a.lower <= b.upper * (1.0 + 1e-14));
        prop_assert!(a.certified && b.certified);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn holder_step_holds_for_random_atomic_measures(seed in 0u64..1_000_000, count in 1usize..9) {
        let schedule = build_schedule(&ScheduleConfig::main(3.0, 0.1, 6)).unwrap();
        let uset = assemble_uniqueness_set(&schedule).unwrap();
        let atoms = Atoms::sample(&uset.set, count, 0.0, seed).unwrap();
        let cert = block_mass_certificate(&uset, &TestMeasure::Atomic { atoms }, &[1.1, 1.5, 1.9, 2.0]).unwrap();
        prop_assert!(cert.holder_ok());
        prop_assert!(cert.mass_ok());
    }
}
