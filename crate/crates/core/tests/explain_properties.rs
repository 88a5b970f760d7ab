mod common;

use abduce::explain::{audit, ExplainError, ExplainOptions, Explainer, Minimality, Status};
use abduce::model::Cube;
use abduce::oracle::{reference, Oracle};
use common::{case, sub_cube, CAP};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn entails(c: &common::Case, cube: &Cube) -> bool {
    reference::brute_force_entails(&c.ensemble, &c.space, cube, c.target, CAP).unwrap()
}

/// Both explanation invariants, checked with the exhaustive reference only.
fn is_prime_implicant(c: &common::Case, cube: &Cube) -> bool {
    cube.is_subset_of(&c.instance)
        && entails(c, cube)
        && cube.features().into_iter().all(|f| !entails(c, &cube.without(f)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn subset_and_cardinality_minimal(seed in any::<u64>(), mixed in any::<bool>(), shrink in any::<bool>()) {
        let c = case(seed, mixed);
        let o = Oracle::new(&c.ensemble, &c.space);
        let x = Explainer::with_options(&o, ExplainOptions { shrink_correction_sets: shrink, ..Default::default() });
        let subset = x.subset_minimal(&c.instance, c.target).unwrap();
        let card = x.cardinality_minimal(&c.instance, c.target).unwrap();
        prop_assert!(is_prime_implicant(&c, &subset.literals));
        prop_assert!(is_prime_implicant(&c, &card.literals));
        let best = reference::brute_force_minimum_explanation(&c.ensemble, &c.space, &c.instance, c.target, CAP).unwrap();
        prop_assert_eq!(card.len(), best.len());
        prop_assert!(card.len() <= subset.len());
    }

    #[test]
    fn any_scan_order_gives_a_prime_implicant(seed in any::<u64>()) {
        let mut c = case(seed, true);
        let o = Oracle::new(&c.ensemble, &c.space);
        let mut order = c.instance.features();
        order.shuffle(&mut c.rng);
        let x = Explainer::with_options(&o, ExplainOptions { seed_order: Some(order), ..Default::default() });
        let e = x.subset_minimal(&c.instance, c.target).unwrap();
        prop_assert!(is_prime_implicant(&c, &e.literals));
    }

    #[test]
    fn repair_and_refine_results_are_prime_implicants(seed in any::<u64>(), mixed in any::<bool>()) {
        let mut c = case(seed, mixed);
        let o = Oracle::new(&c.ensemble, &c.space);
        let x = Explainer::new(&o);
        let candidate = sub_cube(&mut c.rng, &c.instance);
        let valid = entails(&c, &candidate);
        prop_assert_eq!(x.validate(&c.instance, c.target, &candidate).unwrap().is_none(), valid);

        let repaired = x.repair(&c.instance, c.target, &candidate).unwrap();
        prop_assert!(is_prime_implicant(&c, &repaired.literals));

        for mode in [Minimality::Subset, Minimality::Cardinality] {
            match x.refine(&c.instance, c.target, &candidate, mode) {
                Ok(refined) => {
                    prop_assert!(valid);
                    prop_assert!(refined.literals.is_subset_of(&candidate));
                    prop_assert!(is_prime_implicant(&c, &refined.literals));
                }
                Err(ExplainError::NotEntailing) => prop_assert!(!valid),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn audit_matches_exhaustive_classification(seed in any::<u64>()) {
        let mut c = case(seed, false);
        let o = Oracle::new(&c.ensemble, &c.space);
        let x = Explainer::new(&o);
        let candidate = sub_cube(&mut c.rng, &c.instance);
        let expected = if !entails(&c, &candidate) {
            Status::Optimistic
        } else if candidate.features().into_iter().any(|f| entails(&c, &candidate.without(f))) {
            Status::Pessimistic
        } else {
            Status::Realistic
        };
        let v = audit(&x, &c.instance, c.target, &candidate).unwrap();
        prop_assert_eq!(v.status, expected);
        prop_assert_eq!(v.counterexamples.is_empty(), expected != Status::Optimistic);
        prop_assert!(v.counterexamples.len() <= 5);
        let corrected = v.corrected().expect("unlimited budget");
        prop_assert!(is_prime_implicant(&c, &corrected.literals));
        if expected == Status::Realistic {
            prop_assert_eq!(&corrected.literals, &candidate);
        }
    }
}

#[test]
fn own_explanations_audit_as_realistic() {
    for seed in 0..100 {
        let c = case(seed, true);
        let o = Oracle::new(&c.ensemble, &c.space);
        let x = Explainer::new(&o);
        let e = x.subset_minimal(&c.instance, c.target).unwrap();
        assert_eq!(audit(&x, &c.instance, c.target, &e.literals).unwrap().status, Status::Realistic);
    }
}
