mod common;

use abduce::model::parse_ensemble;
use abduce::oracle::Oracle;
use abduce::semantics::{export_smtlib, Query};
use common::{case, smt_check, smt_solver, sub_cube};
use rand::Rng;

#[test]
fn external_solver_agrees_with_the_oracle() {
    let Some(solver) = smt_solver() else {
        eprintln!("no SMT solver found, skipping");
        return;
    };
    for seed in 0..50u64 {
        let mut c = case(1000 + seed, seed % 2 == 0);
        let o = Oracle::new(&c.ensemble, &c.space);
        let fixed = sub_cube(&mut c.rng, &c.instance);
        let target = c.rng.gen_range(0..c.ensemble.num_classes());
        let script = export_smtlib(&c.ensemble, &c.space, &Query::entailment(fixed.clone(), target));
        let sat = smt_check(&solver, &script).unwrap_or_else(|| panic!("solver failed on seed {seed}:\n{script}"));
        assert_eq!(sat, !o.entails(&fixed, target).unwrap(), "seed {seed}");
    }
}

#[test]
fn zoo_bear_with_milk_is_unsat() {
    let Some(solver) = smt_solver() else {
        return;
    };
    let (e, s) =
        parse_ensemble(include_bytes!("../fixtures/zoo/model.json"), include_bytes!("../fixtures/zoo/features.fmap"))
            .unwrap();
    let milk = s.index_of("milk").unwrap();
    let fixed = [(milk, abduce::model::Value::Bool(true))].into_iter().collect();
    let mammal = e.class_index("mammal").unwrap();
    assert_eq!(smt_check(&solver, &export_smtlib(&e, &s, &Query::entailment(fixed, mammal))), Some(false));
    let reptile = e.class_index("reptile").unwrap();
    assert_eq!(smt_check(&solver, &export_smtlib(&e, &s, &Query::entailment(Default::default(), reptile))), Some(true));
}
