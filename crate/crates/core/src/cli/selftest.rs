//! Built-in checks on the embedded Zoo fixture and on small random models
//! cross-checked against the exhaustive reference.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::explain::{audit, candidate_from_features, Explainer, Minimality, Status};
use crate::model::{parse_ensemble, parse_instances, Cube};
use crate::oracle::{reference, Oracle};
use crate::synth::{random_ensemble, random_instance, random_space, EnsembleShape, SpaceShape};

const MODEL: &[u8] = include_bytes!("../../fixtures/zoo/model.json");
const FMAP: &[u8] = include_bytes!("../../fixtures/zoo/features.fmap");
const INSTANCES: &[u8] = include_bytes!("../../fixtures/zoo/instances.csv");

type Check = Result<(), String>;

fn expect(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn zoo_checks() -> Vec<(&'static str, Check)> {
    let (e, s) = match parse_ensemble(MODEL, FMAP) {
        Ok(x) => x,
        Err(err) => return vec![("parse fixture", Err(err.to_string()))],
    };
    let rows = match parse_instances(INSTANCES, &s) {
        Ok(r) => r,
        Err(err) => return vec![("parse instances", Err(err.to_string()))],
    };
    let class = |n: &str| e.class_index(n).expect("fixture class");
    let feats = |names: &[&str]| names.iter().map(|n| s.index_of(n).expect("fixture feature")).collect::<Vec<_>>();
    let (pitviper, bear) = (&rows[0], &rows[2]);
    let oracle = Oracle::new(&e, &s);
    let x = Explainer::new(&oracle);
    let anchor = candidate_from_features(pitviper, &feats(&["hair", "milk", "toothed", "fins"]));

    let mut out = Vec::new();
    out.push((
        "pitviper is predicted reptile",
        oracle
            .predict(pitviper)
            .map_err(|e| e.to_string())
            .and_then(|p| expect(p.class == class("reptile"), || format!("predicted {}", e.class_name(p.class)))),
    ));
    out.push((
        "bear is explained by milk",
        x.subset_minimal(bear, class("mammal"))
            .map_err(|e| e.to_string())
            .and_then(|ex| expect(ex.render(&s) == ["milk"], || format!("got {:?}", ex.render(&s)))),
    ));
    out.push((
        "cardinality-minimal bear explanation has size 1",
        x.cardinality_minimal(bear, class("mammal"))
            .map_err(|e| e.to_string())
            .and_then(|ex| expect(ex.len() == 1, || format!("size {}", ex.len()))),
    ));
    out.push((
        "anchor candidate has a counterexample",
        x.validate(pitviper, class("reptile"), &anchor).map_err(|e| e.to_string()).and_then(|c| match c {
            Some(c) => expect(c.predicted != class("reptile"), || "witness predicted reptile".into()),
            None => Err("candidate entails reptile".into()),
        }),
    ));
    out.push((
        "anchor candidate repairs to the six-literal explanation",
        audit(&x, pitviper, class("reptile"), &anchor).map_err(|e| e.to_string()).and_then(|v| {
            let got = v.repaired.as_ref().map(|r| r.render(&s)).unwrap_or_default();
            expect(
                v.status == Status::Optimistic && got == ["¬feathers", "¬milk", "backbone", "¬fins", "legs=0", "tail"],
                || format!("{} {:?}", v.status, got),
            )
        }),
    ));
    out
}

fn random_checks() -> Vec<(&'static str, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut entail = Ok(());
    let mut minimal = Ok(());
    for _ in 0..40 {
        let space = random_space(&mut rng, SpaceShape::binary(6));
        let (e, s) = random_ensemble(&mut rng, &space, EnsembleShape { classes: 3, trees_per_class: 2, max_depth: 2 });
        let oracle = Oracle::new(&e, &s);
        let x = Explainer::new(&oracle);
        let inst = random_instance(&mut rng, &s);
        let target = match oracle.predict(&inst) {
            Ok(p) => p.class,
            Err(err) => return vec![("random models", Err(err.to_string()))],
        };
        let fixed: Cube = inst.iter().filter(|(f, _)| f % 2 == 0).map(|(f, v)| (f, v.clone())).collect();
        let fast = oracle.entails(&fixed, target);
        let slow = reference::brute_force_entails(&e, &s, &fixed, target, reference::DEFAULT_CELL_CAP);
        if entail.is_ok() && fast != slow {
            entail = Err(format!("oracle {fast:?} vs reference {slow:?}"));
        }
        let card = x.explain(&inst, target, Minimality::Cardinality).map(|ex| ex.len());
        let best = reference::brute_force_minimum_explanation(&e, &s, &inst, target, reference::DEFAULT_CELL_CAP)
            .map(|c| c.len());
        if minimal.is_ok() && card.as_ref().ok() != best.as_ref().ok() {
            minimal = Err(format!("cardinality {card:?} vs reference {best:?}"));
        }
    }
    vec![
        ("entailment agrees with exhaustive search", entail),
        ("cardinality-minimal size matches exhaustive search", minimal),
    ]
}

/// Prints one line per check; returns the exit code.
pub fn run(out: &mut impl Write) -> i32 {
    let checks: Vec<_> = zoo_checks().into_iter().chain(random_checks()).collect();
    let mut failed = 0;
    for (name, result) in &checks {
        let _ = match result {
            Ok(()) => writeln!(out, "ok    {name}"),
            Err(e) => {
                failed += 1;
                writeln!(out, "FAIL  {name}: {e}")
            }
        };
    }
    let _ = writeln!(out, "{} checks, {} failed", checks.len(), failed);
    if failed == 0 {
        super::EXIT_OK
    } else {
        super::EXIT_INTERNAL
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        let mut buf = Vec::new();
        assert_eq!(super::run(&mut buf), 0, "{}", String::from_utf8_lossy(&buf));
    }
}
