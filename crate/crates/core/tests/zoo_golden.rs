use abduce::explain::{audit, candidate_from_features, Explainer, Minimality, Status};
use abduce::model::{parse_ensemble, parse_instances, Cube, Ensemble, FeatureSpace};
use abduce::number::{parse_decimal, round_to, Rational};
use abduce::oracle::{reference, Oracle};
use abduce::semantics;

const MODEL: &[u8] = include_bytes!("../fixtures/zoo/model.json");
const FMAP: &[u8] = include_bytes!("../fixtures/zoo/features.fmap");
const INSTANCES: &[u8] = include_bytes!("../fixtures/zoo/instances.csv");

struct Zoo {
    ensemble: Ensemble,
    space: FeatureSpace,
    rows: Vec<Cube>,
}

fn zoo() -> Zoo {
    let (ensemble, space) = parse_ensemble(MODEL, FMAP).unwrap();
    let rows = parse_instances(INSTANCES, &space).unwrap();
    Zoo { ensemble, space, rows }
}

impl Zoo {
    fn row(&self, name: &str) -> &Cube {
        let f = self.space.index_of("animal_name").unwrap();
        self.rows.iter().find(|r| self.space.render_value(f, r.get(f).unwrap()) == name).unwrap()
    }

    fn class(&self, name: &str) -> usize {
        self.ensemble.class_index(name).unwrap()
    }

    fn features(&self, names: &[&str]) -> Vec<usize> {
        names.iter().map(|n| self.space.index_of(n).unwrap()).collect()
    }

    fn anchor(&self) -> Cube {
        candidate_from_features(self.row("pitviper"), &self.features(&["hair", "milk", "toothed", "fins"]))
    }
}

fn dec(s: &str) -> Rational {
    parse_decimal(s).unwrap()
}

#[test]
fn model_shape() {
    let z = zoo();
    assert_eq!(z.ensemble.num_classes(), 7);
    assert_eq!(z.ensemble.trees_per_class(), 1);
    assert_eq!(z.ensemble.trees().len(), 7);
    assert!(z.ensemble.trees().iter().all(|t| t.depth() == 1));
    assert_eq!(z.rows.len(), 3);
    assert!(z.rows.iter().all(|r| r.len() == 17));
}

#[test]
fn pitviper_scores() {
    let z = zoo();
    let scores = semantics::score(&z.ensemble, &z.space, z.row("pitviper")).unwrap();
    let exact = [
        "-0.0547288768",
        "-0.0547288768",
        "-0.0552432425",
        "-0.0549824126",
        "-0.0550289042",
        "-0.0536704734",
        "0.028965516",
    ];
    for (s, e) in scores.iter().zip(exact) {
        assert_eq!(*s, dec(e));
    }
    let shown = ["-0.0547", "-0.0547", "-0.0552", "-0.0549", "-0.0550", "-0.0537", "0.0290"];
    let tol = dec("0.0001");
    for (s, e) in scores.iter().zip(shown) {
        let diff = round_to(s, 4) - dec(e);
        assert!(diff.clone() * diff.clone() <= tol.clone() * tol.clone(), "{s} vs {e}");
    }
    assert_eq!(semantics::predict(&z.ensemble, &z.space, z.row("pitviper")).unwrap().class, z.class("reptile"));
    assert_eq!(semantics::predict(&z.ensemble, &z.space, z.row("toad")).unwrap().class, z.class("amphibian"));
    assert_eq!(semantics::predict(&z.ensemble, &z.space, z.row("bear")).unwrap().class, z.class("mammal"));
}

#[test]
fn bear_is_explained_by_milk() {
    let z = zoo();
    let o = Oracle::new(&z.ensemble, &z.space);
    let x = Explainer::new(&o);
    let bear = z.row("bear");
    let mammal = z.class("mammal");
    let milk = z.features(&["milk"]);
    for mode in [Minimality::Subset, Minimality::Cardinality] {
        let e = x.explain(bear, mammal, mode).unwrap();
        assert_eq!(e.literals.features(), milk);
        assert_eq!(e.render(&z.space), vec!["milk"]);
    }
    assert!(o.entails(&candidate_from_features(bear, &milk), mammal).unwrap());
    let refined = x
        .refine(bear, mammal, &candidate_from_features(bear, &z.features(&["feathers", "milk"])), Minimality::Subset)
        .unwrap();
    assert_eq!(refined.literals.features(), milk);
}

#[test]
fn anchor_explanation_is_optimistic() {
    let z = zoo();
    let o = Oracle::new(&z.ensemble, &z.space);
    let x = Explainer::new(&o);
    let pit = z.row("pitviper");
    let reptile = z.class("reptile");
    assert_eq!(z.anchor().render(&z.space), vec!["¬hair", "¬milk", "¬toothed", "¬fins"]);
    assert!(!o.entails(&z.anchor(), reptile).unwrap());
    let cex = x.validate(pit, reptile, &z.anchor()).unwrap().expect("counterexample");
    assert_ne!(cex.predicted, reptile);
    assert_eq!(semantics::predict(&z.ensemble, &z.space, &cex.instance).unwrap().class, cex.predicted);
    assert!(z.anchor().is_subset_of(&cex.instance));
    // the toad row is one such witness
    assert!(z
        .anchor()
        .is_subset_of(&candidate_from_features(z.row("toad"), &z.features(&["hair", "milk", "toothed", "fins"]))));

    let found = o.enumerate_counterexamples(&z.anchor(), reptile, 10).unwrap();
    assert!(!found.counterexamples.is_empty());
    let mut cells: Vec<_> = found.counterexamples.iter().map(|c| c.cell.clone()).collect();
    let n = cells.len();
    cells.sort_by_key(|c| format!("{c:?}"));
    cells.dedup();
    assert_eq!(cells.len(), n);
}

#[test]
fn anchor_repair() {
    let z = zoo();
    let o = Oracle::new(&z.ensemble, &z.space);
    let x = Explainer::new(&o);
    let repaired = x.repair(z.row("pitviper"), z.class("reptile"), &z.anchor()).unwrap();
    assert_eq!(repaired.render(&z.space), vec!["¬feathers", "¬milk", "backbone", "¬fins", "legs=0", "tail"]);
    assert!(x.check_explanation(&repaired, true).unwrap());

    let verdict = audit(&x, z.row("pitviper"), z.class("reptile"), &z.anchor()).unwrap();
    assert_eq!(verdict.status, Status::Optimistic);
    assert_eq!(verdict.repaired.unwrap().literals, repaired.literals);
    assert!(!verdict.counterexamples.is_empty() && verdict.counterexamples.len() <= 5);
}

#[test]
fn bird_margin_over_mammal() {
    let z = zoo();
    let o = Oracle::new(&z.ensemble, &z.space);
    let cell = abduce::model::AbstractCell::full(&z.space);
    let bound = o.max_margin_bound(&cell, z.class("bird"), z.class("mammal"));
    assert_eq!(bound, dec("0.3389535024"));
    let exact = reference::brute_force_max_margin(
        &z.ensemble,
        &z.space,
        &Cube::new(),
        z.class("bird"),
        z.class("mammal"),
        1 << 20,
    )
    .unwrap();
    assert_eq!(exact, bound);
}
