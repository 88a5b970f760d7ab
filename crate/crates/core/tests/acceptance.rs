//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use abduce::explain::{audit, candidate_from_features, Explainer, Minimality, Status};
use abduce::model::{parse_ensemble, parse_instances, Cube, Ensemble, FeatureSpace};
use abduce::number::{parse_decimal, round_to};
use abduce::oracle::reference::TruthTable;
use abduce::oracle::Oracle;
use abduce::semantics::{self, export_smtlib, Query};
use abduce::synth::{
    random_ensemble, random_instance, random_space, synthetic_dataset, train_boosted, BoostParams, EnsembleShape,
    SpaceShape,
};
use common::{smt_check, smt_solver, sub_cube, CAP};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

struct Zoo {
    e: Ensemble,
    s: FeatureSpace,
    rows: Vec<Cube>,
}

impl Zoo {
    fn load() -> Self {
        let (e, s) = parse_ensemble(
            include_bytes!("../fixtures/zoo/model.json"),
            include_bytes!("../fixtures/zoo/features.fmap"),
        )
        .expect("zoo model");
        let rows = parse_instances(include_bytes!("../fixtures/zoo/instances.csv"), &s).expect("zoo rows");
        Self { e, s, rows }
    }

    fn class(&self, n: &str) -> usize {
        self.e.class_index(n).expect("zoo class")
    }

    fn anchor(&self) -> Cube {
        let f: Vec<usize> =
            ["hair", "milk", "toothed", "fins"].iter().map(|n| self.s.index_of(n).expect("feature")).collect();
        candidate_from_features(&self.rows[0], &f)
    }
}

fn ms(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1e3)
}

fn zoo_scores(z: &Zoo) -> Verdict {
    let expected = ["-0.0547", "-0.0547", "-0.0552", "-0.0549", "-0.0550", "-0.0537", "0.0290"];
    let t = Instant::now();
    let scores = semantics::score(&z.e, &z.s, &z.rows[0]).expect("total row");
    let class = semantics::argmax(&scores);
    let elapsed = t.elapsed();
    let tol = parse_decimal("0.0001").expect("decimal");
    let worst = scores
        .iter()
        .zip(expected)
        .map(|(s, p)| (round_to(s, 4) - parse_decimal(p).expect("decimal")).abs())
        .max()
        .expect("seven classes");
    let shown: Vec<String> = scores.iter().map(|s| abduce::number::format_exact(&round_to(s, 4))).collect();
    verdict(
        worst <= tol && class == z.class("reptile") && elapsed < Duration::from_millis(10),
        format!(
            "scores {shown:?}, max deviation {worst} (tolerance 1e-4), class {}, {}",
            z.e.class_name(class),
            ms(elapsed)
        ),
    )
}

fn zoo_bear(z: &Zoo) -> Verdict {
    let t = Instant::now();
    let o = Oracle::new(&z.e, &z.s);
    let e = Explainer::new(&o).subset_minimal(&z.rows[2], z.class("mammal")).expect("explanation");
    let elapsed = t.elapsed();
    let lits = e.render(&z.s);
    verdict(lits == ["milk"] && elapsed < Duration::from_millis(100), format!("{lits:?} in {}", ms(elapsed)))
}

fn zoo_validate(z: &Zoo) -> Verdict {
    let t = Instant::now();
    let o = Oracle::new(&z.e, &z.s);
    let cex = Explainer::new(&o).validate(&z.rows[0], z.class("reptile"), &z.anchor()).expect("decided");
    let elapsed = t.elapsed();
    match cex {
        Some(c) => {
            let re = semantics::predict(&z.e, &z.s, &c.instance).expect("total").class;
            verdict(
                re != z.class("reptile") && re == c.predicted && elapsed < Duration::from_millis(100),
                format!("witness re-predicted {}, {}", z.e.class_name(re), ms(elapsed)),
            )
        }
        None => Verdict::Fail("no counterexample".into()),
    }
}

fn zoo_repair(z: &Zoo) -> Verdict {
    let t = Instant::now();
    let o = Oracle::new(&z.e, &z.s);
    let r = Explainer::new(&o).repair(&z.rows[0], z.class("reptile"), &z.anchor()).expect("repair");
    let elapsed = t.elapsed();
    let lits = r.render(&z.s);
    verdict(
        lits == ["¬feathers", "¬milk", "backbone", "¬fins", "legs=0", "tail"] && elapsed < Duration::from_secs(1),
        format!("{} in {}", lits.join(" ∧ "), ms(elapsed)),
    )
}

fn classify(table: &TruthTable, s: &FeatureSpace, cand: &Cube, target: usize) -> Status {
    if !table.entails(s, cand, target) {
        Status::Optimistic
    } else if cand.features().into_iter().any(|f| table.entails(s, &cand.without(f), target)) {
        Status::Pessimistic
    } else {
        Status::Realistic
    }
}

fn oracle_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let (mut queries, mut audits, mut mismatches) = (0usize, 0usize, Vec::new());
    while queries < 10_000 {
        let shape = SpaceShape::binary(rng.gen_range(1..=10));
        let space = random_space(&mut rng, shape);
        let shape = EnsembleShape {
            classes: rng.gen_range(1..=3),
            trees_per_class: rng.gen_range(1..=5),
            max_depth: rng.gen_range(1..=3),
        };
        let (e, s) = random_ensemble(&mut rng, &space, shape);
        let table = TruthTable::new(&e, &s, CAP).expect("small model");
        let o = Oracle::new(&e, &s);
        let x = Explainer::new(&o);
        for _ in 0..20 {
            queries += 1;
            let inst = random_instance(&mut rng, &s);
            let predicted = semantics::predict(&e, &s, &inst).expect("total").class;
            let target = if rng.gen_bool(0.7) { predicted } else { rng.gen_range(0..shape.classes) };
            let fixed = sub_cube(&mut rng, &inst);
            let expected = table.entails(&s, &fixed, target);
            if o.entails(&fixed, target).ok() != Some(expected) {
                mismatches.push(format!("entails on query {queries}"));
            }
            match o.find_counterexample(&fixed, target) {
                Ok(Some(c)) => {
                    let re = semantics::predict(&e, &s, &c.instance).expect("total").class;
                    if expected || re == target || !fixed.is_subset_of(&c.instance) {
                        mismatches.push(format!("counterexample on query {queries}"));
                    }
                }
                Ok(None) if expected => {}
                _ => mismatches.push(format!("find_counterexample on query {queries}")),
            }
            if target == predicted {
                audits += 1;
                let want = classify(&table, &s, &fixed, target);
                match audit(&x, &inst, target, &fixed) {
                    Ok(v) if v.status == want => {}
                    _ => mismatches.push(format!("audit on query {queries}")),
                }
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{queries} queries ({audits} audits), {} disagreements with brute force{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(", first: {m}")).unwrap_or_default()
        ),
    )
}

fn minimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x313);
    let (mut checked, mut failures) = (0usize, Vec::new());
    for round in 0..400 {
        let shape = SpaceShape::mixed(rng.gen_range(1..=8));
        let space = random_space(&mut rng, shape);
        let shape = EnsembleShape {
            classes: rng.gen_range(1..=3),
            trees_per_class: rng.gen_range(1..=4),
            max_depth: rng.gen_range(1..=3),
        };
        let (e, s) = random_ensemble(&mut rng, &space, shape);
        let table = TruthTable::new(&e, &s, CAP).expect("small model");
        let o = Oracle::new(&e, &s);
        let x = Explainer::new(&o);
        let inst = random_instance(&mut rng, &s);
        let target = semantics::predict(&e, &s, &inst).expect("total").class;
        let prime = |c: &Cube| {
            c.is_subset_of(&inst)
                && table.entails(&s, c, target)
                && c.features().into_iter().all(|f| !table.entails(&s, &c.without(f), target))
        };
        let subset = x.subset_minimal(&inst, target).expect("subset");
        let card = x.cardinality_minimal(&inst, target).expect("cardinality");
        let cand = sub_cube(&mut rng, &inst);
        let repaired = x.repair(&inst, target, &cand).expect("repair");
        let mut all = vec![&subset.literals, &card.literals, &repaired.literals];
        let refined: Vec<Cube> = if table.entails(&s, &cand, target) {
            [Minimality::Subset, Minimality::Cardinality]
                .into_iter()
                .map(|m| x.refine(&inst, target, &cand, m).expect("refine").literals)
                .collect()
        } else {
            Vec::new()
        };
        all.extend(refined.iter());
        if refined.iter().any(|r| !r.is_subset_of(&cand)) {
            failures.push(format!("refinement escapes its candidate in round {round}"));
        }
        for c in all {
            checked += 1;
            if !prime(c) {
                failures.push(format!("non-prime explanation in round {round}"));
            }
        }
        let best = table.minimum_explanation_size(&s, &inst, target);
        if card.len() != best || card.len() > subset.len() {
            failures.push(format!(
                "round {round}: cardinality {} vs minimum {best}, subset {}",
                card.len(),
                subset.len()
            ));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{checked} explanations checked over 400 instances, {} failures{}",
            failures.len(),
            failures.first().map(|m| format!(", first: {m}")).unwrap_or_default()
        ),
    )
}

fn smt_differential() -> Verdict {
    let Some(solver) = smt_solver() else {
        return Verdict::Skip("no external QF_LRA solver found".into());
    };
    let mut agree = 0;
    for seed in 0..50u64 {
        let mut c = common::case(7000 + seed, seed % 2 == 1);
        let o = Oracle::new(&c.ensemble, &c.space);
        let fixed = sub_cube(&mut c.rng, &c.instance);
        let target = c.rng.gen_range(0..c.ensemble.num_classes());
        let script = export_smtlib(&c.ensemble, &c.space, &Query::entailment(fixed.clone(), target));
        if smt_check(&solver, &script) == Some(!o.entails(&fixed, target).expect("decided")) {
            agree += 1;
        }
    }
    verdict(agree == 50, format!("{agree}/50 queries agree with {}", solver.display()))
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn performance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1e);
    let data = synthetic_dataset(&mut rng, 12, 2, 2000);
    let (e, s) = train_boosted(&data, BoostParams { rounds: 50, max_depth: 3, ..Default::default() });
    let o = Oracle::new(&e, &s);
    let x = Explainer::new(&o);
    let (mut validate, mut repair) = (Vec::new(), Vec::new());
    for inst in data.rows.iter().take(40) {
        let target = o.predict(inst).expect("total").class;
        // heuristic-sized candidate: a few literals of the instance
        let mut features = inst.features();
        features.retain(|_| rng.gen_bool(0.35));
        let cand = inst.restrict(features);
        let t = Instant::now();
        let cex = x.validate(inst, target, &cand);
        validate.push(t.elapsed());
        if cex.is_err() {
            return Verdict::Fail("validation ran out of budget".into());
        }
        let t = Instant::now();
        if x.repair(inst, target, &cand).is_err() {
            return Verdict::Fail("repair ran out of budget".into());
        }
        repair.push(t.elapsed());
    }
    let (v, r) = (median(validate), median(repair));
    verdict(
        v < Duration::from_secs(2) && r < Duration::from_secs(5),
        format!(
            "trained 2-class model, 12 features, 50 trees/class, depth 3: median validate {}, median repair {}",
            ms(v),
            ms(r)
        ),
    )
}

fn size_sanity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x512e);
    let mut parts = Vec::new();
    let mut ok = true;
    for k in [9, 13, 17, 21] {
        let data = synthetic_dataset(&mut rng, k, 2, 1000);
        let (e, s) = train_boosted(&data, BoostParams { rounds: 20, max_depth: 3, ..Default::default() });
        let o = Oracle::new(&e, &s);
        let x = Explainer::new(&o);
        let (mut subset, mut card, mut n) = (0usize, 0usize, 0usize);
        for inst in data.rows.iter().take(30) {
            let target = o.predict(inst).expect("total").class;
            subset += x.subset_minimal(inst, target).expect("subset").len();
            card += x.cardinality_minimal(inst, target).expect("cardinality").len();
            n += 1;
        }
        let (ms_, mc) = (subset as f64 / n as f64, card as f64 / n as f64);
        ok &= (1.0..=0.5 * k as f64).contains(&ms_) && mc <= ms_;
        parts.push(format!("k={k}: subset {ms_:.2}, cardinality {mc:.2}"));
    }
    verdict(ok, parts.join("; "))
}

type Criterion<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() {
    let zoo = Zoo::load();
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("1 zoo pitviper scores and class", Box::new(|| zoo_scores(&zoo))),
        ("2 zoo bear subset-minimal explanation", Box::new(|| zoo_bear(&zoo))),
        ("3 zoo anchor candidate counterexample", Box::new(|| zoo_validate(&zoo))),
        ("4 zoo anchor candidate repair", Box::new(|| zoo_repair(&zoo))),
        ("5 oracle agreement with brute force", Box::new(oracle_agreement)),
        ("6 explanation minimality", Box::new(minimality)),
        ("7 differential SMT check", Box::new(smt_differential)),
        ("performance on a trained 12-feature model", Box::new(performance)),
        ("explanation size sanity", Box::new(size_sanity)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  [{name}] {detail} ({:.2}s)", t.elapsed().as_secs_f64());
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
