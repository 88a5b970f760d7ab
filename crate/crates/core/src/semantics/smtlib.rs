//! SMT-LIB2 (QF_LRA) rendering of an ensemble query. The document is
//! satisfiable iff some total extension of the fixed cube is predicted as a
//! class other than the target.

use std::fmt::Write;

use num_traits::{Signed, Zero};

use super::{negated_prediction, paths, Query};
use crate::model::{Ensemble, FeatureKind, FeatureSpace, SplitPredicate, TreeNode, Value};
use crate::number::{finite_decimal, Rational};

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// Real-sorted literal for an exact rational.
pub(crate) fn real_literal(value: &Rational) -> String {
    let magnitude = value.abs();
    let body = match finite_decimal(&magnitude) {
        Some(text) if text.contains('.') => text,
        Some(text) => format!("{text}.0"),
        None => format!("(/ {}.0 {}.0)", magnitude.numer(), magnitude.denom()),
    };
    if value.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

struct Names<'a> {
    space: &'a FeatureSpace,
}

impl Names<'_> {
    fn boolean(&self, f: usize) -> String {
        format!("b_{f}_{}", sanitize(self.space.name(f)))
    }

    fn indicator(&self, f: usize, value: usize) -> String {
        let label = match &self.space.get(f).kind {
            FeatureKind::Categorical(values) => sanitize(&values[value]),
            _ => value.to_string(),
        };
        format!("b_{f}_{}_v{value}_{label}", sanitize(self.space.name(f)))
    }

    fn real(&self, f: usize) -> String {
        format!("x_{f}_{}", sanitize(self.space.name(f)))
    }

    fn threshold(&self, f: usize, k: usize) -> String {
        format!("b_{f}_{}_lt{k}", sanitize(self.space.name(f)))
    }

    fn predicate(&self, pred: &SplitPredicate) -> String {
        match pred {
            SplitPredicate::IsTrue { feature } => self.boolean(*feature),
            SplitPredicate::IsValue { feature, value } => self.indicator(*feature, *value),
            SplitPredicate::LessThan { feature, threshold } => {
                let k = self.space.get(*feature).thresholds.binary_search(threshold).unwrap_or(usize::MAX);
                self.threshold(*feature, k)
            }
        }
    }
}

fn conjunction(parts: &[String]) -> String {
    match parts {
        [] => "true".to_string(),
        [one] => one.clone(),
        many => format!("(and {})", many.join(" ")),
    }
}

pub fn export_smtlib(ensemble: &Ensemble, space: &FeatureSpace, query: &Query) -> String {
    let names = Names { space };
    let mut doc = String::new();
    let m = ensemble.num_classes();
    let _ = writeln!(doc, "; target class {} ({})", query.target, ensemble.class_name(query.target));
    let _ = writeln!(doc, "; fixed literals: {}", query.fixed.render(space).join(" "));
    doc.push_str("(set-logic QF_LRA)\n");

    for (f, decl) in space.features().iter().enumerate() {
        match &decl.kind {
            FeatureKind::Boolean => {
                let _ = writeln!(doc, "(declare-const {} Bool)", names.boolean(f));
            }
            FeatureKind::Categorical(values) => {
                let vars: Vec<String> = (0..values.len()).map(|v| names.indicator(f, v)).collect();
                for var in &vars {
                    let _ = writeln!(doc, "(declare-const {var} Bool)");
                }
                let _ = writeln!(
                    doc,
                    "(assert {})",
                    if vars.len() == 1 { vars[0].clone() } else { format!("(or {})", vars.join(" ")) }
                );
                for i in 0..vars.len() {
                    for j in i + 1..vars.len() {
                        let _ = writeln!(doc, "(assert (not (and {} {})))", vars[i], vars[j]);
                    }
                }
            }
            FeatureKind::Continuous => {
                let x = names.real(f);
                let _ = writeln!(doc, "(declare-const {x} Real)");
                for (k, t) in decl.thresholds.iter().enumerate() {
                    let b = names.threshold(f, k);
                    let _ = writeln!(doc, "(declare-const {b} Bool)");
                    let _ = writeln!(doc, "(assert (= {b} (< {x} {})))", real_literal(t));
                }
            }
        }
    }

    for (l, tree) in ensemble.trees().iter().enumerate() {
        let _ = writeln!(doc, "(declare-const r_{l} Real)");
        for path in paths(tree, l) {
            let mut lits = Vec::new();
            for &n in &path.right {
                if let TreeNode::Internal { pred, .. } = tree.node(n) {
                    lits.push(names.predicate(pred));
                }
            }
            for &n in &path.left {
                if let TreeNode::Internal { pred, .. } = tree.node(n) {
                    lits.push(format!("(not {})", names.predicate(pred)));
                }
            }
            let _ = writeln!(doc, "(assert (=> {} (= r_{l} {})))", conjunction(&lits), real_literal(&path.leaf));
        }
    }

    let base = ensemble.base_score().cloned().unwrap_or_else(Rational::zero);
    for class in 0..m {
        let _ = writeln!(doc, "(declare-const v_{class} Real)");
        let q = ensemble.trees_per_class();
        let mut terms: Vec<String> = (q * class..q * (class + 1)).map(|l| format!("r_{l}")).collect();
        if !base.is_zero() {
            terms.push(real_literal(&base));
        }
        let sum = if terms.len() == 1 { terms[0].clone() } else { format!("(+ {})", terms.join(" ")) };
        let _ = writeln!(doc, "(assert (= v_{class} {sum}))");
    }

    for (f, value) in query.fixed.iter() {
        let lit = match value {
            Value::Bool(true) => names.boolean(f),
            Value::Bool(false) => format!("(not {})", names.boolean(f)),
            Value::Category(c) => names.indicator(f, *c),
            Value::Real(x) => format!("(= {} {})", names.real(f), real_literal(x)),
        };
        let _ = writeln!(doc, "(assert {lit})");
    }

    let disjuncts: Vec<String> = negated_prediction(query.target, m)
        .into_iter()
        .map(|a| {
            let op = if a.ties_win { ">=" } else { ">" };
            format!("({op} v_{} v_{})", a.class, query.target)
        })
        .collect();
    let negation = match disjuncts.len() {
        0 => "false".to_string(),
        1 => disjuncts[0].clone(),
        _ => format!("(or {})", disjuncts.join(" ")),
    };
    let _ = writeln!(doc, "(assert {negation})");
    doc.push_str("(check-sat)\n");
    doc
}
