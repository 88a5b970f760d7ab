//! Forward semantics of an ensemble: per-class scores, the argmax with its
//! tie rule, and the logical shape of the queries the oracle decides.

mod smtlib;

pub use smtlib::export_smtlib;

use num_traits::Zero;

use crate::model::{Cube, Ensemble, FeatureSpace, Tree, TreeNode};
use crate::number::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("instance does not assign feature {0:?}")]
    PartialCube(String),
    #[error("value of feature {0:?} does not match its split predicate")]
    KindMismatch(String),
}

/// Predicted class plus the score vector it was taken from. Ties go to the
/// lowest class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<Rational>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<Rational>) -> Self {
        let class = argmax(&scores);
        Self { class, scores }
    }
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[Rational]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Leaf reached by a total instance.
pub fn leaf_value<'t>(tree: &'t Tree, space: &FeatureSpace, instance: &Cube) -> Result<&'t Rational, SemanticsError> {
    let mut id = 0;
    loop {
        match tree.node(id) {
            TreeNode::Leaf { value } => return Ok(value),
            TreeNode::Internal { pred, left, right } => {
                let f = pred.feature();
                let value = instance.get(f).ok_or_else(|| SemanticsError::PartialCube(space.name(f).to_string()))?;
                let holds = pred.holds(value).ok_or_else(|| SemanticsError::KindMismatch(space.name(f).to_string()))?;
                id = if holds { *right } else { *left };
            }
        }
    }
}

/// Raw class scores, base score included.
pub fn score(ensemble: &Ensemble, space: &FeatureSpace, instance: &Cube) -> Result<Vec<Rational>, SemanticsError> {
    if let Some(missing) = (0..space.len()).find(|f| !instance.contains(*f)) {
        return Err(SemanticsError::PartialCube(space.name(missing).to_string()));
    }
    let base = ensemble.base_score().cloned().unwrap_or_else(Rational::zero);
    (0..ensemble.num_classes())
        .map(|class| {
            ensemble
                .class_trees(class)
                .iter()
                .try_fold(base.clone(), |acc, tree| Ok(acc + leaf_value(tree, space, instance)?))
        })
        .collect()
}

pub fn predict(ensemble: &Ensemble, space: &FeatureSpace, instance: &Cube) -> Result<Prediction, SemanticsError> {
    score(ensemble, space, instance).map(Prediction::from_scores)
}

/// `v_winner > v_loser`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreInequality {
    pub winner: usize,
    pub loser: usize,
}

/// The `m - 1` strict inequalities stating that `class` has the top score.
pub fn prediction_formula(class: usize, num_classes: usize) -> Vec<ScoreInequality> {
    (0..num_classes).filter(|&i| i != class).map(|loser| ScoreInequality { winner: class, loser }).collect()
}

/// One disjunct of the negated prediction under the tie rule: the adversary
/// beats the target when `v_adversary > v_target`, or on equality when
/// `ties_win` (the adversary has the lower index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adversary {
    pub class: usize,
    pub ties_win: bool,
}

pub fn negated_prediction(class: usize, num_classes: usize) -> Vec<Adversary> {
    (0..num_classes).filter(|&c| c != class).map(|c| Adversary { class: c, ties_win: c < class }).collect()
}

/// One root-to-leaf path of a tree: nodes where the path takes the true
/// (right) branch and nodes where it takes the false (left) branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathConstraint {
    pub tree: usize,
    pub right: Vec<usize>,
    pub left: Vec<usize>,
    pub leaf: Rational,
}

/// All root-to-leaf paths, depth-first, false branch first.
pub fn paths(tree: &Tree, tree_index: usize) -> Vec<PathConstraint> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::new(), Vec::new())];
    while let Some((id, right, left)) = stack.pop() {
        match tree.node(id) {
            TreeNode::Leaf { value } => out.push(PathConstraint { tree: tree_index, right, left, leaf: value.clone() }),
            TreeNode::Internal { right: r, left: l, .. } => {
                let mut rr = right.clone();
                rr.push(id);
                stack.push((*r, rr, left.clone()));
                let mut ll = left;
                ll.push(id);
                stack.push((*l, right, ll));
            }
        }
    }
    out
}

/// Candidate explanation plus target class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub fixed: Cube,
    pub target: usize,
    pub mode: QueryMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    #[default]
    Entailment,
    CounterexampleSearch,
}

impl Query {
    pub fn entailment(fixed: Cube, target: usize) -> Self {
        Self { fixed, target, mode: QueryMode::Entailment }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_feature_map, SplitPredicate, Value};

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn stump(feature: usize, no: i64, yes: i64) -> Tree {
        Tree::new(vec![
            TreeNode::Internal { pred: SplitPredicate::IsTrue { feature }, left: 1, right: 2 },
            TreeNode::Leaf { value: r(no) },
            TreeNode::Leaf { value: r(yes) },
        ])
        .unwrap()
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        assert_eq!(argmax(&[r(1), r(3), r(3)]), 1);
        assert_eq!(argmax(&[r(2), r(2)]), 0);
        assert_eq!(argmax(&[r(-1)]), 0);
    }

    #[test]
    fn identical_classes_predict_lower_index() {
        let space = parse_feature_map("0\ta\tbinary\n").unwrap();
        let e = Ensemble::new(2, 1, vec![stump(0, 1, 2), stump(0, 1, 2)], None).unwrap();
        for b in [false, true] {
            let inst: Cube = [(0, Value::Bool(b))].into_iter().collect();
            assert_eq!(predict(&e, &space, &inst).unwrap().class, 0);
        }
    }

    #[test]
    fn partial_cube_is_rejected() {
        let space = parse_feature_map("0\ta\tbinary\n1\tb\tbinary\n").unwrap();
        let e = Ensemble::new(1, 1, vec![stump(1, 0, 1)], None).unwrap();
        let inst: Cube = [(0, Value::Bool(true))].into_iter().collect();
        assert!(matches!(score(&e, &space, &inst), Err(SemanticsError::PartialCube(_))));
    }

    #[test]
    fn base_score_shifts_every_class() {
        let space = parse_feature_map("0\ta\tbinary\n").unwrap();
        let e = Ensemble::new(2, 1, vec![stump(0, 1, 5), stump(0, 3, 2)], Some(r(10))).unwrap();
        let inst: Cube = [(0, Value::Bool(true))].into_iter().collect();
        let p = predict(&e, &space, &inst).unwrap();
        assert_eq!(p.scores, vec![r(15), r(12)]);
        assert_eq!(p.class, 0);
    }

    #[test]
    fn formulas_have_m_minus_one_parts() {
        let f = prediction_formula(5, 7);
        assert_eq!(f.len(), 6);
        assert!(f.iter().all(|i| i.winner == 5 && i.loser != 5));
        assert!(prediction_formula(0, 1).is_empty());
        let neg = negated_prediction(2, 4);
        assert_eq!(neg.iter().map(|a| (a.class, a.ties_win)).collect::<Vec<_>>(), [(0, true), (1, true), (3, false)]);
    }

    #[test]
    fn paths_cover_every_leaf() {
        let t = Tree::new(vec![
            TreeNode::Internal { pred: SplitPredicate::IsTrue { feature: 0 }, left: 1, right: 2 },
            TreeNode::Leaf { value: r(1) },
            TreeNode::Internal { pred: SplitPredicate::IsTrue { feature: 1 }, left: 3, right: 4 },
            TreeNode::Leaf { value: r(2) },
            TreeNode::Leaf { value: r(3) },
        ])
        .unwrap();
        let ps = paths(&t, 4);
        assert_eq!(ps.len(), 3);
        assert_eq!(ps[0], PathConstraint { tree: 4, right: vec![], left: vec![0], leaf: r(1) });
        assert_eq!(ps[2], PathConstraint { tree: 4, right: vec![0, 2], left: vec![], leaf: r(3) });
    }
}
