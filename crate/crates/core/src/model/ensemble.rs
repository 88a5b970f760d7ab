use super::{FeatureKind, FeatureSpace, ModelError, Value};
use crate::number::Rational;

/// Test applied at an internal node. Its *true* outcome follows the right
/// child.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SplitPredicate {
    IsTrue { feature: usize },
    IsValue { feature: usize, value: usize },
    LessThan { feature: usize, threshold: Rational },
}

impl SplitPredicate {
    pub fn feature(&self) -> usize {
        match self {
            SplitPredicate::IsTrue { feature }
            | SplitPredicate::IsValue { feature, .. }
            | SplitPredicate::LessThan { feature, .. } => *feature,
        }
    }

    /// Evaluates on a concrete value; `None` on a kind mismatch.
    pub fn holds(&self, value: &Value) -> Option<bool> {
        match (self, value) {
            (SplitPredicate::IsTrue { .. }, Value::Bool(b)) => Some(*b),
            (SplitPredicate::IsValue { value: v, .. }, Value::Category(c)) => Some(c == v),
            (SplitPredicate::LessThan { threshold, .. }, Value::Real(x)) => Some(x < threshold),
            _ => None,
        }
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Internal { pred: SplitPredicate, left: NodeId, right: NodeId },
    Leaf { value: Rational },
}

/// A binary decision tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::Structure("tree without nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(ModelError::Structure(format!("node {id} reached twice")));
            }
            if let TreeNode::Internal { left, right, .. } = &nodes[id] {
                for &child in [left, right] {
                    if child >= nodes.len() {
                        return Err(ModelError::Structure(format!("child {child} out of range")));
                    }
                    stack.push(child);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ModelError::Structure("unreachable nodes in tree".into()));
        }
        Ok(Self { nodes })
    }

    pub fn leaf(value: Rational) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, id: NodeId) -> usize {
            match t.node(id) {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &SplitPredicate> {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Internal { pred, .. } => Some(pred),
            TreeNode::Leaf { .. } => None,
        })
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Rational> {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value } => Some(value),
            TreeNode::Internal { .. } => None,
        })
    }
}

/// A multi-class boosted ensemble; class `j` owns trees
/// `trees_per_class * j .. trees_per_class * (j + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    num_classes: usize,
    trees_per_class: usize,
    trees: Vec<Tree>,
    base_score: Option<Rational>,
    class_names: Vec<String>,
}

impl Ensemble {
    pub fn new(
        num_classes: usize,
        trees_per_class: usize,
        trees: Vec<Tree>,
        base_score: Option<Rational>,
    ) -> Result<Self, ModelError> {
        if num_classes == 0 || trees_per_class == 0 {
            return Err(ModelError::Structure("num_classes and trees_per_class must be positive".into()));
        }
        if trees.len() != num_classes * trees_per_class {
            return Err(ModelError::Structure(format!(
                "{} trees do not match {num_classes} classes x {trees_per_class} trees",
                trees.len()
            )));
        }
        let class_names = (0..num_classes).map(|c| c.to_string()).collect();
        Ok(Self { num_classes, trees_per_class, trees, base_score, class_names })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self, ModelError> {
        if names.len() != self.num_classes {
            return Err(ModelError::Structure(format!("{} class names for {} classes", names.len(), self.num_classes)));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn trees_per_class(&self) -> usize {
        self.trees_per_class
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn base_score(&self) -> Option<&Rational> {
        self.base_score.as_ref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_name(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names
            .iter()
            .position(|n| n == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&c| c < self.num_classes))
    }

    pub fn class_trees(&self, class: usize) -> &[Tree] {
        let q = self.trees_per_class;
        &self.trees[q * class..q * (class + 1)]
    }

    pub fn class_of_tree(&self, tree: usize) -> usize {
        tree / self.trees_per_class
    }

    /// Features referenced by at least one split, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.trees.iter().flat_map(|t| t.predicates().map(|p| p.feature())).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Adds a constant to every leaf; scores shift uniformly per tree count.
    pub fn shift_leaves(&self, delta: &Rational) -> Self {
        let mut out = self.clone();
        for tree in &mut out.trees {
            for node in &mut tree.nodes {
                if let TreeNode::Leaf { value } = node {
                    *value += delta;
                }
            }
        }
        out
    }

    /// Checks every split against the feature space: declared feature,
    /// matching kind, and thresholds present in the declared list.
    pub fn check_against(&self, space: &FeatureSpace) -> Result<(), ModelError> {
        for (t, tree) in self.trees.iter().enumerate() {
            for pred in tree.predicates() {
                let f = pred.feature();
                if f >= space.len() {
                    return Err(ModelError::UnknownFeature(format!("feature #{f} in tree {t}")));
                }
                let decl = space.get(f);
                let ok = match (pred, &decl.kind) {
                    (SplitPredicate::IsTrue { .. }, FeatureKind::Boolean) => true,
                    (SplitPredicate::IsValue { value, .. }, FeatureKind::Categorical(vs)) => *value < vs.len(),
                    (SplitPredicate::LessThan { threshold, .. }, FeatureKind::Continuous) => {
                        decl.thresholds.binary_search(threshold).is_ok()
                    }
                    _ => false,
                };
                if !ok {
                    return Err(ModelError::Structure(format!(
                        "split in tree {t} does not match declaration of {:?}",
                        decl.name
                    )));
                }
            }
        }
        Ok(())
    }
}
