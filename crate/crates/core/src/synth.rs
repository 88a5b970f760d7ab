//! Seeded generators for feature spaces, ensembles and instances.
//!
//! [`random_ensemble`] draws arbitrary trees with small dyadic leaves, which
//! makes score ties common. [`train_boosted`] fits a softmax gradient-boosted
//! ensemble on synthetic labelled data, giving models with the skewed
//! feature usage of trained ones.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Cube, Ensemble, FeatureDecl, FeatureKind, FeatureSpace, SplitPredicate, Tree, TreeNode, Value};
use crate::number::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceShape {
    pub features: usize,
    /// Share of categorical features, in percent.
    pub categorical_pct: u32,
    /// Share of continuous features, in percent.
    pub continuous_pct: u32,
}

impl SpaceShape {
    pub fn binary(features: usize) -> Self {
        Self { features, categorical_pct: 0, continuous_pct: 0 }
    }

    pub fn mixed(features: usize) -> Self {
        Self { features, categorical_pct: 20, continuous_pct: 25 }
    }
}

pub fn random_space<R: Rng>(rng: &mut R, shape: SpaceShape) -> FeatureSpace {
    let features = (0..shape.features)
        .map(|i| {
            let roll = rng.gen_range(0..100);
            let kind = if roll < shape.categorical_pct {
                let n = rng.gen_range(2..=4);
                FeatureKind::Categorical((0..n).map(|v| format!("v{v}")).collect())
            } else if roll < shape.categorical_pct + shape.continuous_pct {
                FeatureKind::Continuous
            } else {
                FeatureKind::Boolean
            };
            FeatureDecl { name: format!("f{i}"), kind, thresholds: Vec::new() }
        })
        .collect();
    FeatureSpace::new(features).expect("generated names are unique")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleShape {
    pub classes: usize,
    pub trees_per_class: usize,
    pub max_depth: usize,
}

fn dyadic(n: i64, shift: u32) -> Rational {
    Rational::new(n.into(), (1i64 << shift).into())
}

fn random_predicate<R: Rng>(rng: &mut R, space: &FeatureSpace) -> SplitPredicate {
    let feature = rng.gen_range(0..space.len());
    match &space.get(feature).kind {
        FeatureKind::Boolean => SplitPredicate::IsTrue { feature },
        FeatureKind::Categorical(values) => SplitPredicate::IsValue { feature, value: rng.gen_range(0..values.len()) },
        // thresholds on a coarse grid so trees share split points
        FeatureKind::Continuous => SplitPredicate::LessThan { feature, threshold: dyadic(rng.gen_range(1..16), 1) },
    }
}

fn random_tree<R: Rng>(rng: &mut R, space: &FeatureSpace, max_depth: usize) -> Tree {
    let mut nodes = Vec::new();
    grow(rng, space, max_depth, &mut nodes);
    Tree::new(nodes).expect("generated trees are well formed")
}

fn grow<R: Rng>(rng: &mut R, space: &FeatureSpace, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let id = nodes.len();
    if depth == 0 || space.is_empty() || rng.gen_bool(0.2) {
        nodes.push(TreeNode::Leaf { value: dyadic(rng.gen_range(-8..=8), 2) });
        return id;
    }
    let pred = random_predicate(rng, space);
    nodes.push(TreeNode::Leaf { value: Rational::zero() });
    let left = grow(rng, space, depth - 1, nodes);
    let right = grow(rng, space, depth - 1, nodes);
    nodes[id] = TreeNode::Internal { pred, left, right };
    id
}

/// A random ensemble over `space`. Continuous thresholds used by the trees
/// are installed into the returned copy of the space.
pub fn random_ensemble<R: Rng>(rng: &mut R, space: &FeatureSpace, shape: EnsembleShape) -> (Ensemble, FeatureSpace) {
    let trees = (0..shape.classes * shape.trees_per_class).map(|_| random_tree(rng, space, shape.max_depth)).collect();
    let base = if rng.gen_bool(0.3) { Some(dyadic(rng.gen_range(-4..=4), 2)) } else { None };
    let ensemble = Ensemble::new(shape.classes, shape.trees_per_class, trees, base).expect("shape is consistent");
    let space = with_thresholds(space, &ensemble);
    (ensemble, space)
}

/// Copy of `space` whose continuous thresholds are exactly those used by
/// `ensemble`.
pub fn with_thresholds(space: &FeatureSpace, ensemble: &Ensemble) -> FeatureSpace {
    let mut decls = space.features().to_vec();
    for d in &mut decls {
        d.thresholds.clear();
    }
    for tree in ensemble.trees() {
        for pred in tree.predicates() {
            if let SplitPredicate::LessThan { feature, threshold } = pred {
                decls[*feature].thresholds.push(threshold.clone());
            }
        }
    }
    for d in &mut decls {
        d.thresholds.sort();
        d.thresholds.dedup();
    }
    FeatureSpace::new(decls).expect("thresholds sorted and unique")
}

/// A uniformly random total instance. Continuous values are drawn from the
/// thresholds themselves, points between them and points outside them.
pub fn random_instance<R: Rng>(rng: &mut R, space: &FeatureSpace) -> Cube {
    (0..space.len())
        .map(|f| {
            let decl = space.get(f);
            let value = match &decl.kind {
                FeatureKind::Boolean => Value::Bool(rng.gen()),
                FeatureKind::Categorical(values) => Value::Category(rng.gen_range(0..values.len())),
                FeatureKind::Continuous => {
                    let atom = rng.gen_range(0..space.atom_count(f));
                    if rng.gen_bool(0.3) && atom > 0 {
                        Value::Real(decl.thresholds[atom - 1].clone())
                    } else {
                        space.representative(f, atom, atom)
                    }
                }
            };
            (f, value)
        })
        .collect()
}

/// Labelled rows for [`train_boosted`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub space: FeatureSpace,
    pub rows: Vec<Cube>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

/// Rows drawn uniformly over a mixed space, labelled by the argmax of
/// sparse random linear scores plus noise. Continuous values are integers
/// in `0..100`.
pub fn synthetic_dataset<R: Rng>(rng: &mut R, features: usize, classes: usize, rows: usize) -> Dataset {
    let space = random_space(rng, SpaceShape::mixed(features));
    // centred on zero so no class dominates by offset alone
    let encode = |f: usize, v: &Value| -> f64 {
        let unit = match v {
            Value::Bool(b) => f64::from(u8::from(*b)),
            Value::Category(c) => *c as f64 / (space.atom_count(f).max(2) - 1) as f64,
            Value::Real(x) => crate::number::to_f64(x) / 100.0,
        };
        unit - 0.5
    };
    let informative: Vec<usize> = {
        let mut all: Vec<usize> = (0..features).collect();
        all.shuffle(rng);
        all.truncate((features / 2).max(1));
        all
    };
    let weights: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|f| if informative.contains(&f) { rng.gen_range(-2.0..2.0) } else { 0.0 }).collect())
        .collect();
    let mut data = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let row: Cube = (0..features)
            .map(|f| {
                let v = match &space.get(f).kind {
                    FeatureKind::Boolean => Value::Bool(rng.gen()),
                    FeatureKind::Categorical(values) => Value::Category(rng.gen_range(0..values.len())),
                    FeatureKind::Continuous => Value::Real(Rational::from_integer(rng.gen_range(0..100).into())),
                };
                (f, v)
            })
            .collect();
        let label = (0..classes)
            .map(|c| {
                let s: f64 = row.iter().map(|(f, v)| weights[c][f] * encode(f, v)).sum();
                s + rng.gen_range(-0.3..0.3)
            })
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
            .expect("at least one class");
        data.push(row);
        labels.push(label);
    }
    Dataset { space, rows: data, labels, classes }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Leaf values are rounded to this many decimal places.
    pub leaf_digits: u32,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { rounds: 50, max_depth: 3, learning_rate: 0.3, lambda: 1.0, leaf_digits: 6 }
    }
}

/// Candidate splits: every boolean, every categorical indicator and the
/// midpoints between distinct observed continuous values.
fn candidate_splits(data: &Dataset) -> Vec<SplitPredicate> {
    let mut out = Vec::new();
    for f in 0..data.space.len() {
        match &data.space.get(f).kind {
            FeatureKind::Boolean => out.push(SplitPredicate::IsTrue { feature: f }),
            FeatureKind::Categorical(values) => {
                out.extend((0..values.len()).map(|value| SplitPredicate::IsValue { feature: f, value }))
            }
            FeatureKind::Continuous => {
                let mut seen: Vec<Rational> = data
                    .rows
                    .iter()
                    .filter_map(|r| match r.get(f) {
                        Some(Value::Real(x)) => Some(x.clone()),
                        _ => None,
                    })
                    .collect();
                seen.sort();
                seen.dedup();
                // a handful of quantile cut points keeps training fast
                let step = (seen.len() / 8).max(1);
                for i in (step..seen.len()).step_by(step) {
                    let mid = (&seen[i - 1] + &seen[i]) / Rational::from_integer(2.into());
                    out.push(SplitPredicate::LessThan { feature: f, threshold: mid });
                }
            }
        }
    }
    out
}

/// Softmax gradient boosting with exact greedy depth-limited trees. Leaf
/// values are rounded decimals, so the returned model is exactly
/// representable in the model file.
pub fn train_boosted(data: &Dataset, params: BoostParams) -> (Ensemble, FeatureSpace) {
    let m = data.classes;
    let n = data.rows.len();
    let splits = candidate_splits(data);
    // truth[s][i]: split s holds on row i
    let truth: Vec<Vec<bool>> = splits
        .iter()
        .map(|p| data.rows.iter().map(|r| p.holds(r.get(p.feature()).expect("total rows")).unwrap_or(false)).collect())
        .collect();
    let mut margins = vec![vec![0.0f64; m]; n];
    let mut per_class: Vec<Vec<Tree>> = vec![Vec::new(); m];
    let scale = 10f64.powi(params.leaf_digits as i32);
    for _ in 0..params.rounds {
        let probs: Vec<Vec<f64>> = margins
            .iter()
            .map(|row| {
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = row.iter().map(|v| (v - mx).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            })
            .collect();
        for (c, trees) in per_class.iter_mut().enumerate() {
            let grad: Vec<f64> = (0..n).map(|i| probs[i][c] - f64::from(u8::from(data.labels[i] == c))).collect();
            let hess: Vec<f64> = (0..n).map(|i| (probs[i][c] * (1.0 - probs[i][c])).max(1e-6)).collect();
            let mut nodes = Vec::new();
            let rows: Vec<usize> = (0..n).collect();
            let fit = Fit { splits: &splits, truth: &truth, grad: &grad, hess: &hess, params: &params, scale };
            fit.grow(&rows, params.max_depth, &mut nodes);
            let tree = Tree::new(nodes).expect("fitted trees are well formed");
            for (i, row) in data.rows.iter().enumerate() {
                let leaf = crate::semantics::leaf_value(&tree, &data.space, row).expect("total rows");
                margins[i][c] += crate::number::to_f64(leaf);
            }
            trees.push(tree);
        }
    }
    let trees = per_class.into_iter().flatten().collect();
    let ensemble = Ensemble::new(m, params.rounds, trees, None).expect("shape is consistent");
    let space = with_thresholds(&data.space, &ensemble);
    (ensemble, space)
}

struct Fit<'a> {
    splits: &'a [SplitPredicate],
    truth: &'a [Vec<bool>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a BoostParams,
    scale: f64,
}

impl Fit<'_> {
    fn leaf(&self, rows: &[usize]) -> Rational {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let w = -g / (h + self.params.lambda) * self.params.learning_rate;
        let units = (w * self.scale).round() as i64;
        Rational::new(units.into(), (self.scale as i64).into())
    }

    fn gain(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        g * g / (h + self.params.lambda)
    }

    fn grow(&self, rows: &[usize], depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let id = nodes.len();
        let best = if depth == 0 || rows.len() < 2 {
            None
        } else {
            let parent = self.gain(rows);
            let mut best: Option<(f64, usize)> = None;
            for (s, holds) in self.truth.iter().enumerate() {
                let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| holds[i]);
                if yes.is_empty() || no.is_empty() {
                    continue;
                }
                let gain = self.gain(&yes) + self.gain(&no) - parent;
                if gain > 1e-9 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, s));
                }
            }
            best
        };
        let Some((_, s)) = best else {
            nodes.push(TreeNode::Leaf { value: self.leaf(rows) });
            return id;
        };
        let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.truth[s][i]);
        nodes.push(TreeNode::Leaf { value: Rational::one() });
        let left = self.grow(&no, depth - 1, nodes);
        let right = self.grow(&yes, depth - 1, nodes);
        nodes[id] = TreeNode::Internal { pred: self.splits[s].clone(), left, right };
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_ensembles_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let space = random_space(&mut rng, SpaceShape::mixed(6));
            let (e, s) =
                random_ensemble(&mut rng, &space, EnsembleShape { classes: 3, trees_per_class: 2, max_depth: 3 });
            e.check_against(&s).unwrap();
            let x = random_instance(&mut rng, &s);
            assert!(x.is_total(&s));
            x.check(&s).unwrap();
            semantics::predict(&e, &s, &x).unwrap();
        }
    }

    #[test]
    fn training_beats_the_majority_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = synthetic_dataset(&mut rng, 8, 2, 300);
        let (e, s) = train_boosted(&data, BoostParams { rounds: 10, ..Default::default() });
        let correct = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(r, &l)| semantics::predict(&e, &s, r).unwrap().class == l)
            .count();
        let majority =
            data.labels.iter().filter(|&&l| l == 0).count().max(data.labels.iter().filter(|&&l| l == 1).count());
        assert!(correct > majority, "{correct} vs majority {majority}");
    }

    #[test]
    fn same_seed_same_model() {
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let data = synthetic_dataset(&mut rng, 6, 3, 100);
            train_boosted(&data, BoostParams { rounds: 3, ..Default::default() }).0
        };
        assert_eq!(build(), build());
    }
}
