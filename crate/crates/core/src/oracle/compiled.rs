//! Ensemble lowered onto atom domains, with leaf scores scaled to integers
//! over one common denominator.

use std::fmt::Debug;
use std::ops::{AddAssign, Sub};

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::model::{AbstractCell, Ensemble, FeatureSpace, SplitPredicate, TreeNode};
use crate::number::Rational;

/// Integer score numerator. `i128` is used whenever the scaled leaves fit,
/// `BigInt` otherwise.
pub(crate) trait Score:
    Clone + Ord + Zero + Sub<Output = Self> + for<'a> AddAssign<&'a Self> + Debug + Send + Sync
{
    fn from_bigint(value: &BigInt) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
}

impl Score for i128 {
    fn from_bigint(value: &BigInt) -> Option<Self> {
        value.to_i128()
    }

    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Score for BigInt {
    fn from_bigint(value: &BigInt) -> Option<Self> {
        Some(value.clone())
    }

    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum CNode<S> {
    Internal { feature: usize, pred: usize, left: u32, right: u32 },
    Leaf { score: S },
}

/// Distinct split predicate: the atoms of `feature` on which it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PredicateAtoms {
    pub feature: usize,
    pub atoms: FixedBitSet,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled<S> {
    pub num_classes: usize,
    pub trees_per_class: usize,
    pub trees: Vec<Vec<CNode<S>>>,
    /// Sorted by (feature, lowest atom, size), which doubles as the
    /// deterministic tie-break order for branching.
    pub predicates: Vec<PredicateAtoms>,
    pub denominator: BigInt,
}

/// Outcome of walking a set of trees over a cell.
#[derive(Debug, Clone)]
pub(crate) struct Reach<S> {
    /// Per class: sum over its trees of the max / min reachable leaf.
    pub max: Vec<S>,
    pub min: Vec<S>,
    /// Number of walked trees in which each predicate is ambiguous.
    pub ambiguous: Vec<u32>,
    pub resolved: bool,
}

pub(crate) fn predicate_atoms(space: &FeatureSpace, pred: &SplitPredicate) -> FixedBitSet {
    let f = pred.feature();
    let n = space.atom_count(f);
    let mut set = FixedBitSet::with_capacity(n);
    match pred {
        SplitPredicate::IsTrue { .. } => set.insert(1),
        SplitPredicate::IsValue { value, .. } => set.insert(*value),
        SplitPredicate::LessThan { threshold, .. } => {
            let j = space.get(f).thresholds.partition_point(|t| t < threshold);
            set.insert_range(..(j + 1).min(n));
        }
    }
    set
}

fn common_denominator(ensemble: &Ensemble) -> BigInt {
    ensemble.trees().iter().flat_map(|t| t.leaves()).fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Chooses the integer width able to hold every partial sum.
pub(crate) fn fits_i128(ensemble: &Ensemble) -> bool {
    let d = Rational::from_integer(common_denominator(ensemble));
    let trees = BigInt::from(ensemble.trees().len().max(1));
    let limit = BigInt::from(i128::MAX) / (trees * 4);
    ensemble.trees().iter().flat_map(|t| t.leaves()).all(|v| (v * &d).to_integer().abs() <= limit)
}

impl<S: Score> Compiled<S> {
    pub fn new(ensemble: &Ensemble, space: &FeatureSpace) -> Option<Self> {
        let denominator = common_denominator(ensemble);
        let scale = Rational::from_integer(denominator.clone());

        let mut predicates: Vec<PredicateAtoms> = Vec::new();
        for tree in ensemble.trees() {
            for pred in tree.predicates() {
                let p = PredicateAtoms { feature: pred.feature(), atoms: predicate_atoms(space, pred) };
                if !predicates.contains(&p) {
                    predicates.push(p);
                }
            }
        }
        predicates.sort_by_key(|p| (p.feature, p.atoms.ones().next(), p.atoms.count_ones(..)));
        let key_of = |space: &FeatureSpace, pred: &SplitPredicate| {
            let p = PredicateAtoms { feature: pred.feature(), atoms: predicate_atoms(space, pred) };
            predicates.iter().position(|q| *q == p).expect("predicate collected above")
        };

        let mut trees = Vec::with_capacity(ensemble.trees().len());
        for tree in ensemble.trees() {
            let mut nodes = Vec::with_capacity(tree.nodes().len());
            for node in tree.nodes() {
                nodes.push(match node {
                    TreeNode::Leaf { value } => {
                        let scaled = (value * &scale).to_integer();
                        CNode::Leaf { score: S::from_bigint(&scaled)? }
                    }
                    TreeNode::Internal { pred, left, right } => CNode::Internal {
                        feature: pred.feature(),
                        pred: key_of(space, pred),
                        left: *left as u32,
                        right: *right as u32,
                    },
                });
            }
            trees.push(nodes);
        }
        Some(Self {
            num_classes: ensemble.num_classes(),
            trees_per_class: ensemble.trees_per_class(),
            trees,
            predicates,
            denominator,
        })
    }

    pub fn to_rational(&self, value: &S) -> Rational {
        Rational::new(value.to_bigint(), self.denominator.clone())
    }

    /// Walks the trees of `classes` (all classes when `None`) over `cell`.
    pub fn reach(&self, cell: &AbstractCell, classes: Option<&[usize]>) -> Reach<S> {
        let mut max = vec![S::zero(); self.num_classes];
        let mut min = vec![S::zero(); self.num_classes];
        let mut ambiguous = vec![0u32; self.predicates.len()];
        let mut resolved = true;
        let mut stack: Vec<u32> = Vec::with_capacity(16);
        let mut seen: Vec<usize> = Vec::with_capacity(8);
        let all: Vec<usize>;
        let classes = match classes {
            Some(c) => c,
            None => {
                all = (0..self.num_classes).collect();
                &all
            }
        };
        for &class in classes {
            let q = self.trees_per_class;
            for tree in &self.trees[q * class..q * (class + 1)] {
                let mut hi: Option<&S> = None;
                let mut lo: Option<&S> = None;
                seen.clear();
                stack.clear();
                stack.push(0);
                while let Some(id) = stack.pop() {
                    match &tree[id as usize] {
                        CNode::Leaf { score } => {
                            if hi.is_none_or(|h| score > h) {
                                hi = Some(score);
                            }
                            if lo.is_none_or(|l| score < l) {
                                lo = Some(score);
                            }
                        }
                        CNode::Internal { feature, pred, left, right } => {
                            let dom = cell.domain(*feature);
                            let atoms = &self.predicates[*pred].atoms;
                            if dom.is_subset(atoms) {
                                stack.push(*right);
                            } else if dom.is_disjoint(atoms) {
                                stack.push(*left);
                            } else {
                                if !seen.contains(pred) {
                                    seen.push(*pred);
                                    ambiguous[*pred] += 1;
                                }
                                resolved = false;
                                stack.push(*right);
                                stack.push(*left);
                            }
                        }
                    }
                }
                max[class] += hi.expect("tree has a leaf");
                min[class] += lo.expect("tree has a leaf");
            }
        }
        Reach { max, min, ambiguous, resolved }
    }

    /// Predicate ambiguous in the most walked trees; ties go to the lowest
    /// predicate order, i.e. lowest feature index first.
    pub fn branching_predicate(&self, reach: &Reach<S>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (p, &count) in reach.ambiguous.iter().enumerate() {
            if count > 0 && best.is_none_or(|b| count > reach.ambiguous[b]) {
                best = Some(p);
            }
        }
        best
    }

    /// Splits `cell` on predicate `p` into (false part, true part).
    pub fn split(&self, cell: &AbstractCell, p: usize) -> (AbstractCell, AbstractCell) {
        let PredicateAtoms { feature, atoms } = &self.predicates[p];
        let mut yes = cell.clone();
        yes.domain_mut(*feature).intersect_with(atoms);
        let mut no = cell.clone();
        no.domain_mut(*feature).difference_with(atoms);
        (no, yes)
    }
}
