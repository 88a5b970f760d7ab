//! Exhaustive reference oracle used to cross-check the search.
//!
//! It enumerates every atom-level point over the relevant features left
//! free by the query and evaluates the original ensemble with a plain tree
//! walk. Nothing here touches the compiled search.

use itertools::Itertools;

use super::{Limit, OracleError};
use crate::model::{Cube, Ensemble, FeatureSpace};
use crate::number::Rational;
use crate::semantics;

/// Default cap on enumerated points.
pub const DEFAULT_CELL_CAP: u128 = 1 << 22;

/// Every total instance extending `fixed`, one per atom-level point over the
/// used features; unused features take their first atom.
pub fn extensions(
    ensemble: &Ensemble,
    space: &FeatureSpace,
    fixed: &Cube,
    cap: u128,
) -> Result<Vec<Cube>, OracleError> {
    let free: Vec<usize> = ensemble.used_features().into_iter().filter(|f| !fixed.contains(*f)).collect();
    let total = free.iter().map(|&f| space.atom_count(f) as u128).fold(1u128, |acc, n| acc.saturating_mul(n));
    if total > cap {
        return Err(OracleError::Indeterminate(Limit::Cells(cap)));
    }
    let mut base = fixed.clone();
    for f in 0..space.len() {
        if !base.contains(f) {
            base.insert(f, space.representative(f, 0, 0));
        }
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut atoms = vec![0usize; free.len()];
    loop {
        let mut instance = base.clone();
        for (i, &f) in free.iter().enumerate() {
            instance.insert(f, space.representative(f, atoms[i], atoms[i]));
        }
        out.push(instance);
        let mut i = free.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            atoms[i] += 1;
            if atoms[i] < space.atom_count(free[i]) {
                break;
            }
            atoms[i] = 0;
        }
    }
}

/// Extensions of `fixed` that are predicted as some class other than `target`.
pub fn misclassified_extensions(
    ensemble: &Ensemble,
    space: &FeatureSpace,
    fixed: &Cube,
    target: usize,
    cap: u128,
) -> Result<Vec<Cube>, OracleError> {
    let mut out = Vec::new();
    for instance in extensions(ensemble, space, fixed, cap)? {
        let p = semantics::predict(ensemble, space, &instance).map_err(|e| OracleError::InvalidQuery(e.to_string()))?;
        if p.class != target {
            out.push(instance);
        }
    }
    Ok(out)
}

pub fn brute_force_entails(
    ensemble: &Ensemble,
    space: &FeatureSpace,
    fixed: &Cube,
    target: usize,
    cap: u128,
) -> Result<bool, OracleError> {
    for instance in extensions(ensemble, space, fixed, cap)? {
        let p = semantics::predict(ensemble, space, &instance).map_err(|e| OracleError::InvalidQuery(e.to_string()))?;
        if p.class != target {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest exact `v_adversary - v_target` over the extensions of `fixed`.
pub fn brute_force_max_margin(
    ensemble: &Ensemble,
    space: &FeatureSpace,
    fixed: &Cube,
    adversary: usize,
    target: usize,
    cap: u128,
) -> Result<Rational, OracleError> {
    let mut best: Option<Rational> = None;
    for instance in extensions(ensemble, space, fixed, cap)? {
        let s = semantics::score(ensemble, space, &instance).map_err(|e| OracleError::InvalidQuery(e.to_string()))?;
        let margin = &s[adversary] - &s[target];
        if best.as_ref().is_none_or(|b| margin > *b) {
            best = Some(margin);
        }
    }
    Ok(best.expect("at least one extension"))
}

/// Smallest subset of `instance` (over used features) that entails
/// `target`, found by scanning subsets in increasing size and, within a
/// size, lexicographic feature order.
pub fn brute_force_minimum_explanation(
    ensemble: &Ensemble,
    space: &FeatureSpace,
    instance: &Cube,
    target: usize,
    cap: u128,
) -> Result<Cube, OracleError> {
    let used = ensemble.used_features();
    for size in 0..=used.len() {
        for combo in used.iter().copied().combinations(size) {
            let subset = instance.restrict(combo);
            if brute_force_entails(ensemble, space, &subset, target, cap)? {
                return Ok(subset);
            }
        }
    }
    Ok(instance.restrict(used))
}

/// Predicted class of every atom-level point over the used features,
/// computed once so that many queries on one model can be answered by
/// scanning.
#[derive(Debug, Clone)]
pub struct TruthTable {
    features: Vec<usize>,
    points: Vec<(Vec<usize>, usize)>,
}

impl TruthTable {
    pub fn new(ensemble: &Ensemble, space: &FeatureSpace, cap: u128) -> Result<Self, OracleError> {
        let features = ensemble.used_features();
        let mut points = Vec::new();
        for instance in extensions(ensemble, space, &Cube::new(), cap)? {
            let p =
                semantics::predict(ensemble, space, &instance).map_err(|e| OracleError::InvalidQuery(e.to_string()))?;
            let atoms = features
                .iter()
                .map(|&f| space.atom_of(f, instance.get(f).expect("total")).expect("in domain"))
                .collect();
            points.push((atoms, p.class));
        }
        Ok(Self { features, points })
    }

    fn matching<'a>(&'a self, space: &FeatureSpace, fixed: &Cube) -> impl Iterator<Item = usize> + 'a {
        let wanted: Vec<(usize, usize)> = self
            .features
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| fixed.get(f).map(|v| (i, space.atom_of(f, v).expect("in domain"))))
            .collect();
        self.points.iter().filter(move |(atoms, _)| wanted.iter().all(|&(i, a)| atoms[i] == a)).map(|(_, class)| *class)
    }

    pub fn entails(&self, space: &FeatureSpace, fixed: &Cube, target: usize) -> bool {
        self.matching(space, fixed).all(|c| c == target)
    }

    /// Number of atom-level points extending `fixed` not predicted as `target`.
    pub fn misclassified(&self, space: &FeatureSpace, fixed: &Cube, target: usize) -> usize {
        self.matching(space, fixed).filter(|&c| c != target).count()
    }

    /// Size of the smallest entailing subset of `instance`.
    pub fn minimum_explanation_size(&self, space: &FeatureSpace, instance: &Cube, target: usize) -> usize {
        for size in 0..=self.features.len() {
            for combo in self.features.iter().copied().combinations(size) {
                if self.entails(space, &instance.restrict(combo), target) {
                    return size;
                }
            }
        }
        self.features.len()
    }
}
