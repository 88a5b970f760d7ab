//! Exact minimum hitting sets over small universes of feature indices.
//!
//! Sizes are searched upward from a lower bound (a maximal family of
//! pairwise-disjoint sets) to the size of a greedy solution. At each size a
//! depth-first search enumerates candidate sets in lexicographic order, so
//! the first hit is the lexicographically smallest minimum hitting set.

use fixedbitset::FixedBitSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HitError {
    #[error("set {0} is empty")]
    EmptySet(usize),
    #[error("set {0} contains {1}, which is outside the universe")]
    OutsideUniverse(usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HitProblem {
    pub universe: Vec<usize>,
    pub sets: Vec<Vec<usize>>,
}

impl HitProblem {
    pub fn new(universe: Vec<usize>) -> Self {
        Self { universe, sets: Vec::new() }
    }

    pub fn add_set(&mut self, set: Vec<usize>) {
        self.sets.push(set);
    }

    fn validate(&self) -> Result<(), HitError> {
        for (i, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(HitError::EmptySet(i));
            }
            if let Some(&x) = set.iter().find(|x| !self.universe.contains(x)) {
                return Err(HitError::OutsideUniverse(i, x));
            }
        }
        Ok(())
    }
}

/// Returns a minimum-cardinality set intersecting every set of `problem`,
/// lexicographically smallest (by ascending element) among the minimum ones.
pub fn minimum_hitting_set(problem: &HitProblem) -> Result<Vec<usize>, HitError> {
    problem.validate()?;
    let mut universe = problem.universe.clone();
    universe.sort_unstable();
    universe.dedup();
    let n = universe.len();
    let position = |x: usize| universe.binary_search(&x).expect("validated");
    let mut sets: Vec<FixedBitSet> = problem
        .sets
        .iter()
        .map(|s| {
            let mut b = FixedBitSet::with_capacity(n);
            for &x in s {
                b.insert(position(x));
            }
            b
        })
        .collect();
    // supersets of other sets add no constraint
    sets.sort_by_key(|s| s.count_ones(..));
    let mut kept: Vec<FixedBitSet> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    let sets = kept;
    if sets.is_empty() {
        return Ok(Vec::new());
    }

    let all: Vec<usize> = (0..sets.len()).collect();
    let lower = disjoint_lower_bound(&sets, &all, 0);
    let upper = greedy(&sets, n).len();
    let mut chosen = Vec::with_capacity(upper);
    for k in lower..=upper {
        if lex_search(&sets, n, k, 0, &mut chosen, &all) {
            return Ok(chosen.iter().map(|&p| universe[p]).collect());
        }
    }
    unreachable!("the greedy solution has size {upper}")
}

/// Greedy cover: repeatedly take the element hitting most unhit sets.
fn greedy(sets: &[FixedBitSet], n: usize) -> Vec<usize> {
    let mut unhit: Vec<&FixedBitSet> = sets.iter().collect();
    let mut out = Vec::new();
    while !unhit.is_empty() {
        let best = (0..n)
            .max_by_key(|&e| (unhit.iter().filter(|s| s.contains(e)).count(), std::cmp::Reverse(e)))
            .expect("non-empty universe");
        out.push(best);
        unhit.retain(|s| !s.contains(best));
    }
    out
}

/// Size of a greedily built family of pairwise-disjoint sets, counting only
/// elements `>= from`.
fn disjoint_lower_bound(sets: &[FixedBitSet], unhit: &[usize], from: usize) -> usize {
    let mut used = FixedBitSet::with_capacity(sets.first().map_or(0, FixedBitSet::len));
    let mut count = 0;
    for &i in unhit {
        let mut s = sets[i].clone();
        s.set_range(..from.min(s.len()), false);
        if s.is_disjoint(&used) {
            used.union_with(&s);
            count += 1;
        }
    }
    count
}

/// Finds the lexicographically first hitting set of exactly `k` elements
/// drawn from positions `>= from`, extending `chosen`.
fn lex_search(sets: &[FixedBitSet], n: usize, k: usize, from: usize, chosen: &mut Vec<usize>, unhit: &[usize]) -> bool {
    if unhit.is_empty() {
        // sizes below k were already refuted, so chosen.len() == k here
        return true;
    }
    let remaining = k - chosen.len();
    if remaining == 0 {
        return false;
    }
    // every unhit set must still have an element >= from
    if unhit.iter().any(|&i| sets[i].ones().all(|e| e < from)) {
        return false;
    }
    if disjoint_lower_bound(sets, unhit, from) > remaining {
        return false;
    }
    for e in from..n {
        chosen.push(e);
        let rest: Vec<usize> = unhit.iter().copied().filter(|&i| !sets[i].contains(e)).collect();
        if lex_search(sets, n, k, e + 1, chosen, &rest) {
            return true;
        }
        chosen.pop();
    }
    false
}
