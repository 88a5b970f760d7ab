//! Best-first branch-and-bound over abstract cells.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::Instant;

use super::compiled::{Compiled, Score};
use super::{Budget, Limit, OracleError};
use crate::model::AbstractCell;

/// Node and wall-clock accounting shared by every sub-search of one query.
pub(crate) struct Meter {
    budget: Budget,
    start: Instant,
    pub nodes: u64,
}

impl Meter {
    pub fn new(budget: Budget) -> Self {
        Self { budget, start: Instant::now(), nodes: 0 }
    }

    pub fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget.node_limit {
            return Err(OracleError::Indeterminate(Limit::Nodes(self.budget.node_limit)));
        }
        if self.nodes.is_multiple_of(256) {
            if let Some(limit) = self.budget.time_limit {
                if self.start.elapsed() > limit {
                    return Err(OracleError::Indeterminate(Limit::Time(limit)));
                }
            }
        }
        Ok(())
    }
}

/// Whether a margin upper bound still admits a win for the adversary.
fn admissible<S: Score>(bound: &S, ties_win: bool) -> bool {
    match bound.cmp(&S::zero()) {
        Ordering::Greater => true,
        Ordering::Equal => ties_win,
        Ordering::Less => false,
    }
}

struct Entry<S> {
    bound: S,
    seq: Reverse<u64>,
    cell: AbstractCell,
    branch: Option<usize>,
}

impl<S: Ord> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Ord> Eq for Entry<S> {}

impl<S: Ord> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Ord> Ord for Entry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // highest bound first, then oldest
        self.bound.cmp(&other.bound).then(self.seq.cmp(&other.seq))
    }
}

pub(crate) fn margin_bound<S: Score>(model: &Compiled<S>, cell: &AbstractCell, adversary: usize, target: usize) -> S {
    let reach = model.reach(cell, Some(&[adversary, target]));
    reach.max[adversary].clone() - reach.min[target].clone()
}

/// Searches `root` for a cell where `adversary` beats `target` on every
/// point. Returns that cell, or `None` when the adversary can never win.
pub(crate) fn search_adversary<S: Score>(
    model: &Compiled<S>,
    root: &AbstractCell,
    adversary: usize,
    target: usize,
    meter: &mut Meter,
) -> Result<Option<AbstractCell>, OracleError> {
    let ties_win = adversary < target;
    let classes = [adversary, target];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    let mut enqueue = |heap: &mut BinaryHeap<Entry<S>>, cell: AbstractCell| {
        let reach = model.reach(&cell, Some(&classes));
        let bound = reach.max[adversary].clone() - reach.min[target].clone();
        if !admissible(&bound, ties_win) {
            return;
        }
        let branch = if reach.resolved { None } else { model.branching_predicate(&reach) };
        heap.push(Entry { bound, seq: Reverse(seq), cell, branch });
        seq += 1;
    };

    if root.is_empty() {
        return Ok(None);
    }
    enqueue(&mut heap, root.clone());
    while let Some(entry) = heap.pop() {
        meter.tick()?;
        match entry.branch {
            None => return Ok(Some(entry.cell)),
            Some(p) => {
                let (no, yes) = model.split(&entry.cell, p);
                enqueue(&mut heap, no);
                enqueue(&mut heap, yes);
            }
        }
    }
    Ok(None)
}

/// Visits every fully resolved sub-cell of `root` in which the predicted
/// class differs from `target`, depth first, false branch first. `visit`
/// returns `false` to stop early.
pub(crate) fn misclassified_cells<S: Score>(
    model: &Compiled<S>,
    root: &AbstractCell,
    target: usize,
    meter: &mut Meter,
    mut visit: impl FnMut(&AbstractCell, usize) -> Result<bool, OracleError>,
) -> Result<(), OracleError> {
    let m = model.num_classes;
    if root.is_empty() {
        return Ok(());
    }
    let mut stack = vec![root.clone()];
    while let Some(cell) = stack.pop() {
        meter.tick()?;
        let reach = model.reach(&cell, None);
        let any_adversary = (0..m).filter(|&c| c != target).any(|c| {
            let bound = reach.max[c].clone() - reach.min[target].clone();
            admissible(&bound, c < target)
        });
        if !any_adversary {
            continue;
        }
        if reach.resolved {
            // max == min for every class here
            let scores = &reach.max;
            let mut winner = 0;
            for c in 1..m {
                if scores[c] > scores[winner] {
                    winner = c;
                }
            }
            if winner != target && !visit(&cell, winner)? {
                return Ok(());
            }
            continue;
        }
        let p = model.branching_predicate(&reach).expect("unresolved cell has an ambiguous predicate");
        let (no, yes) = model.split(&cell, p);
        for child in [yes, no] {
            if !child.is_empty() {
                stack.push(child);
            }
        }
    }
    Ok(())
}
