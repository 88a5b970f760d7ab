//! Exact decision procedure for `fixed ∧ M ∧ ¬π`.
//!
//! The ensemble is compiled onto finite atom domains (see
//! [`FeatureSpace::atom_count`]). Entailment runs one best-first
//! branch-and-bound per adversary class over [`AbstractCell`]s; the bound of
//! a cell is the sum of the adversary's largest reachable leaves minus the
//! sum of the target's smallest reachable leaves. A branch is closed once
//! its bound rules the adversary out, and a counterexample is reported once
//! every tree of both classes has a single reachable leaf.

mod compiled;
pub mod reference;
mod search;

use std::time::Duration;

use num_bigint::BigInt;

use crate::model::{AbstractCell, Cube, Ensemble, FeatureSpace};
use crate::number::Rational;
use crate::semantics::{self, Prediction};
use compiled::{fits_i128, Compiled, Score};
use search::Meter;

pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { node_limit: DEFAULT_NODE_LIMIT, time_limit: Some(DEFAULT_TIME_LIMIT) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Nodes(u64),
    Time(Duration),
    Cells(u128),
    Iterations(usize),
}

impl std::fmt::Display for Limit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Limit::Nodes(n) => write!(f, "node budget of {n}"),
            Limit::Time(d) => write!(f, "time budget of {:.3}s", d.as_secs_f64()),
            Limit::Cells(n) => write!(f, "enumeration cap of {n} cells"),
            Limit::Iterations(n) => write!(f, "iteration cap of {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    /// The query could not be decided within its budget.
    #[error("indeterminate: exceeded {0}")]
    Indeterminate(Limit),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("internal verification failure: {0}")]
    Internal(String),
}

impl OracleError {
    pub fn is_indeterminate(&self) -> bool {
        matches!(self, OracleError::Indeterminate(_))
    }
}

/// A verified total instance extending the queried cube whose predicted
/// class differs from the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub instance: Cube,
    pub predicted: usize,
    pub scores: Vec<Rational>,
    pub cell: AbstractCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Enumeration {
    pub counterexamples: Vec<Counterexample>,
    /// The budget ran out before the search space was exhausted.
    pub truncated_by_budget: bool,
}

#[derive(Debug, Clone)]
enum Engine {
    Fixed(Compiled<i128>),
    Big(Compiled<BigInt>),
}

/// Dispatches a generic body over the compiled engine.
macro_rules! with_engine {
    ($self:expr, $model:ident => $body:expr) => {
        match &$self.engine {
            Engine::Fixed($model) => $body,
            Engine::Big($model) => $body,
        }
    };
}

/// Decision procedure over one ensemble. Immutable and `Sync`; one oracle
/// may serve concurrent queries.
#[derive(Debug, Clone)]
pub struct Oracle {
    ensemble: Ensemble,
    space: FeatureSpace,
    engine: Engine,
    budget: Budget,
    relevant: Vec<usize>,
}

impl Oracle {
    pub fn new(ensemble: &Ensemble, space: &FeatureSpace) -> Self {
        Self::with_budget(ensemble, space, Budget::default())
    }

    pub fn with_budget(ensemble: &Ensemble, space: &FeatureSpace, budget: Budget) -> Self {
        let engine = if fits_i128(ensemble) { Compiled::new(ensemble, space).map(Engine::Fixed) } else { None }
            .unwrap_or_else(|| Engine::Big(Compiled::new(ensemble, space).expect("BigInt scores always fit")));
        Self { ensemble: ensemble.clone(), space: space.clone(), engine, budget, relevant: ensemble.used_features() }
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    /// Features referenced by some split, ascending.
    pub fn relevant_features(&self) -> &[usize] {
        &self.relevant
    }

    pub fn predict(&self, instance: &Cube) -> Result<Prediction, OracleError> {
        semantics::predict(&self.ensemble, &self.space, instance).map_err(|e| OracleError::InvalidQuery(e.to_string()))
    }

    fn root(&self, fixed: &Cube, target: usize) -> Result<AbstractCell, OracleError> {
        if target >= self.ensemble.num_classes() {
            return Err(OracleError::InvalidQuery(format!("class {target} out of range")));
        }
        AbstractCell::from_cube(&self.space, fixed).map_err(OracleError::InvalidQuery)
    }

    /// True iff every total extension of `fixed` is predicted as `target`.
    pub fn entails(&self, fixed: &Cube, target: usize) -> Result<bool, OracleError> {
        Ok(self.find_counterexample(fixed, target)?.is_none())
    }

    /// Upper bound on `v_adversary - v_target` over `cell`.
    pub fn max_margin_bound(&self, cell: &AbstractCell, adversary: usize, target: usize) -> Rational {
        with_engine!(self, model => {
            let bound = search::margin_bound(model, cell, adversary, target);
            model.to_rational(&bound)
        })
    }

    pub fn find_counterexample(&self, fixed: &Cube, target: usize) -> Result<Option<Counterexample>, OracleError> {
        let root = self.root(fixed, target)?;
        let mut meter = Meter::new(self.budget);
        let found = with_engine!(self, model => self.search_all_adversaries(model, &root, target, &mut meter))?;
        found.map(|cell| self.materialize(cell, fixed, target)).transpose()
    }

    fn search_all_adversaries<S: Score>(
        &self,
        model: &Compiled<S>,
        root: &AbstractCell,
        target: usize,
        meter: &mut Meter,
    ) -> Result<Option<AbstractCell>, OracleError> {
        let mut order: Vec<(S, usize)> = (0..model.num_classes)
            .filter(|&c| c != target)
            .map(|c| (search::margin_bound(model, root, c, target), c))
            .collect();
        // descending bound, ascending class on ties
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, adversary) in order {
            if let Some(cell) = search::search_adversary(model, root, adversary, target, meter)? {
                return Ok(Some(cell));
            }
        }
        Ok(None)
    }

    fn materialize(&self, cell: AbstractCell, fixed: &Cube, target: usize) -> Result<Counterexample, OracleError> {
        let instance = cell.witness(&self.space, fixed);
        let prediction = self.predict(&instance)?;
        if prediction.class == target {
            return Err(OracleError::Internal(format!(
                "witness {:?} re-predicts to the target class {target}",
                instance.render(&self.space)
            )));
        }
        if !fixed.is_subset_of(&instance) {
            return Err(OracleError::Internal("witness does not extend the fixed literals".into()));
        }
        Ok(Counterexample { instance, predicted: prediction.class, scores: prediction.scores, cell })
    }

    /// Up to `limit` counterexamples, one per atom-level cell over the
    /// relevant free features. Running out of budget returns what was found
    /// so far with `truncated_by_budget` set.
    pub fn enumerate_counterexamples(
        &self,
        fixed: &Cube,
        target: usize,
        limit: usize,
    ) -> Result<Enumeration, OracleError> {
        if limit == 0 {
            return Err(OracleError::InvalidQuery("limit must be at least 1".into()));
        }
        let root = self.root(fixed, target)?;
        let mut meter = Meter::new(self.budget);
        let mut out = Enumeration::default();
        let free: Vec<usize> = self.relevant.iter().copied().filter(|f| !fixed.contains(*f)).collect();
        let result = with_engine!(self, model => search::misclassified_cells(model, &root, target, &mut meter, |cell, _| {
            for point in atom_points(cell, &free) {
                out.counterexamples.push(self.materialize(point, fixed, target)?);
                if out.counterexamples.len() >= limit {
                    return Ok(false);
                }
            }
            Ok(true)
        }));
        match result {
            Ok(()) => Ok(out),
            Err(OracleError::Indeterminate(_)) => {
                out.truncated_by_budget = true;
                Ok(out)
            }
            Err(e) => Err(e),
        }
    }
}

/// Every refinement of `cell` with singleton domains on `features`.
pub(crate) fn atom_points<'a>(
    cell: &'a AbstractCell,
    features: &'a [usize],
) -> impl Iterator<Item = AbstractCell> + 'a {
    let choices: Vec<Vec<usize>> = features.iter().map(|&f| cell.domain(f).ones().collect()).collect();
    let mut odometer = vec![0usize; features.len()];
    let mut done = choices.iter().any(Vec::is_empty);
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let mut point = cell.clone();
        for (i, &f) in features.iter().enumerate() {
            let d = point.domain_mut(f);
            d.clear();
            d.insert(choices[i][odometer[i]]);
        }
        // advance, last feature fastest
        done = true;
        for i in (0..features.len()).rev() {
            odometer[i] += 1;
            if odometer[i] < choices[i].len() {
                done = false;
                break;
            }
            odometer[i] = 0;
        }
        Some(point)
    })
}
