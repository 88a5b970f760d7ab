//! Abductive explanations on top of the oracle: subset-minimal and
//! cardinality-minimal explanations, plus validation, repair and refinement
//! of candidate explanations produced elsewhere.

mod audit;

pub use audit::{audit, PhaseTimings, Status, Verdict};

use std::fmt;

use crate::hitting::{minimum_hitting_set, HitError, HitProblem};
use crate::model::{Cube, FeatureSpace};
use crate::oracle::{Counterexample, Limit, Oracle, OracleError};

pub const DEFAULT_MAX_HITTING_SETS: usize = 100_000;
pub const DEFAULT_MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationKind {
    SubsetMinimal,
    CardinalityMinimal,
    Repaired,
    Refined,
}

impl fmt::Display for ExplanationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplanationKind::SubsetMinimal => "subset-minimal",
            ExplanationKind::CardinalityMinimal => "cardinality-minimal",
            ExplanationKind::Repaired => "repaired",
            ExplanationKind::Refined => "refined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Minimality {
    #[default]
    Subset,
    Cardinality,
}

/// An entailing sub-cube of `instance` for class `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub literals: Cube,
    pub kind: ExplanationKind,
    pub instance: Cube,
    pub target: usize,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn render(&self, space: &FeatureSpace) -> Vec<String> {
        self.literals.render(space)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExplainError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("instance is predicted as class {actual}, not {expected}")]
    WrongPrediction { expected: usize, actual: usize },
    #[error("candidate is not a sub-cube of the instance")]
    NotSubset,
    #[error("candidate does not entail the prediction; repair it instead of refining")]
    NotEntailing,
    #[error(transparent)]
    Hitting(#[from] HitError),
}

impl ExplainError {
    pub fn is_indeterminate(&self) -> bool {
        matches!(self, ExplainError::Oracle(e) if e.is_indeterminate())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplainOptions {
    /// Deletion order for the linear scans; features not listed follow in
    /// ascending index order.
    pub seed_order: Option<Vec<usize>>,
    /// Cap on correction sets collected by the hitting-set loop.
    pub max_hitting_sets: usize,
    /// Shrink each correction set by greedy literal re-addition.
    pub shrink_correction_sets: bool,
    /// Counterexamples attached to an optimistic verdict.
    pub max_counterexamples: usize,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            seed_order: None,
            max_hitting_sets: DEFAULT_MAX_HITTING_SETS,
            shrink_correction_sets: true,
            max_counterexamples: DEFAULT_MAX_COUNTEREXAMPLES,
        }
    }
}

pub struct Explainer<'a> {
    oracle: &'a Oracle,
    options: ExplainOptions,
}

impl<'a> Explainer<'a> {
    pub fn new(oracle: &'a Oracle) -> Self {
        Self { oracle, options: ExplainOptions::default() }
    }

    pub fn with_options(oracle: &'a Oracle, options: ExplainOptions) -> Self {
        Self { oracle, options }
    }

    pub fn oracle(&self) -> &Oracle {
        self.oracle
    }

    pub fn options(&self) -> &ExplainOptions {
        &self.options
    }

    fn check_prediction(&self, instance: &Cube, target: usize) -> Result<(), ExplainError> {
        let actual = self.oracle.predict(instance)?.class;
        if actual != target {
            return Err(ExplainError::WrongPrediction { expected: target, actual });
        }
        Ok(())
    }

    fn relevant_part(&self, cube: &Cube) -> Cube {
        cube.restrict(self.oracle.relevant_features().iter().copied())
    }

    /// Seed order restricted to the features of `cube`.
    fn scan_order(&self, cube: &Cube) -> Vec<usize> {
        let mut order: Vec<usize> = Vec::with_capacity(cube.len());
        if let Some(seed) = &self.options.seed_order {
            for &f in seed {
                if cube.contains(f) && !order.contains(&f) {
                    order.push(f);
                }
            }
        }
        for f in cube.features() {
            if !order.contains(&f) {
                order.push(f);
            }
        }
        order
    }

    /// Drops each literal of `order` from `current` if the rest still entails.
    fn deletion_pass(&self, current: &mut Cube, order: &[usize], target: usize) -> Result<(), ExplainError> {
        for &f in order {
            if !current.contains(f) {
                continue;
            }
            let trial = current.without(f);
            if self.oracle.entails(&trial, target)? {
                *current = trial;
            }
        }
        Ok(())
    }

    pub fn subset_minimal(&self, instance: &Cube, target: usize) -> Result<Explanation, ExplainError> {
        self.check_prediction(instance, target)?;
        let literals = self.subset_minimal_of(self.relevant_part(instance), target)?;
        Ok(Explanation { literals, kind: ExplanationKind::SubsetMinimal, instance: instance.clone(), target })
    }

    fn subset_minimal_of(&self, base: Cube, target: usize) -> Result<Cube, ExplainError> {
        let order = self.scan_order(&base);
        let mut current = base;
        self.deletion_pass(&mut current, &order, target)?;
        Ok(current)
    }

    pub fn cardinality_minimal(&self, instance: &Cube, target: usize) -> Result<Explanation, ExplainError> {
        self.check_prediction(instance, target)?;
        let literals = self.cardinality_minimal_of(&self.relevant_part(instance), target)?;
        Ok(Explanation { literals, kind: ExplanationKind::CardinalityMinimal, instance: instance.clone(), target })
    }

    /// Implicit hitting-set loop: the smallest feature set hitting every
    /// correction set found so far is checked for entailment; a
    /// counterexample contributes the features on which it differs.
    fn cardinality_minimal_of(&self, base: &Cube, target: usize) -> Result<Cube, ExplainError> {
        let space = self.oracle.space();
        let universe = base.features();
        let mut problem = HitProblem::new(universe.clone());
        loop {
            let hitting = minimum_hitting_set(&problem)?;
            let candidate = base.restrict(hitting.iter().copied());
            let Some(cex) = self.oracle.find_counterexample(&candidate, target)? else {
                return Ok(candidate);
            };
            if problem.sets.len() >= self.options.max_hitting_sets {
                return Err(OracleError::Indeterminate(Limit::Iterations(self.options.max_hitting_sets)).into());
            }
            let mut correction = differing_features(space, base, &cex, &universe);
            if correction.is_empty() {
                return Err(
                    OracleError::Internal("counterexample agrees with the instance on every feature".into()).into()
                );
            }
            if self.options.shrink_correction_sets {
                correction = self.shrink_correction(base, &universe, correction, target)?;
            }
            problem.add_set(correction);
        }
    }

    /// Re-fixes features of a correction set one at a time while the
    /// remaining free features still admit a counterexample.
    fn shrink_correction(
        &self,
        base: &Cube,
        universe: &[usize],
        mut correction: Vec<usize>,
        target: usize,
    ) -> Result<Vec<usize>, ExplainError> {
        for f in correction.clone() {
            let trial: Vec<usize> = correction.iter().copied().filter(|&g| g != f).collect();
            let fixed = base.restrict(universe.iter().copied().filter(|g| !trial.contains(g)));
            if !self.oracle.entails(&fixed, target)? {
                correction = trial;
            }
        }
        Ok(correction)
    }

    /// `None` iff `candidate` entails `target`; otherwise a verified
    /// counterexample.
    pub fn validate(
        &self,
        instance: &Cube,
        target: usize,
        candidate: &Cube,
    ) -> Result<Option<Counterexample>, ExplainError> {
        if !candidate.is_subset_of(instance) {
            return Err(ExplainError::NotSubset);
        }
        Ok(self.oracle.find_counterexample(candidate, target)?)
    }

    /// Deletion scan that visits the literals outside `broken` first and
    /// the literals of `broken` last.
    pub fn repair(&self, instance: &Cube, target: usize, broken: &Cube) -> Result<Explanation, ExplainError> {
        if !broken.is_subset_of(instance) {
            return Err(ExplainError::NotSubset);
        }
        self.check_prediction(instance, target)?;
        let mut current = self.relevant_part(instance);
        let (outside, inside): (Vec<usize>, Vec<usize>) =
            current.features().into_iter().partition(|f| !broken.contains(*f));
        self.deletion_pass(&mut current, &outside, target)?;
        self.deletion_pass(&mut current, &inside, target)?;
        Ok(Explanation { literals: current, kind: ExplanationKind::Repaired, instance: instance.clone(), target })
    }

    /// Minimizes an entailing candidate; the result is a subset of it.
    pub fn refine(
        &self,
        instance: &Cube,
        target: usize,
        candidate: &Cube,
        mode: Minimality,
    ) -> Result<Explanation, ExplainError> {
        if !candidate.is_subset_of(instance) {
            return Err(ExplainError::NotSubset);
        }
        if !self.oracle.entails(candidate, target)? {
            return Err(ExplainError::NotEntailing);
        }
        let base = self.relevant_part(candidate);
        let literals = match mode {
            Minimality::Subset => self.subset_minimal_of(base, target)?,
            Minimality::Cardinality => self.cardinality_minimal_of(&base, target)?,
        };
        Ok(Explanation { literals, kind: ExplanationKind::Refined, instance: instance.clone(), target })
    }

    pub fn explain(&self, instance: &Cube, target: usize, mode: Minimality) -> Result<Explanation, ExplainError> {
        match mode {
            Minimality::Subset => self.subset_minimal(instance, target),
            Minimality::Cardinality => self.cardinality_minimal(instance, target),
        }
    }

    /// Re-queries the oracle: the explanation must entail its target and,
    /// when `minimal`, lose entailment when any single literal is dropped.
    pub fn check_explanation(&self, explanation: &Explanation, minimal: bool) -> Result<bool, ExplainError> {
        if !explanation.literals.is_subset_of(&explanation.instance) {
            return Ok(false);
        }
        if !self.oracle.entails(&explanation.literals, explanation.target)? {
            return Ok(false);
        }
        if minimal {
            for f in explanation.literals.features() {
                if self.oracle.entails(&explanation.literals.without(f), explanation.target)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Features of `universe` whose atom differs between `instance` and the
/// counterexample.
fn differing_features(space: &FeatureSpace, instance: &Cube, cex: &Counterexample, universe: &[usize]) -> Vec<usize> {
    universe
        .iter()
        .copied()
        .filter(|&f| {
            let a = instance.get(f).and_then(|v| space.atom_of(f, v));
            let b = cex.instance.get(f).and_then(|v| space.atom_of(f, v));
            a != b
        })
        .collect()
}

/// Candidate cube naming features of `instance`; values come from the
/// instance.
pub fn candidate_from_features(instance: &Cube, features: &[usize]) -> Cube {
    instance.restrict(features.iter().copied())
}
