use std::fmt;
use std::time::{Duration, Instant};

use super::{ExplainError, Explainer, Explanation, Minimality};
use crate::model::Cube;
use crate::oracle::{Counterexample, OracleError};

/// Classification of a candidate explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Does not entail the prediction.
    Optimistic,
    /// Entails it but some literal can be dropped.
    Pessimistic,
    /// Entails it and no single literal can be dropped.
    Realistic,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimistic => "optimistic",
            Status::Pessimistic => "pessimistic",
            Status::Realistic => "realistic",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub validation: Duration,
    pub repair: Duration,
    pub refinement: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub counterexamples: Vec<Counterexample>,
    pub repaired: Option<Explanation>,
    pub refined: Option<Explanation>,
    pub timings: PhaseTimings,
    /// Set when the follow-up phase (repair or refinement) did not finish;
    /// the status itself is still decided.
    pub incomplete: Option<OracleError>,
}

impl Verdict {
    /// The explanation that replaces the candidate: the repair, the
    /// refinement, or `None` when neither finished.
    pub fn corrected(&self) -> Option<&Explanation> {
        self.repaired.as_ref().or(self.refined.as_ref())
    }
}

/// Validates `candidate`; repairs it when it is optimistic and refines it
/// otherwise. At most `max_counterexamples` counterexamples are kept.
pub fn audit(
    explainer: &Explainer<'_>,
    instance: &Cube,
    target: usize,
    candidate: &Cube,
) -> Result<Verdict, ExplainError> {
    let max_cex = explainer.options().max_counterexamples.max(1);
    let mut timings = PhaseTimings::default();

    let start = Instant::now();
    let first = explainer.validate(instance, target, candidate)?;
    let mut counterexamples = Vec::new();
    if let Some(cex) = first {
        if max_cex > 1 {
            match explainer.oracle().enumerate_counterexamples(candidate, target, max_cex) {
                Ok(found) => counterexamples = found.counterexamples,
                Err(e) if e.is_indeterminate() => {}
                Err(e) => return Err(e.into()),
            }
        }
        if counterexamples.is_empty() {
            counterexamples.push(cex);
        }
    }
    timings.validation = start.elapsed();

    let mut verdict = Verdict {
        status: Status::Optimistic,
        counterexamples,
        repaired: None,
        refined: None,
        timings,
        incomplete: None,
    };

    if !verdict.counterexamples.is_empty() {
        let start = Instant::now();
        let outcome = explainer.repair(instance, target, candidate);
        verdict.timings.repair = start.elapsed();
        match outcome {
            Ok(e) => verdict.repaired = Some(e),
            Err(ExplainError::Oracle(e)) if e.is_indeterminate() => verdict.incomplete = Some(e),
            Err(e) => return Err(e),
        }
        return Ok(verdict);
    }

    let start = Instant::now();
    let outcome = explainer.refine(instance, target, candidate, Minimality::Subset);
    verdict.timings.refinement = start.elapsed();
    match outcome {
        Ok(e) => {
            verdict.status = if e.len() < candidate.len() { Status::Pessimistic } else { Status::Realistic };
            verdict.refined = Some(e);
        }
        Err(ExplainError::Oracle(e)) if e.is_indeterminate() => {
            // entailment is known; minimality is not, so report the weaker claim
            verdict.status = Status::Pessimistic;
            verdict.incomplete = Some(e);
        }
        Err(e) => return Err(e),
    }
    Ok(verdict)
}
