//! Exact abductive explanations for gradient-boosted tree ensembles.
//!
//! An explanation of a prediction is a subset of the instance's feature
//! values that alone forces the ensemble to the same class, whatever the
//! remaining features are. The [`oracle`] decides that entailment exactly;
//! [`explain`] builds minimal explanations on top of it and audits
//! explanations produced by other tools.

pub mod cli;
pub mod explain;
pub mod hitting;
pub mod model;
pub mod number;
pub mod oracle;
pub mod semantics;
pub mod synth;
