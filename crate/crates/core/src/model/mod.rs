//! Feature spaces, ensembles, cubes and the on-disk interchange formats.

mod cube;
mod ensemble;
mod feature;
mod parse;

pub use cube::{restrict, AbstractCell, Cube};
pub use ensemble::{Ensemble, NodeId, SplitPredicate, Tree, TreeNode};
pub use feature::{parse_feature_map, write_feature_map, FeatureDecl, FeatureKind, FeatureSpace, Value};
pub use parse::{parse_ensemble, parse_ensemble_with, parse_instances, write_ensemble, write_instances, ParseOptions};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model file: {0}")]
    Syntax(String),
    #[error("invalid model structure: {0}")]
    Structure(String),
    #[error("unknown feature: {0}")]
    UnknownFeature(String),
    #[error("malformed feature map: {0}")]
    FeatureMap(String),
    #[error("malformed instance file: {0}")]
    Instances(String),
}
