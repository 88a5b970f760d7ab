//! Candidate files: one `instance_id: feature,feature,...` per line. Values
//! come from the instance. `#` starts a comment.

use std::collections::BTreeMap;

use crate::model::{Cube, FeatureSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidates {
    pub by_id: BTreeMap<usize, Vec<usize>>,
}

pub fn parse_candidates(text: &str, space: &FeatureSpace) -> Result<Candidates, String> {
    let mut by_id = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| format!("candidates line {}: {msg}", lineno + 1);
        let (id, rest) = line.split_once(':').ok_or_else(|| err("expected `id: features`".into()))?;
        let id: usize = id.trim().parse().map_err(|_| err(format!("bad instance id {:?}", id.trim())))?;
        let mut features = Vec::new();
        for name in rest.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let f = space.index_of(name).ok_or_else(|| err(format!("unknown feature {name:?}")))?;
            if !features.contains(&f) {
                features.push(f);
            }
        }
        if by_id.insert(id, features).is_some() {
            return Err(err(format!("duplicate instance id {id}")));
        }
    }
    Ok(Candidates { by_id })
}

impl Candidates {
    /// Resolves every line against `instances`.
    pub fn resolve(&self, instances: &[Cube]) -> Result<Vec<(usize, Cube)>, String> {
        self.by_id
            .iter()
            .map(|(&id, features)| {
                let instance = instances.get(id).ok_or_else(|| {
                    format!("candidate for instance {id}, but there are {} instances", instances.len())
                })?;
                Ok((id, instance.restrict(features.iter().copied())))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_feature_map, Value};

    #[test]
    fn parses_and_resolves() {
        let space = parse_feature_map("0\ta\tbinary\n1\tb\tbinary\n").unwrap();
        let c = parse_candidates("# header\n1: b, a\n0:\n\n", &space).unwrap();
        assert_eq!(c.by_id[&1], vec![1, 0]);
        assert!(c.by_id[&0].is_empty());
        let rows: Vec<Cube> =
            (0..2).map(|i| [(0, Value::Bool(i == 0)), (1, Value::Bool(true))].into_iter().collect()).collect();
        let resolved = c.resolve(&rows).unwrap();
        assert_eq!(resolved[1].1.len(), 2);
        assert!(c.resolve(&rows[..1]).is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        let space = parse_feature_map("0\ta\tbinary\n").unwrap();
        assert!(parse_candidates("0 a", &space).is_err());
        assert!(parse_candidates("x: a", &space).is_err());
        assert!(parse_candidates("0: zz", &space).is_err());
        assert!(parse_candidates("0: a\n0: a", &space).is_err());
    }
}
