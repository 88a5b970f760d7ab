use std::collections::HashMap;
use std::fmt;

use num_traits::One;

use super::ModelError;
use crate::number::{format_exact, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Boolean,
    Categorical(Vec<String>),
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub kind: FeatureKind,
    /// Split points harvested from the ensemble, strictly increasing.
    /// Always empty for non-continuous features.
    pub thresholds: Vec<Rational>,
}

/// A concrete value of one feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    /// Index into the feature's categorical value names.
    Category(usize),
    Real(Rational),
}

/// The ordered set of declared features.
///
/// Every feature has a finite *atom* domain used by the oracle:
/// booleans have atoms `{0 = false, 1 = true}`, categoricals one atom per
/// value, and a continuous feature with `t` thresholds has `t + 1` interval
/// atoms where atom `i` is `[thresholds[i-1], thresholds[i])` with open ends
/// at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<FeatureDecl>,
    by_name: HashMap<String, usize>,
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDecl>) -> Result<Self, ModelError> {
        let mut by_name = HashMap::with_capacity(features.len());
        for (idx, decl) in features.iter().enumerate() {
            if decl.name.is_empty() {
                return Err(ModelError::FeatureMap(format!("feature {idx} has an empty name")));
            }
            if by_name.insert(decl.name.clone(), idx).is_some() {
                return Err(ModelError::FeatureMap(format!("duplicate feature name {:?}", decl.name)));
            }
            match &decl.kind {
                FeatureKind::Categorical(values) => {
                    if values.is_empty() {
                        return Err(ModelError::FeatureMap(format!(
                            "categorical feature {:?} declares no values",
                            decl.name
                        )));
                    }
                    let mut seen = std::collections::HashSet::new();
                    for v in values {
                        if !seen.insert(v) {
                            return Err(ModelError::FeatureMap(format!(
                                "categorical feature {:?} repeats value {v:?}",
                                decl.name
                            )));
                        }
                    }
                }
                FeatureKind::Boolean => {}
                FeatureKind::Continuous => {
                    if !decl.thresholds.windows(2).all(|w| w[0] < w[1]) {
                        return Err(ModelError::FeatureMap(format!(
                            "thresholds of {:?} are not strictly increasing",
                            decl.name
                        )));
                    }
                }
            }
            if !matches!(decl.kind, FeatureKind::Continuous) && !decl.thresholds.is_empty() {
                return Err(ModelError::FeatureMap(format!(
                    "non-continuous feature {:?} carries thresholds",
                    decl.name
                )));
            }
        }
        Ok(Self { features, by_name })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDecl] {
        &self.features
    }

    pub fn get(&self, idx: usize) -> &FeatureDecl {
        &self.features[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.features[idx].name
    }

    pub(crate) fn thresholds_mut(&mut self, idx: usize) -> &mut Vec<Rational> {
        &mut self.features[idx].thresholds
    }

    /// Number of atoms in the feature's abstract domain.
    pub fn atom_count(&self, idx: usize) -> usize {
        let decl = &self.features[idx];
        match &decl.kind {
            FeatureKind::Boolean => 2,
            FeatureKind::Categorical(values) => values.len(),
            FeatureKind::Continuous => decl.thresholds.len() + 1,
        }
    }

    /// Atom containing a concrete value; `None` on a kind mismatch or an
    /// out-of-range category.
    pub fn atom_of(&self, idx: usize, value: &Value) -> Option<usize> {
        let decl = &self.features[idx];
        match (&decl.kind, value) {
            (FeatureKind::Boolean, Value::Bool(b)) => Some(usize::from(*b)),
            (FeatureKind::Categorical(values), Value::Category(c)) if *c < values.len() => Some(*c),
            (FeatureKind::Continuous, Value::Real(x)) => Some(decl.thresholds.partition_point(|t| t <= x)),
            _ => None,
        }
    }

    /// A concrete value for a contiguous atom range `lo..=hi`.
    ///
    /// Continuous ranges map to the midpoint of the covered interval, or the
    /// finite end moved by one when the interval is unbounded.
    pub fn representative(&self, idx: usize, lo: usize, hi: usize) -> Value {
        let decl = &self.features[idx];
        match &decl.kind {
            FeatureKind::Boolean => Value::Bool(lo == 1),
            FeatureKind::Categorical(_) => Value::Category(lo),
            FeatureKind::Continuous => {
                let ts = &decl.thresholds;
                let lower = if lo == 0 { None } else { Some(&ts[lo - 1]) };
                let upper = ts.get(hi);
                let one = Rational::one();
                Value::Real(match (lower, upper) {
                    (Some(a), Some(b)) => (a + b) / Rational::from_integer(2.into()),
                    (Some(a), None) => a + one,
                    (None, Some(b)) => b - one,
                    (None, None) => Rational::from_integer(0.into()),
                })
            }
        }
    }

    /// Parses one cell of an instance file.
    pub fn parse_value(&self, idx: usize, text: &str) -> Result<Value, String> {
        let decl = &self.features[idx];
        let t = text.trim();
        match &decl.kind {
            FeatureKind::Boolean => match t {
                "1" | "true" | "True" | "TRUE" | "1.0" => Ok(Value::Bool(true)),
                "0" | "false" | "False" | "FALSE" | "0.0" => Ok(Value::Bool(false)),
                _ => Err(format!("{:?} is not a boolean value for {:?}", t, decl.name)),
            },
            FeatureKind::Categorical(values) => values
                .iter()
                .position(|v| v == t)
                .map(Value::Category)
                .ok_or_else(|| format!("unknown value {:?} for categorical feature {:?}", t, decl.name)),
            FeatureKind::Continuous => crate::number::parse_decimal(t)
                .map(Value::Real)
                .map_err(|_| format!("{:?} is not numeric for continuous feature {:?}", t, decl.name)),
        }
    }

    /// Text form of a value, as written in instance files.
    pub fn render_value(&self, idx: usize, value: &Value) -> String {
        match (&self.features[idx].kind, value) {
            (FeatureKind::Categorical(values), Value::Category(c)) => {
                values.get(*c).cloned().unwrap_or_else(|| format!("#{c}"))
            }
            (_, Value::Bool(b)) => if *b { "1" } else { "0" }.to_string(),
            (_, Value::Real(x)) => format_exact(x),
            (_, Value::Category(c)) => format!("#{c}"),
        }
    }

    /// Human-readable literal such as `¬milk`, `backbone`, `legs=0`, `age=31.5`.
    pub fn render_literal(&self, idx: usize, value: &Value) -> String {
        let name = self.name(idx);
        match value {
            Value::Bool(true) => name.to_string(),
            Value::Bool(false) => format!("¬{name}"),
            other => format!("{name}={}", self.render_value(idx, other)),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Boolean => f.write_str("binary"),
            FeatureKind::Categorical(values) => write!(f, "categorical:{}", values.join("|")),
            FeatureKind::Continuous => f.write_str("continuous"),
        }
    }
}

/// Parses a feature-map file: `index<TAB>name<TAB>kind` per line.
pub fn parse_feature_map(text: &str) -> Result<FeatureSpace, ModelError> {
    let mut features = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |msg: &str| ModelError::FeatureMap(format!("line {}: {msg}", lineno + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err("expected `index<TAB>name<TAB>kind`"));
        }
        let index: usize = cols[0].trim().parse().map_err(|_| err("bad index"))?;
        if index != features.len() {
            return Err(err(&format!("expected index {}, found {index}", features.len())));
        }
        let name = cols[1].trim().to_string();
        let kind = match cols[2].trim() {
            "binary" | "boolean" | "i" => FeatureKind::Boolean,
            "continuous" | "q" | "float" => FeatureKind::Continuous,
            other => match other.strip_prefix("categorical:") {
                Some(values) => FeatureKind::Categorical(values.split('|').map(|v| v.trim().to_string()).collect()),
                None => return Err(err(&format!("unknown feature kind {other:?}"))),
            },
        };
        features.push(FeatureDecl { name, kind, thresholds: Vec::new() });
    }
    FeatureSpace::new(features)
}

/// Inverse of [`parse_feature_map`]; thresholds are not written.
pub fn write_feature_map(space: &FeatureSpace) -> String {
    let mut out = String::new();
    for (idx, decl) in space.features().iter().enumerate() {
        out.push_str(&format!("{idx}\t{}\t{}\n", decl.name, decl.kind));
    }
    out
}
