use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;

use super::{FeatureSpace, Value};

/// A conjunction of feature literals, at most one per feature.
///
/// Instances are total cubes; explanations and heuristic candidates are
/// sub-cubes of an instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    literals: BTreeMap<usize, Value>,
}

impl Cube {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the literal for `feature`, replacing any previous one.
    pub fn insert(&mut self, feature: usize, value: Value) -> Option<Value> {
        self.literals.insert(feature, value)
    }

    pub fn remove(&mut self, feature: usize) -> Option<Value> {
        self.literals.remove(&feature)
    }

    pub fn get(&self, feature: usize) -> Option<&Value> {
        self.literals.get(&feature)
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.literals.contains_key(&feature)
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Value)> {
        self.literals.iter().map(|(f, v)| (*f, v))
    }

    /// Assigned features, ascending.
    pub fn features(&self) -> Vec<usize> {
        self.literals.keys().copied().collect()
    }

    pub fn is_total(&self, space: &FeatureSpace) -> bool {
        self.literals.len() == space.len()
    }

    pub fn is_subset_of(&self, other: &Cube) -> bool {
        self.iter().all(|(f, v)| other.get(f) == Some(v))
    }

    /// Sub-cube over the requested features that are assigned here.
    pub fn restrict<I: IntoIterator<Item = usize>>(&self, features: I) -> Cube {
        let mut out = Cube::new();
        for f in features {
            if let Some(v) = self.literals.get(&f) {
                out.literals.insert(f, v.clone());
            }
        }
        out
    }

    pub fn without(&self, feature: usize) -> Cube {
        let mut out = self.clone();
        out.literals.remove(&feature);
        out
    }

    /// Literal-wise consistency with the feature space.
    pub fn check(&self, space: &FeatureSpace) -> Result<(), String> {
        for (f, v) in self.iter() {
            if f >= space.len() {
                return Err(format!("literal over undeclared feature #{f}"));
            }
            if space.atom_of(f, v).is_none() {
                return Err(format!("value {v:?} does not fit feature {:?}", space.name(f)));
            }
        }
        Ok(())
    }

    pub fn render(&self, space: &FeatureSpace) -> Vec<String> {
        self.iter().map(|(f, v)| space.render_literal(f, v)).collect()
    }
}

impl FromIterator<(usize, Value)> for Cube {
    fn from_iter<T: IntoIterator<Item = (usize, Value)>>(iter: T) -> Self {
        Self { literals: iter.into_iter().collect() }
    }
}

/// Sub-cube of `cube` over `features` (see [`Cube::restrict`]).
pub fn restrict(cube: &Cube, features: &[usize]) -> Cube {
    cube.restrict(features.iter().copied())
}

/// A product of per-feature atom sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractCell {
    domains: Vec<FixedBitSet>,
}

impl AbstractCell {
    /// The unrestricted cell.
    pub fn full(space: &FeatureSpace) -> Self {
        let domains = (0..space.len())
            .map(|f| {
                let n = space.atom_count(f);
                let mut set = FixedBitSet::with_capacity(n);
                set.insert_range(..);
                set
            })
            .collect();
        Self { domains }
    }

    /// Tightest cell containing every total extension of `cube`.
    pub fn from_cube(space: &FeatureSpace, cube: &Cube) -> Result<Self, String> {
        let mut cell = Self::full(space);
        for (f, v) in cube.iter() {
            let atom =
                space.atom_of(f, v).ok_or_else(|| format!("value {v:?} does not fit feature {:?}", space.name(f)))?;
            let set = &mut cell.domains[f];
            set.clear();
            set.insert(atom);
        }
        Ok(cell)
    }

    pub fn domain(&self, feature: usize) -> &FixedBitSet {
        &self.domains[feature]
    }

    pub fn domain_mut(&mut self, feature: usize) -> &mut FixedBitSet {
        &mut self.domains[feature]
    }

    pub fn num_features(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.iter().any(|d| d.is_clear())
    }

    /// Atom of `feature` when its domain is a singleton.
    pub fn single_atom(&self, feature: usize) -> Option<usize> {
        let d = &self.domains[feature];
        if d.count_ones(..) == 1 {
            d.ones().next()
        } else {
            None
        }
    }

    pub fn contains_point(&self, space: &FeatureSpace, instance: &Cube) -> bool {
        instance.iter().all(|(f, v)| space.atom_of(f, v).is_some_and(|a| self.domains[f].contains(a)))
    }

    /// Number of atom-level points in the cell restricted to `features`.
    pub fn point_count(&self, features: &[usize]) -> u128 {
        features.iter().map(|&f| self.domains[f].count_ones(..) as u128).fold(1u128, |acc, n| acc.saturating_mul(n))
    }

    /// Concrete instance: literals of `fixed` are kept verbatim and every
    /// other feature takes the representative of its lowest contiguous run.
    pub fn witness(&self, space: &FeatureSpace, fixed: &Cube) -> Cube {
        (0..space.len())
            .map(|f| {
                if let Some(v) = fixed.get(f) {
                    return (f, v.clone());
                }
                let d = &self.domains[f];
                let lo = d.ones().next().unwrap_or(0);
                let mut hi = lo;
                while hi + 1 < d.len() && d.contains(hi + 1) {
                    hi += 1;
                }
                (f, space.representative(f, lo, hi))
            })
            .collect()
    }
}
