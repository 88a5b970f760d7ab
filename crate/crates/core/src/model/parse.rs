//! Readers and writers for the model, feature-map and instance files.
//!
//! The model file is a JSON object in the XGBoost JSON-dump node layout:
//!
//! ```json
//! { "num_classes": 2, "trees_per_class": 1, "base_score": 0.5,
//!   "trees": [ { "nodeid": 0, "split": "age", "split_condition": 30.5,
//!                "yes": 1, "no": 2, "missing": 1,
//!                "children": [ {"nodeid": 1, "leaf": 0.25},
//!                              {"nodeid": 2, "leaf": -0.125} ] },
//!              { "nodeid": 0, "leaf": 0.0 } ] }
//! ```
//!
//! `yes` is the branch taken when `feature < split_condition`. Boolean
//! features use a condition in `(0, 1]`, one-hot indicators are named
//! `feature=value`. Without `split_condition` a boolean or indicator split
//! sends `yes` to the true branch. `tree_layout` may be `"class_major"`
//! (default) or `"round_major"`, the order XGBoost itself dumps
//! multi-class boosters in.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde_json::{Map, Number, Value as Json};

use super::{Cube, Ensemble, FeatureKind, FeatureSpace, ModelError, SplitPredicate, Tree, TreeNode};
use crate::number::{finite_decimal, parse_decimal, Rational};

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Maximum node depth accepted in any tree.
    pub max_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { max_depth: 64 }
    }
}

/// Parses a model file plus feature map. Continuous thresholds are
/// harvested from the splits and installed, sorted, into the returned
/// feature space.
pub fn parse_ensemble(model: &[u8], feature_map: &[u8]) -> Result<(Ensemble, FeatureSpace), ModelError> {
    parse_ensemble_with(model, feature_map, ParseOptions::default())
}

pub fn parse_ensemble_with(
    model: &[u8],
    feature_map: &[u8],
    options: ParseOptions,
) -> Result<(Ensemble, FeatureSpace), ModelError> {
    let fmap_text =
        std::str::from_utf8(feature_map).map_err(|_| ModelError::FeatureMap("feature map is not UTF-8".into()))?;
    let mut space = super::parse_feature_map(fmap_text)?;

    let doc: Json = serde_json::from_slice(model).map_err(|e| ModelError::Syntax(e.to_string()))?;
    let header = doc.as_object().ok_or_else(|| ModelError::Syntax("model file must be a JSON object".into()))?;

    let num_classes =
        header_usize(header, "num_classes")?.ok_or_else(|| ModelError::Syntax("missing `num_classes`".into()))?;
    if num_classes == 0 {
        return Err(ModelError::Structure("num_classes must be positive".into()));
    }
    let raw_trees = header
        .get("trees")
        .and_then(Json::as_array)
        .ok_or_else(|| ModelError::Syntax("missing `trees` array".into()))?;
    if raw_trees.len() % num_classes != 0 {
        return Err(ModelError::Structure(format!(
            "{} trees are not divisible by {num_classes} classes",
            raw_trees.len()
        )));
    }
    let q = match header_usize(header, "trees_per_class")? {
        Some(q) if q * num_classes != raw_trees.len() => {
            return Err(ModelError::Structure(format!(
                "{} trees do not match {num_classes} classes x {q} trees per class",
                raw_trees.len()
            )))
        }
        Some(q) => q,
        None => raw_trees.len() / num_classes,
    };
    if q == 0 {
        return Err(ModelError::Structure("model has no trees".into()));
    }
    let round_major = match header.get("tree_layout").map(|v| v.as_str()) {
        None | Some(Some("class_major")) => false,
        Some(Some("round_major")) => true,
        Some(other) => return Err(ModelError::Syntax(format!("unknown tree_layout {other:?}"))),
    };
    let base_score = match header.get("base_score") {
        None | Some(Json::Null) => None,
        Some(v) => Some(json_rational(v).map_err(|e| ModelError::Syntax(format!("base_score: {e}")))?),
    };

    let mut trees = Vec::with_capacity(raw_trees.len());
    for (t, raw) in raw_trees.iter().enumerate() {
        let mut builder = TreeBuilder { space: &space, nodes: Vec::new(), max_depth: options.max_depth, tree: t };
        builder.node(raw, 0)?;
        trees.push(Tree::new(builder.nodes)?);
    }
    if round_major {
        // dump index r*m + c belongs to class c, round r
        let mut ordered = Vec::with_capacity(trees.len());
        for c in 0..num_classes {
            for r in 0..q {
                ordered.push(trees[r * num_classes + c].clone());
            }
        }
        trees = ordered;
    }

    let mut thresholds: HashMap<usize, BTreeSet<Rational>> = HashMap::new();
    for tree in &trees {
        for pred in tree.predicates() {
            if let SplitPredicate::LessThan { feature, threshold } = pred {
                thresholds.entry(*feature).or_default().insert(threshold.clone());
            }
        }
    }
    for (f, ts) in thresholds {
        *space.thresholds_mut(f) = ts.into_iter().collect();
    }

    let mut ensemble = Ensemble::new(num_classes, q, trees, base_score)?;
    if let Some(names) = header.get("class_names") {
        let names = names
            .as_array()
            .and_then(|a| a.iter().map(|n| n.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
            .ok_or_else(|| ModelError::Syntax("class_names must be an array of strings".into()))?;
        ensemble = ensemble.with_class_names(names)?;
    }
    ensemble.check_against(&space)?;
    Ok((ensemble, space))
}

fn header_usize(header: &Map<String, Json>, key: &str) -> Result<Option<usize>, ModelError> {
    match header.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| ModelError::Syntax(format!("`{key}` must be a non-negative integer"))),
    }
}

fn json_rational(v: &Json) -> Result<Rational, String> {
    match v {
        Json::Number(n) => parse_decimal(&n.to_string()).map_err(|e| e.to_string()),
        Json::String(s) => match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_decimal(n).map_err(|e| e.to_string())?;
                let d = parse_decimal(d).map_err(|e| e.to_string())?;
                if d.is_zero() {
                    return Err("zero denominator".into());
                }
                Ok(n / d)
            }
            None => parse_decimal(s).map_err(|e| e.to_string()),
        },
        other => Err(format!("expected a number, found {other}")),
    }
}

struct TreeBuilder<'a> {
    space: &'a FeatureSpace,
    nodes: Vec<TreeNode>,
    max_depth: usize,
    tree: usize,
}

impl TreeBuilder<'_> {
    fn err(&self, msg: String) -> ModelError {
        ModelError::Syntax(format!("tree {}: {msg}", self.tree))
    }

    fn node(&mut self, raw: &Json, depth: usize) -> Result<usize, ModelError> {
        if depth > self.max_depth {
            return Err(self.err(format!("depth exceeds limit of {}", self.max_depth)));
        }
        let obj = raw.as_object().ok_or_else(|| self.err("node must be an object".into()))?;
        let id = self.nodes.len();
        if let Some(leaf) = obj.get("leaf") {
            let value = json_rational(leaf).map_err(|e| self.err(format!("leaf: {e}")))?;
            self.nodes.push(TreeNode::Leaf { value });
            return Ok(id);
        }
        let split =
            obj.get("split").and_then(Json::as_str).ok_or_else(|| self.err("internal node without `split`".into()))?;
        let condition = match obj.get("split_condition") {
            None | Some(Json::Null) => None,
            Some(v) => Some(json_rational(v).map_err(|e| self.err(format!("split_condition: {e}")))?),
        };
        let child_id = |key: &str| -> Result<u64, ModelError> {
            obj.get(key).and_then(Json::as_u64).ok_or_else(|| self.err(format!("internal node without `{key}`")))
        };
        let (yes, no) = (child_id("yes")?, child_id("no")?);
        if let Some(missing) = obj.get("missing") {
            let missing = missing.as_u64().ok_or_else(|| self.err("bad `missing`".into()))?;
            if missing != yes && missing != no {
                return Err(self.err(format!("missing branch {missing} routes to neither child")));
            }
        }
        let children = obj
            .get("children")
            .and_then(Json::as_array)
            .ok_or_else(|| self.err("internal node without `children`".into()))?;
        let find = |want: u64| {
            children
                .iter()
                .find(|c| c.get("nodeid").and_then(Json::as_u64) == Some(want))
                .ok_or_else(|| self.err(format!("child {want} not among children")))
        };
        let (yes_raw, no_raw) = (find(yes)?, find(no)?);
        if yes == no {
            return Err(self.err("yes and no point at the same child".into()));
        }

        let (pred, yes_is_true) = self.predicate(split, condition)?;
        // placeholder, patched once the children have ids
        self.nodes.push(TreeNode::Leaf { value: Rational::zero() });
        // false branch first: arenas are in left-first preorder
        let (false_raw, true_raw) = if yes_is_true { (no_raw, yes_raw) } else { (yes_raw, no_raw) };
        let left = self.node(false_raw, depth + 1)?;
        let right = self.node(true_raw, depth + 1)?;
        self.nodes[id] = TreeNode::Internal { pred, left, right };
        Ok(id)
    }

    /// Resolves a split name. Returns the predicate and whether the `yes`
    /// branch is the predicate's true branch.
    fn predicate(&self, split: &str, condition: Option<Rational>) -> Result<(SplitPredicate, bool), ModelError> {
        let binary_condition = |c: &Option<Rational>| -> Result<bool, ModelError> {
            match c {
                None => Ok(true),
                Some(c) if *c > Rational::zero() && *c <= Rational::one() => Ok(false),
                Some(c) => Err(self.err(format!("condition {c} on {split:?} is outside (0, 1]"))),
            }
        };
        if let Some(feature) = self.space.index_of(split) {
            return match &self.space.get(feature).kind {
                FeatureKind::Boolean => Ok((SplitPredicate::IsTrue { feature }, binary_condition(&condition)?)),
                FeatureKind::Continuous => {
                    let threshold = condition
                        .ok_or_else(|| self.err(format!("continuous split on {split:?} needs split_condition")))?;
                    Ok((SplitPredicate::LessThan { feature, threshold }, true))
                }
                FeatureKind::Categorical(_) => {
                    Err(self
                        .err(format!("categorical feature {split:?} must be split through `{split}=value` indicators")))
                }
            };
        }
        if let Some((name, value)) = split.split_once('=') {
            if let Some(feature) = self.space.index_of(name) {
                if let FeatureKind::Categorical(values) = &self.space.get(feature).kind {
                    let value = values
                        .iter()
                        .position(|v| v == value)
                        .ok_or_else(|| ModelError::UnknownFeature(format!("{split:?}: unknown value")))?;
                    return Ok((SplitPredicate::IsValue { feature, value }, binary_condition(&condition)?));
                }
            }
        }
        Err(ModelError::UnknownFeature(format!("tree {}: split on undeclared feature {split:?}", self.tree)))
    }
}

/// Serializes an ensemble into the model-file layout (class-major).
pub fn write_ensemble(ensemble: &Ensemble, space: &FeatureSpace) -> String {
    let trees: Vec<Json> = ensemble
        .trees()
        .iter()
        .map(|tree| {
            let mut next_id = 0u64;
            write_node(tree, 0, space, &mut next_id)
        })
        .collect();
    let mut header = Map::new();
    header.insert("num_classes".into(), Json::from(ensemble.num_classes()));
    header.insert("trees_per_class".into(), Json::from(ensemble.trees_per_class()));
    if let Some(base) = ensemble.base_score() {
        header.insert("base_score".into(), rational_json(base));
    }
    let default_names: Vec<String> = (0..ensemble.num_classes()).map(|c| c.to_string()).collect();
    if ensemble.class_names() != default_names.as_slice() {
        header.insert("class_names".into(), Json::from(ensemble.class_names().to_vec()));
    }
    header.insert("trees".into(), Json::Array(trees));
    serde_json::to_string_pretty(&Json::Object(header)).expect("JSON values always serialize")
}

fn rational_json(value: &Rational) -> Json {
    match finite_decimal(value) {
        Some(text) => Json::Number(text.parse::<Number>().expect("finite decimal is a JSON number")),
        None => Json::String(format!("{}/{}", value.numer(), value.denom())),
    }
}

fn write_node(tree: &Tree, id: usize, space: &FeatureSpace, next_id: &mut u64) -> Json {
    let nodeid = *next_id;
    *next_id += 1;
    let mut obj = Map::new();
    obj.insert("nodeid".into(), Json::from(nodeid));
    match tree.node(id) {
        TreeNode::Leaf { value } => {
            obj.insert("leaf".into(), rational_json(value));
        }
        TreeNode::Internal { pred, left, right } => {
            let (split, condition, yes_is_true) = match pred {
                SplitPredicate::IsTrue { feature } => {
                    (space.name(*feature).to_string(), Rational::new(1.into(), 2.into()), false)
                }
                SplitPredicate::IsValue { feature, value } => {
                    let name = match &space.get(*feature).kind {
                        FeatureKind::Categorical(values) => format!("{}={}", space.name(*feature), values[*value]),
                        _ => space.name(*feature).to_string(),
                    };
                    (name, Rational::new(1.into(), 2.into()), false)
                }
                SplitPredicate::LessThan { feature, threshold } => {
                    (space.name(*feature).to_string(), threshold.clone(), true)
                }
            };
            let (yes_child, no_child) = if yes_is_true { (*right, *left) } else { (*left, *right) };
            let yes = write_node(tree, yes_child, space, next_id);
            let no = write_node(tree, no_child, space, next_id);
            let yes_id = yes["nodeid"].clone();
            obj.insert("split".into(), Json::from(split));
            obj.insert("split_condition".into(), rational_json(&condition));
            obj.insert("yes".into(), yes_id.clone());
            obj.insert("no".into(), no["nodeid"].clone());
            obj.insert("missing".into(), yes_id);
            obj.insert("children".into(), Json::Array(vec![yes, no]));
        }
    }
    Json::Object(obj)
}

/// Parses an instance file into total cubes. A `label` column is ignored.
pub fn parse_instances(data: &[u8], space: &FeatureSpace) -> Result<Vec<Cube>, ModelError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(data);
    let headers = reader.headers().map_err(|e| ModelError::Instances(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Ok(Vec::new());
    }
    let mut columns: Vec<Option<usize>> = Vec::with_capacity(headers.len());
    let mut seen = vec![false; space.len()];
    for name in headers.iter() {
        if name == "label" {
            columns.push(None);
            continue;
        }
        let f = space.index_of(name).ok_or_else(|| ModelError::Instances(format!("unknown column {name:?}")))?;
        if std::mem::replace(&mut seen[f], true) {
            return Err(ModelError::Instances(format!("duplicate column {name:?}")));
        }
        columns.push(Some(f));
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ModelError::Instances(format!("no column for feature {:?}", space.name(missing))));
    }
    let mut cubes = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ModelError::Instances(format!("row {}: {e}", row + 1)))?;
        if record.len() != columns.len() {
            return Err(ModelError::Instances(format!(
                "row {}: expected {} cells, found {}",
                row + 1,
                columns.len(),
                record.len()
            )));
        }
        let mut cube = Cube::new();
        for (cell, column) in record.iter().zip(&columns) {
            let Some(f) = column else { continue };
            if cell.is_empty() {
                return Err(ModelError::Instances(format!("row {}: missing value for {:?}", row + 1, space.name(*f))));
            }
            let value =
                space.parse_value(*f, cell).map_err(|e| ModelError::Instances(format!("row {}: {e}", row + 1)))?;
            cube.insert(*f, value);
        }
        cubes.push(cube);
    }
    Ok(cubes)
}

/// Writes total cubes as an instance file (feature order of the space).
pub fn write_instances(instances: &[Cube], space: &FeatureSpace) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(space.features().iter().map(|f| f.name.as_str())).expect("in-memory write");
    for cube in instances {
        let row: Vec<String> =
            (0..space.len()).map(|f| cube.get(f).map(|v| space.render_value(f, v)).unwrap_or_default()).collect();
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Value;

    const FMAP: &str = "0\tflag\tbinary\n1\tcolor\tcategorical:red|green\n2\tage\tcontinuous\n";

    fn model(trees: &str, header: &str) -> String {
        format!("{{ {header} \"trees\": [{trees}] }}")
    }

    const SPLIT_AGE: &str = r#"{"nodeid":0,"split":"age","split_condition":30.5,"yes":1,"no":2,"missing":1,
        "children":[{"nodeid":1,"leaf":0.25},{"nodeid":2,"leaf":-0.125}]}"#;

    #[test]
    fn parses_basic_model_and_harvests_thresholds() {
        let text = model(&format!("{SPLIT_AGE}, {{\"nodeid\":0,\"leaf\":0}}"), "\"num_classes\": 2,");
        let (e, s) = parse_ensemble(text.as_bytes(), FMAP.as_bytes()).unwrap();
        assert_eq!(e.num_classes(), 2);
        assert_eq!(e.trees_per_class(), 1);
        assert_eq!(s.get(2).thresholds, vec![parse_decimal("30.5").unwrap()]);
        match e.trees()[0].node(0) {
            TreeNode::Internal { pred, left, right } => {
                assert!(matches!(pred, SplitPredicate::LessThan { feature: 2, .. }));
                // yes (age < 30.5) is the true branch, stored on the right
                assert_eq!(e.trees()[0].node(*right), &TreeNode::Leaf { value: parse_decimal("0.25").unwrap() });
                assert_eq!(e.trees()[0].node(*left), &TreeNode::Leaf { value: parse_decimal("-0.125").unwrap() });
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn single_leaf_model() {
        let text = model(r#"{"nodeid":0,"leaf":0.0}"#, "\"num_classes\": 1,");
        let (e, _) = parse_ensemble(text.as_bytes(), FMAP.as_bytes()).unwrap();
        assert_eq!(e.trees().len(), 1);
        assert_eq!(e.trees()[0].node(0), &TreeNode::Leaf { value: Rational::zero() });
    }

    #[test]
    fn boolean_and_indicator_yes_is_false_branch() {
        let trees = r#"{"nodeid":0,"split":"flag","split_condition":0.5,"yes":1,"no":2,"missing":1,
            "children":[{"nodeid":1,"leaf":1},{"nodeid":2,"leaf":2}]},
            {"nodeid":0,"split":"color=green","split_condition":0.5,"yes":1,"no":2,"missing":2,
            "children":[{"nodeid":2,"leaf":4},{"nodeid":1,"leaf":3}]}"#;
        let (e, _) = parse_ensemble(model(trees, "\"num_classes\": 1,").as_bytes(), FMAP.as_bytes()).unwrap();
        for (t, want_true) in [(0, "2"), (1, "4")] {
            let tree = &e.trees()[t];
            let TreeNode::Internal { right, .. } = tree.node(0) else { panic!() };
            assert_eq!(tree.node(*right), &TreeNode::Leaf { value: parse_decimal(want_true).unwrap() });
        }
    }

    #[test]
    fn rejects_structural_errors() {
        let leaf = r#"{"nodeid":0,"leaf":0}"#;
        let cases = [
            model(&format!("{leaf},{leaf},{leaf}"), "\"num_classes\": 2,"),
            model(leaf, "\"num_classes\": 1, \"trees_per_class\": 2,"),
            model(
                r#"{"nodeid":0,"split":"nope","split_condition":1,"yes":1,"no":2,"missing":1,
                "children":[{"nodeid":1,"leaf":0},{"nodeid":2,"leaf":0}]}"#,
                "\"num_classes\": 1,",
            ),
            model(
                r#"{"nodeid":0,"split":"age","split_condition":1,"yes":1,"no":2,"missing":7,
                "children":[{"nodeid":1,"leaf":0},{"nodeid":2,"leaf":0}]}"#,
                "\"num_classes\": 1,",
            ),
            model(
                r#"{"nodeid":0,"split":"age","split_condition":1,"yes":1,"no":5,"missing":1,
                "children":[{"nodeid":1,"leaf":0},{"nodeid":2,"leaf":0}]}"#,
                "\"num_classes\": 1,",
            ),
            model(
                r#"{"nodeid":0,"split":"color","split_condition":1,"yes":1,"no":2,"missing":1,
                "children":[{"nodeid":1,"leaf":0},{"nodeid":2,"leaf":0}]}"#,
                "\"num_classes\": 1,",
            ),
            "[1, 2]".to_string(),
            "{ not json".to_string(),
        ];
        for case in &cases {
            assert!(parse_ensemble(case.as_bytes(), FMAP.as_bytes()).is_err(), "{case}");
        }
    }

    #[test]
    fn depth_limit_is_enforced() {
        let mut node = serde_json::json!({"nodeid": 1000, "leaf": 1});
        for d in 0..10u64 {
            let child_id = node["nodeid"].clone();
            node = serde_json::json!({
                "nodeid": d, "split": "flag", "split_condition": 0.5,
                "yes": child_id, "no": 2000, "missing": 2000,
                "children": [node, {"nodeid": 2000, "leaf": 0}],
            });
        }
        let deep = model(&node.to_string(), "\"num_classes\": 1,");
        assert!(parse_ensemble(deep.as_bytes(), FMAP.as_bytes()).is_ok());
        let opts = ParseOptions { max_depth: 3 };
        assert!(parse_ensemble_with(deep.as_bytes(), FMAP.as_bytes(), opts).is_err());
    }

    #[test]
    fn round_major_layout_is_reordered() {
        let leaf = |v: i32| format!(r#"{{"nodeid":0,"leaf":{v}}}"#);
        let trees = [leaf(0), leaf(10), leaf(1), leaf(11)].join(",");
        let text = model(&trees, "\"num_classes\": 2, \"tree_layout\": \"round_major\",");
        let (e, _) = parse_ensemble(text.as_bytes(), FMAP.as_bytes()).unwrap();
        let values: Vec<String> = e.trees().iter().map(|t| t.leaves().next().unwrap().to_string()).collect();
        assert_eq!(values, ["0", "1", "10", "11"]);
    }

    #[test]
    fn instances_parse_with_label_and_any_column_order() {
        let (_, s) = parse_ensemble(model(SPLIT_AGE, "\"num_classes\": 1,").as_bytes(), FMAP.as_bytes()).unwrap();
        let data = "age,flag,color,label\n31,1,green,yes\n-2.5,0,red,no\n";
        let cubes = parse_instances(data.as_bytes(), &s).unwrap();
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].get(1), Some(&Value::Category(1)));
        assert_eq!(cubes[1].get(2), Some(&Value::Real(parse_decimal("-2.5").unwrap())));
        assert!(cubes.iter().all(|c| c.is_total(&s)));
        assert_eq!(parse_instances(write_instances(&cubes, &s).as_bytes(), &s).unwrap(), cubes);
    }

    #[test]
    fn instance_errors() {
        let (_, s) = parse_ensemble(model(SPLIT_AGE, "\"num_classes\": 1,").as_bytes(), FMAP.as_bytes()).unwrap();
        for bad in [
            "flag,color,age\n1,blue,3\n",
            "flag,color,age\n1,red,old\n",
            "flag,color,age\n1,,3\n",
            "flag,color\n1,red\n",
            "flag,color,age,extra\n1,red,3,4\n",
        ] {
            assert!(parse_instances(bad.as_bytes(), &s).is_err(), "{bad}");
        }
        assert!(parse_instances(b"", &s).unwrap().is_empty());
        assert!(parse_instances(b"flag,color,age\n", &s).unwrap().is_empty());
    }
}
