//! Tree training and prediction for all five strategies, plus the JSON tree
//! document and a plain-text rendering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, ColumnData, ColumnKind, Dataset, FeatureColumn, TaskKind};
use crate::error::{Error, Result};
use crate::loss::{LeafValue, LossKind};
use crate::split::{best_split, heavy_enough, fit_node, node_loss, FractionBasis, MissingRoute, Partition, SplitConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub max_depth: usize,
    /// Minimum rows per child; for Fractional Case the minimum total weight.
    pub min_samples: usize,
    #[serde(default)]
    pub fraction_basis: FractionBasis,
}

impl TrainConfig {
    pub fn new(strategy: Strategy, max_depth: usize, min_samples: usize) -> Self {
        TrainConfig {
            strategy,
            max_depth,
            min_samples,
            fraction_basis: FractionBasis::RowCount,
        }
    }

    fn split_config(&self) -> SplitConfig {
        SplitConfig {
            min_child: self.min_samples,
            min_child_weight: self.min_samples as f64,
            fraction_basis: self.fraction_basis,
            ..SplitConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureInfo {
    pub name: String,
    pub kind: ColumnKind,
    pub categories: Vec<String>,
}

impl FeatureInfo {
    fn of(col: &FeatureColumn) -> Self {
        FeatureInfo {
            name: col.name.clone(),
            kind: col.kind(),
            categories: col.categories().map(<[String]>::to_vec).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub value: LeafValue,
    pub n_samples: usize,
    pub weight: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub partition: Partition,
    pub route: MissingRoute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryNode {
    pub split: SplitSpec,
    pub n_samples: usize,
    pub weight: f64,
    pub left: Node,
    pub right: Node,
}

/// A node whose rows missing the split feature descend into `middle`. The
/// middle child was trained on all of this node's rows, at the same depth,
/// without the split feature.
#[derive(Debug, Clone, PartialEq)]
pub struct TrinaryNode {
    pub split: SplitSpec,
    pub n_samples: usize,
    pub left: Node,
    pub right: Node,
    pub middle: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(Leaf),
    Binary(Box<BinaryNode>),
    Trinary(Box<TrinaryNode>),
}

impl Node {
    pub fn n_samples(&self) -> usize {
        match self {
            Node::Leaf(l) => l.n_samples,
            Node::Binary(b) => b.n_samples,
            Node::Trinary(t) => t.n_samples,
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Binary(b) => 1 + b.left.n_nodes() + b.right.n_nodes(),
            Node::Trinary(t) => 1 + t.left.n_nodes() + t.right.n_nodes() + t.middle.n_nodes(),
        }
    }

    /// Longest chain of left/right edges; middle edges do not add depth.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Binary(b) => 1 + b.left.depth().max(b.right.depth()),
            Node::Trinary(t) => (1 + t.left.depth().max(t.right.depth())).max(t.middle.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub strategy: Strategy,
    pub loss: LossKind,
    pub target: String,
    /// Class names, empty for regression.
    pub classes: Vec<String>,
    pub features: Vec<FeatureInfo>,
    pub root: Node,
}

// ---------------------------------------------------------------------------
// training

struct Grower<'a> {
    ds: &'a Dataset,
    cfg: TrainConfig,
    split: SplitConfig,
}

impl Grower<'_> {
    fn leaf(&self, rows: &[usize], weights: &[f64]) -> Node {
        Node::Leaf(Leaf {
            value: fit_node(self.ds, rows, Some(weights)),
            n_samples: rows.len(),
            weight: weights.iter().sum(),
            loss: node_loss(self.ds, rows, Some(weights)),
        })
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        let y = self.ds.response();
        let first = y.value(rows[0]);
        rows.iter().all(|&r| y.value(r) == first)
    }

    fn too_small(&self, rows: &[usize], weights: &[f64]) -> bool {
        match self.cfg.strategy {
            Strategy::FractionalCase => !heavy_enough(weights.iter().sum::<f64>(), 2.0 * self.split.min_child_weight),
            _ => rows.len() < 2 * self.split.min_child.max(1),
        }
    }

    fn grow(&self, rows: Vec<usize>, weights: Vec<f64>, depth: usize, features: &[usize]) -> Node {
        if depth >= self.cfg.max_depth || self.is_pure(&rows) || self.too_small(&rows, &weights) {
            return self.leaf(&rows, &weights);
        }
        let fc_weights = (self.cfg.strategy == Strategy::FractionalCase).then_some(weights.as_slice());
        let Some(split) = best_split(self.ds, &rows, fc_weights, features, self.cfg.strategy, &self.split) else {
            return self.leaf(&rows, &weights);
        };
        let spec = SplitSpec {
            partition: split.partition,
            route: split.route,
        };
        let n_samples = rows.len();
        match spec.route {
            MissingRoute::Middle => {
                let j = spec.partition.feature();
                let remaining: Vec<usize> = features.iter().copied().filter(|&f| f != j).collect();
                let left = self.grow(split.left.rows, split.left.weights, depth + 1, features);
                let right = self.grow(split.right.rows, split.right.weights, depth + 1, features);
                let middle = self.grow(rows, weights, depth, &remaining);
                Node::Trinary(Box::new(TrinaryNode {
                    split: spec,
                    n_samples,
                    left,
                    right,
                    middle,
                }))
            }
            _ => {
                let weight = weights.iter().sum();
                let left = self.grow(split.left.rows, split.left.weights, depth + 1, features);
                let right = self.grow(split.right.rows, split.right.weights, depth + 1, features);
                Node::Binary(Box::new(BinaryNode {
                    split: spec,
                    n_samples,
                    weight,
                    left,
                    right,
                }))
            }
        }
    }
}

/// Trains a tree on `rows` of `ds`.
pub fn train(ds: &Dataset, rows: &[usize], cfg: &TrainConfig) -> Result<Tree> {
    if rows.is_empty() {
        return Err(Error::Validation("cannot train on an empty row set".into()));
    }
    if cfg.min_samples == 0 {
        return Err(Error::Config("min_samples must be at least 1".into()));
    }
    let grower = Grower {
        ds,
        cfg: *cfg,
        split: cfg.split_config(),
    };
    let features: Vec<usize> = (0..ds.n_features()).collect();
    let root = grower.grow(rows.to_vec(), vec![1.0; rows.len()], 0, &features);
    Ok(Tree {
        strategy: cfg.strategy,
        loss: ds.loss_kind(),
        target: ds.target().to_string(),
        classes: match ds.response() {
            crate::data::Response::Class { classes, .. } => classes.clone(),
            crate::data::Response::Real(_) => Vec::new(),
        },
        features: ds.columns().iter().map(FeatureInfo::of).collect(),
        root,
    })
}

pub fn train_all(ds: &Dataset, cfg: &TrainConfig) -> Result<Tree> {
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    train(ds, &rows, cfg)
}

// ---------------------------------------------------------------------------
// prediction

fn mix(a: LeafValue, wa: f64, b: LeafValue, wb: f64) -> LeafValue {
    match (a, b) {
        (LeafValue::Real(x), LeafValue::Real(y)) => LeafValue::Real(wa * x + wb * y),
        (LeafValue::Probs(p), LeafValue::Probs(q)) => {
            let mut m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| wa * x + wb * y).collect();
            let total: f64 = m.iter().sum();
            if total > 0.0 {
                m.iter_mut().for_each(|x| *x /= total);
            }
            LeafValue::Probs(m)
        }
        _ => unreachable!("leaf kinds are uniform within a tree"),
    }
}

fn predict_node(node: &Node, row: &[Cell]) -> LeafValue {
    match node {
        Node::Leaf(leaf) => leaf.value.clone(),
        Node::Binary(b) => {
            let cell = row[b.split.partition.feature()];
            match b.split.partition.side(cell) {
                Some(crate::split::Side::Left) => predict_node(&b.left, row),
                Some(crate::split::Side::Right) => predict_node(&b.right, row),
                None => match b.split.route {
                    MissingRoute::Left => predict_node(&b.left, row),
                    MissingRoute::Right | MissingRoute::Middle => predict_node(&b.right, row),
                    MissingRoute::Fractional { left, right } => {
                        mix(predict_node(&b.left, row), left, predict_node(&b.right, row), right)
                    }
                },
            }
        }
        Node::Trinary(t) => {
            let cell = row[t.split.partition.feature()];
            match t.split.partition.side(cell) {
                Some(crate::split::Side::Left) => predict_node(&t.left, row),
                Some(crate::split::Side::Right) => predict_node(&t.right, row),
                None => predict_node(&t.middle, row),
            }
        }
    }
}

/// Maps a dataset's columns onto a tree's features by name. Categories the
/// tree never saw become missing.
struct ColumnMap {
    columns: Vec<usize>,
    category_maps: Vec<Option<Vec<Option<u32>>>>,
}

impl ColumnMap {
    fn new(tree: &Tree, cols: &[FeatureColumn]) -> Result<Self> {
        let by_name: HashMap<&str, usize> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.as_str(), i))
            .collect();
        let mut columns = Vec::with_capacity(tree.features.len());
        let mut category_maps = Vec::with_capacity(tree.features.len());
        for f in &tree.features {
            let &i = by_name
                .get(f.name.as_str())
                .ok_or_else(|| Error::Schema(format!("dataset lacks feature column `{}`", f.name)))?;
            let col = &cols[i];
            if col.kind() != f.kind {
                return Err(Error::Schema(format!("column `{}` has a different kind than in the tree", f.name)));
            }
            columns.push(i);
            category_maps.push(col.categories().map(|cats| {
                let index: HashMap<&str, u32> =
                    f.categories.iter().enumerate().map(|(k, c)| (c.as_str(), k as u32)).collect();
                cats.iter().map(|c| index.get(c.as_str()).copied()).collect()
            }));
        }
        Ok(ColumnMap { columns, category_maps })
    }

    fn row(&self, cols: &[FeatureColumn], r: usize, out: &mut Vec<Cell>) {
        out.clear();
        for (&i, map) in self.columns.iter().zip(&self.category_maps) {
            let cell = match (&cols[i].data, map) {
                (ColumnData::Categorical { codes, .. }, Some(map)) => {
                    codes[r].and_then(|c| map[c as usize]).map_or(Cell::Missing, Cell::Cat)
                }
                _ => cols[i].cell(r),
            };
            out.push(cell);
        }
    }
}

/// Aggregate test loss of a tree on a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Misclassification rate, classification only.
    pub error_rate: Option<f64>,
}

impl Tree {
    /// Predicts a row given in this tree's feature order, with categorical
    /// codes from this tree's dictionaries.
    pub fn predict_row(&self, row: &[Cell]) -> LeafValue {
        predict_node(&self.root, row)
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<LeafValue>> {
        self.predict_n(ds.columns(), ds.n_rows())
    }

    /// Predicts from feature columns matched to the tree by name; extra
    /// columns are ignored.
    pub fn predict_columns(&self, cols: &[FeatureColumn]) -> Result<Vec<LeafValue>> {
        self.predict_n(cols, cols.first().map_or(0, FeatureColumn::len))
    }

    fn predict_n(&self, cols: &[FeatureColumn], n_rows: usize) -> Result<Vec<LeafValue>> {
        let map = ColumnMap::new(self, cols)?;
        let mut buf = Vec::with_capacity(self.features.len());
        Ok((0..n_rows)
            .map(|r| {
                map.row(cols, r, &mut buf);
                self.predict_row(&buf)
            })
            .collect())
    }

    pub fn evaluate(&self, ds: &Dataset) -> Result<Evaluation> {
        if ds.loss_kind() != self.loss {
            return Err(Error::Schema("dataset task does not match the tree".into()));
        }
        let preds = self.predict(ds)?;
        let y = ds.response();
        let loss = preds.iter().enumerate().map(|(r, p)| p.loss_at(y.value(r))).sum();
        let error_rate = match ds.task() {
            TaskKind::Regression => None,
            TaskKind::Classification => {
                let wrong = preds.iter().enumerate().filter(|(r, p)| p.point() != y.value(*r)).count();
                Some(wrong as f64 / preds.len().max(1) as f64)
            }
        };
        Ok(Evaluation { loss, error_rate })
    }

    pub fn n_nodes(&self) -> usize {
        self.root.n_nodes()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

// ---------------------------------------------------------------------------
// document format

const FORMAT_NAME: &str = "tritree";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    format: String,
    version: u32,
    strategy: Strategy,
    task: TaskKind,
    target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    classes: Vec<String>,
    features: Vec<FeatureDoc>,
    root: NodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    name: String,
    kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    categories: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeKind {
    Leaf,
    Binary,
    Trinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RouteDoc {
    Left,
    Right,
    Middle,
    Fractional,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    node: NodeKind,
    n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    // leaves
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loss: Option<f64>,
    // splits
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left_categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right_categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing: Option<RouteDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fractions: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Box<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Box<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    middle: Option<Box<NodeDoc>>,
}

impl NodeDoc {
    fn empty(node: NodeKind, n_samples: usize) -> Self {
        NodeDoc {
            node,
            n_samples,
            weight: None,
            value: None,
            probs: None,
            loss: None,
            feature: None,
            threshold: None,
            left_categories: None,
            right_categories: None,
            missing: None,
            fractions: None,
            left: None,
            right: None,
            middle: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::TreeFormat(msg.into())
}

impl Tree {
    fn node_to_doc(&self, node: &Node) -> NodeDoc {
        match node {
            Node::Leaf(l) => {
                let mut d = NodeDoc::empty(NodeKind::Leaf, l.n_samples);
                d.weight = Some(l.weight);
                d.loss = Some(l.loss);
                match &l.value {
                    LeafValue::Real(v) => d.value = Some(*v),
                    LeafValue::Probs(p) => d.probs = Some(p.clone()),
                }
                d
            }
            Node::Binary(b) => {
                let mut d = NodeDoc::empty(NodeKind::Binary, b.n_samples);
                d.weight = Some(b.weight);
                self.split_to_doc(&b.split, &mut d);
                d.left = Some(Box::new(self.node_to_doc(&b.left)));
                d.right = Some(Box::new(self.node_to_doc(&b.right)));
                d
            }
            Node::Trinary(t) => {
                let mut d = NodeDoc::empty(NodeKind::Trinary, t.n_samples);
                self.split_to_doc(&t.split, &mut d);
                d.left = Some(Box::new(self.node_to_doc(&t.left)));
                d.right = Some(Box::new(self.node_to_doc(&t.right)));
                d.middle = Some(Box::new(self.node_to_doc(&t.middle)));
                d
            }
        }
    }

    fn split_to_doc(&self, split: &SplitSpec, d: &mut NodeDoc) {
        let f = &self.features[split.partition.feature()];
        d.feature = Some(f.name.clone());
        match &split.partition {
            Partition::Threshold { threshold, .. } => d.threshold = Some(*threshold),
            Partition::Categories { left, right, .. } => {
                let names = |codes: &[u32]| codes.iter().map(|&c| f.categories[c as usize].clone()).collect();
                d.left_categories = Some(names(left));
                d.right_categories = Some(names(right));
            }
        }
        d.missing = Some(match split.route {
            MissingRoute::Left => RouteDoc::Left,
            MissingRoute::Right => RouteDoc::Right,
            MissingRoute::Middle => RouteDoc::Middle,
            MissingRoute::Fractional { left, right } => {
                d.fractions = Some([left, right]);
                RouteDoc::Fractional
            }
        });
    }

    pub fn to_json(&self) -> String {
        let doc = TreeDoc {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            strategy: self.strategy,
            task: match self.loss {
                LossKind::Sse => TaskKind::Regression,
                LossKind::CrossEntropy { .. } => TaskKind::Classification,
            },
            target: self.target.clone(),
            classes: self.classes.clone(),
            features: self
                .features
                .iter()
                .map(|f| FeatureDoc {
                    name: f.name.clone(),
                    kind: f.kind,
                    categories: f.categories.clone(),
                })
                .collect(),
            root: self.node_to_doc(&self.root),
        };
        serde_json::to_string_pretty(&doc).expect("tree documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Tree> {
        let doc: TreeDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if doc.format != FORMAT_NAME {
            return Err(bad(format!("unknown format `{}`", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {}", doc.version)));
        }
        let loss = match doc.task {
            TaskKind::Regression => {
                if !doc.classes.is_empty() {
                    return Err(bad("regression trees carry no classes"));
                }
                LossKind::Sse
            }
            TaskKind::Classification => {
                if doc.classes.len() < 2 {
                    return Err(bad("classification trees need at least 2 classes"));
                }
                LossKind::CrossEntropy {
                    classes: doc.classes.len(),
                }
            }
        };
        let features: Vec<FeatureInfo> = doc
            .features
            .into_iter()
            .map(|f| {
                if f.kind == ColumnKind::Numeric && !f.categories.is_empty() {
                    return Err(bad(format!("numeric feature `{}` lists categories", f.name)));
                }
                Ok(FeatureInfo {
                    name: f.name,
                    kind: f.kind,
                    categories: f.categories,
                })
            })
            .collect::<Result<_>>()?;
        let mut tree = Tree {
            strategy: doc.strategy,
            loss,
            target: doc.target,
            classes: doc.classes,
            features,
            root: Node::Leaf(Leaf {
                value: LeafValue::Real(0.0),
                n_samples: 0,
                weight: 0.0,
                loss: 0.0,
            }),
        };
        tree.root = tree.node_from_doc(doc.root)?;
        Ok(tree)
    }

    fn node_from_doc(&self, d: NodeDoc) -> Result<Node> {
        match d.node {
            NodeKind::Leaf => {
                if d.left.is_some() || d.right.is_some() || d.middle.is_some() || d.feature.is_some() {
                    return Err(bad("leaf nodes cannot carry split fields"));
                }
                let value = match (d.value, d.probs) {
                    (Some(v), None) => LeafValue::Real(v),
                    (None, Some(p)) => LeafValue::Probs(p),
                    _ => return Err(bad("leaf needs exactly one of `value` or `probs`")),
                };
                value.validate(self.loss)?;
                Ok(Node::Leaf(Leaf {
                    value,
                    n_samples: d.n_samples,
                    weight: d.weight.unwrap_or(d.n_samples as f64),
                    loss: d.loss.unwrap_or(0.0),
                }))
            }
            NodeKind::Binary | NodeKind::Trinary => {
                let name = d.feature.as_deref().ok_or_else(|| bad("split node without `feature`"))?;
                let j = self
                    .features
                    .iter()
                    .position(|f| f.name == name)
                    .ok_or_else(|| bad(format!("unknown feature `{name}`")))?;
                let info = &self.features[j];
                let partition = match (info.kind, d.threshold, &d.left_categories, &d.right_categories) {
                    (ColumnKind::Numeric, Some(t), None, None) if t.is_finite() => Partition::Threshold {
                        feature: j,
                        threshold: t,
                    },
                    (ColumnKind::Categorical, None, Some(l), Some(r)) => {
                        let codes = |names: &[String]| -> Result<Vec<u32>> {
                            let mut out = names
                                .iter()
                                .map(|n| {
                                    info.categories
                                        .iter()
                                        .position(|c| c == n)
                                        .map(|k| k as u32)
                                        .ok_or_else(|| bad(format!("unknown category `{n}` for `{name}`")))
                                })
                                .collect::<Result<Vec<_>>>()?;
                            out.sort_unstable();
                            Ok(out)
                        };
                        let (left, right) = (codes(l)?, codes(r)?);
                        if left.is_empty() || right.is_empty() || left.iter().any(|c| right.binary_search(c).is_ok())
                        {
                            return Err(bad("category sets must be nonempty and disjoint"));
                        }
                        Partition::Categories {
                            feature: j,
                            left,
                            right,
                        }
                    }
                    _ => return Err(bad(format!("split on `{name}` does not match the feature kind"))),
                };
                let route = match (d.missing, d.fractions) {
                    (Some(RouteDoc::Left), None) => MissingRoute::Left,
                    (Some(RouteDoc::Right), None) => MissingRoute::Right,
                    (Some(RouteDoc::Middle), None) => MissingRoute::Middle,
                    (Some(RouteDoc::Fractional), Some([l, r])) => {
                        if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&r) || (l + r - 1.0).abs() > 1e-12 {
                            return Err(bad(format!("fractions {l}, {r} do not form a distribution")));
                        }
                        MissingRoute::Fractional { left: l, right: r }
                    }
                    _ => return Err(bad("split node has an invalid `missing` route")),
                };
                let child = |c: Option<Box<NodeDoc>>, which: &str| -> Result<Node> {
                    self.node_from_doc(*c.ok_or_else(|| bad(format!("split node without `{which}` child")))?)
                };
                let split = SplitSpec { partition, route };
                if d.node == NodeKind::Binary {
                    if route == MissingRoute::Middle || d.middle.is_some() {
                        return Err(bad("binary nodes cannot route missing values to a middle child"));
                    }
                    Ok(Node::Binary(Box::new(BinaryNode {
                        split,
                        n_samples: d.n_samples,
                        weight: d.weight.unwrap_or(d.n_samples as f64),
                        left: child(d.left, "left")?,
                        right: child(d.right, "right")?,
                    })))
                } else {
                    if route != MissingRoute::Middle {
                        return Err(bad("trinary nodes must route missing values to the middle child"));
                    }
                    if !self.strategy.is_trinary() {
                        return Err(bad(format!("{} trees cannot contain trinary nodes", self.strategy)));
                    }
                    Ok(Node::Trinary(Box::new(TrinaryNode {
                        split,
                        n_samples: d.n_samples,
                        left: child(d.left, "left")?,
                        right: child(d.right, "right")?,
                        middle: child(d.middle, "middle")?,
                    })))
                }
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Tree> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Tree::from_json(&text)
    }
}

// ---------------------------------------------------------------------------
// rendering

fn fmt_leaf(value: &LeafValue) -> String {
    match value {
        LeafValue::Real(v) => format!("δ={v}"),
        LeafValue::Probs(p) => {
            let parts: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
            format!("δ=[{}]", parts.join(", "))
        }
    }
}

impl Tree {
    fn condition(&self, p: &Partition) -> (String, String) {
        let f = &self.features[p.feature()];
        match p {
            Partition::Threshold { threshold, .. } => {
                (format!("{} <= {threshold}", f.name), format!("{} > {threshold}", f.name))
            }
            Partition::Categories { left, right, .. } => {
                let names = |codes: &[u32]| {
                    codes
                        .iter()
                        .map(|&c| f.categories[c as usize].as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                (
                    format!("{} in {{{}}}", f.name, names(left)),
                    format!("{} in {{{}}}", f.name, names(right)),
                )
            }
        }
    }

    fn render_node(&self, node: &Node, indent: usize, label: &str, depth: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match node {
            Node::Leaf(l) => {
                let _ = writeln!(out, "{pad}{label}leaf {} (n={})", fmt_leaf(&l.value), l.n_samples);
            }
            Node::Binary(b) => {
                let (lc, rc) = self.condition(&b.split.partition);
                let name = &self.features[b.split.partition.feature()].name;
                let _ = writeln!(out, "{pad}{label}split on {name} at depth {depth} (n={})", b.n_samples);
                let (lm, rm) = match b.split.route {
                    MissingRoute::Left => (" or missing", ""),
                    MissingRoute::Right => ("", " or missing"),
                    MissingRoute::Fractional { .. } => ("", ""),
                    MissingRoute::Middle => unreachable!(),
                };
                self.render_node(&b.left, indent + 1, &format!("left [{lc}{lm}]: "), depth + 1, out);
                self.render_node(&b.right, indent + 1, &format!("right [{rc}{rm}]: "), depth + 1, out);
                if let MissingRoute::Fractional { left, right } = b.split.route {
                    let _ = writeln!(out, "{pad}  missing [{name} missing]: {left} × left + {right} × right");
                }
            }
            Node::Trinary(t) => {
                let (lc, rc) = self.condition(&t.split.partition);
                let name = &self.features[t.split.partition.feature()].name;
                let _ = writeln!(out, "{pad}{label}split on {name} at depth {depth} (n={})", t.n_samples);
                self.render_node(&t.left, indent + 1, &format!("left [{lc}]: "), depth + 1, out);
                self.render_node(&t.right, indent + 1, &format!("right [{rc}]: "), depth + 1, out);
                self.render_node(&t.middle, indent + 1, &format!("missing [{name} missing]: "), depth, out);
            }
        }
    }

    /// Indented text view, one line per node.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(&self.root, 0, "", 0, &mut out);
        out
    }
}
