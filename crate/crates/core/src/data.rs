//! Columnar datasets with explicit per-cell missingness, CSV ingestion and
//! cross-validation fold assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::rng::{hash_str, mix_seed};

/// Tokens treated as missing when no explicit set is configured.
pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["", "NA", "nan"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regression" => Ok(TaskKind::Regression),
            "classification" => Ok(TaskKind::Classification),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// A single feature cell. Categorical cells hold a code into the owning
/// column's category dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(u32),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical {
        codes: Vec<Option<u32>>,
        categories: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub data: ColumnData,
}

impl FeatureColumn {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        FeatureColumn {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    /// Builds a categorical column, deriving a sorted category dictionary
    /// from the present values.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Self {
        let categories: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, u32> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let codes = values
            .iter()
            .map(|v| v.as_ref().map(|s| index[s.as_ref()]))
            .collect();
        FeatureColumn {
            name: name.into(),
            data: ColumnData::Categorical { codes, categories },
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, row: usize) -> Cell {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map_or(Cell::Missing, Cell::Num),
            ColumnData::Categorical { codes, .. } => codes[row].map_or(Cell::Missing, Cell::Cat),
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn n_missing(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Numeric(_) => None,
            ColumnData::Categorical { categories, .. } => Some(categories),
        }
    }

    pub(crate) fn set_missing(&mut self, row: usize) {
        match &mut self.data {
            ColumnData::Numeric(v) => v[row] = None,
            ColumnData::Categorical { codes, .. } => codes[row] = None,
        }
    }

    fn subset(&self, rows: &[usize]) -> FeatureColumn {
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical { codes, categories } => ColumnData::Categorical {
                codes: rows.iter().map(|&i| codes[i]).collect(),
                categories: categories.clone(),
            },
        };
        FeatureColumn {
            name: self.name.clone(),
            data,
        }
    }

    fn format_cell(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            ColumnData::Categorical { codes, categories } => codes[row]
                .map(|c| categories[c as usize].clone())
                .unwrap_or_default(),
        }
    }
}

/// Observed responses. Never missing.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Real(Vec<f64>),
    Class { labels: Vec<u32>, classes: Vec<String> },
}

impl Response {
    pub fn len(&self) -> usize {
        match self {
            Response::Real(v) => v.len(),
            Response::Class { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Response::Real(_) => TaskKind::Regression,
            Response::Class { .. } => TaskKind::Classification,
        }
    }

    pub fn loss_kind(&self) -> LossKind {
        match self {
            Response::Real(_) => LossKind::Sse,
            Response::Class { classes, .. } => LossKind::CrossEntropy {
                classes: classes.len(),
            },
        }
    }

    /// The response as a real number; class labels are returned as their index.
    pub fn value(&self, row: usize) -> f64 {
        match self {
            Response::Real(v) => v[row],
            Response::Class { labels, .. } => labels[row] as f64,
        }
    }

    pub fn label(&self, row: usize) -> Option<u32> {
        match self {
            Response::Real(_) => None,
            Response::Class { labels, .. } => Some(labels[row]),
        }
    }

    fn subset(&self, rows: &[usize]) -> Response {
        match self {
            Response::Real(v) => Response::Real(rows.iter().map(|&i| v[i]).collect()),
            Response::Class { labels, classes } => Response::Class {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                classes: classes.clone(),
            },
        }
    }

    fn format_cell(&self, row: usize) -> String {
        match self {
            Response::Real(v) => v[row].to_string(),
            Response::Class { labels, classes } => classes[labels[row] as usize].clone(),
        }
    }
}

/// An immutable table of feature columns plus a response column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<FeatureColumn>,
    target: String,
    response: Response,
}

impl Dataset {
    pub fn new(columns: Vec<FeatureColumn>, target: impl Into<String>, response: Response) -> Result<Self> {
        let n = response.len();
        let target = target.into();
        let mut names = BTreeSet::new();
        for col in &columns {
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "column `{}` has {} rows, response has {n}",
                    col.name,
                    col.len()
                )));
            }
            if !names.insert(col.name.as_str()) || col.name == target {
                return Err(Error::Validation(format!("duplicate column name `{}`", col.name)));
            }
            match &col.data {
                ColumnData::Numeric(v) => {
                    if let Some(row) = v.iter().position(|x| x.is_some_and(|x| !x.is_finite())) {
                        return Err(Error::Validation(format!(
                            "non-finite value in column `{}` at row {row}",
                            col.name
                        )));
                    }
                }
                ColumnData::Categorical { codes, categories } => {
                    if codes.iter().flatten().any(|&c| c as usize >= categories.len()) {
                        return Err(Error::Validation(format!(
                            "column `{}` references a category outside its dictionary",
                            col.name
                        )));
                    }
                }
            }
        }
        match &response {
            Response::Real(v) => {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Validation("non-finite response value".into()));
                }
            }
            Response::Class { labels, classes } => {
                if classes.len() < 2 {
                    return Err(Error::Validation(format!(
                        "classification needs at least 2 classes, found {}",
                        classes.len()
                    )));
                }
                if labels.iter().any(|&l| l as usize >= classes.len()) {
                    return Err(Error::Validation("class label outside 0..K".into()));
                }
            }
        }
        Ok(Dataset {
            columns,
            target,
            response,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &FeatureColumn {
        &self.columns[j]
    }

    pub(crate) fn columns_mut(&mut self) -> &mut [FeatureColumn] {
        &mut self.columns
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn task(&self) -> TaskKind {
        self.response.task()
    }

    pub fn loss_kind(&self) -> LossKind {
        self.response.loss_kind()
    }

    pub fn row(&self, i: usize) -> Vec<Cell> {
        self.columns.iter().map(|c| c.cell(i)).collect()
    }

    pub fn n_missing(&self) -> usize {
        self.columns.iter().map(FeatureColumn::n_missing).sum()
    }

    /// Copies the given rows (in order) into a new dataset sharing the
    /// category dictionaries.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.subset(rows)).collect(),
            target: self.target.clone(),
            response: self.response.subset(rows),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = self
            .columns
            .iter()
            .map(|c| c.name.as_str())
            .chain(std::iter::once(self.target.as_str()))
            .collect();
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let record: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.format_cell(i))
                .chain(std::iter::once(self.response.format_cell(i)))
                .collect();
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// Column typing for CSV ingestion. Columns not listed are numeric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    pub task: TaskKind,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnKind>,
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
}

fn default_missing_tokens() -> Vec<String> {
    DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()
}

impl Schema {
    pub fn new(target: impl Into<String>, task: TaskKind) -> Self {
        Schema {
            target: target.into(),
            task,
            columns: BTreeMap::new(),
            ignore: Vec::new(),
            missing_tokens: default_missing_tokens(),
        }
    }

    pub fn with_kind(mut self, column: impl Into<String>, kind: ColumnKind) -> Self {
        self.columns.insert(column.into(), kind);
        self
    }

    /// Parses a TOML sidecar:
    ///
    /// ```toml
    /// target = "mpg"
    /// task = "regression"
    /// missing_tokens = ["", "NA", "?"]
    /// [columns]
    /// origin = "categorical"
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn kind_of(&self, column: &str) -> ColumnKind {
        self.columns.get(column).copied().unwrap_or(ColumnKind::Numeric)
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let (columns, response_raw) = read_table(reader, schema, true)?;
    let response_raw = response_raw.unwrap_or_default();
    if response_raw.is_empty() {
        return Err(Error::Validation("dataset has no data rows".into()));
    }

    let response = match schema.task {
        TaskKind::Regression => {
            let values = response_raw
                .iter()
                .enumerate()
                .map(|(row, s)| {
                    s.parse::<f64>().ok().filter(|y| y.is_finite()).ok_or_else(|| Error::Parse {
                        row,
                        column: schema.target.clone(),
                        message: format!("`{s}` is not a finite number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Response::Real(values)
        }
        TaskKind::Classification => {
            let classes = sorted_labels(&response_raw);
            let index: HashMap<&str, u32> = classes
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i as u32))
                .collect();
            let labels = response_raw.iter().map(|s| index[s.as_str()]).collect();
            Response::Class { labels, classes }
        }
    };

    Dataset::new(columns, schema.target.clone(), response)
}

/// Reads feature columns only; the target column is skipped when present.
pub fn read_features<R: Read>(reader: R, schema: &Schema) -> Result<Vec<FeatureColumn>> {
    Ok(read_table(reader, schema, false)?.0)
}

type Table = (Vec<FeatureColumn>, Option<Vec<String>>);

fn read_table<R: Read>(reader: R, schema: &Schema, require_target: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let target_idx = header.iter().position(|h| *h == schema.target);
    if require_target && target_idx.is_none() {
        return Err(Error::Schema(format!("target column `{}` not found in header", schema.target)));
    }
    for name in schema.columns.keys().chain(schema.ignore.iter()) {
        if !header.contains(name) && *name != schema.target {
            return Err(Error::Schema(format!("schema names unknown column `{name}`")));
        }
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| Some(i) != target_idx && !schema.ignore.contains(&header[i]))
        .collect();

    let is_missing = |s: &str| schema.missing_tokens.iter().any(|t| t == s);
    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); feature_idx.len()];
    let mut numeric: Vec<Vec<Option<f64>>> = vec![Vec::new(); feature_idx.len()];
    let mut response_raw: Vec<String> = Vec::new();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (slot, &ci) in feature_idx.iter().enumerate() {
            let field = &record[ci];
            let name = &header[ci];
            let missing = is_missing(field);
            match schema.kind_of(name) {
                ColumnKind::Numeric => {
                    let value = if missing {
                        None
                    } else {
                        let x: f64 = field.parse().map_err(|_| Error::Parse {
                            row,
                            column: name.clone(),
                            message: format!("`{field}` is not a number"),
                        })?;
                        if !x.is_finite() {
                            return Err(Error::Parse {
                                row,
                                column: name.clone(),
                                message: format!("`{field}` is not finite"),
                            });
                        }
                        Some(x)
                    };
                    numeric[slot].push(value);
                }
                ColumnKind::Categorical => {
                    raw[slot].push((!missing).then(|| field.to_string()));
                }
            }
        }
        if let Some(t) = target_idx {
            let y = &record[t];
            if is_missing(y) {
                return Err(Error::Validation(format!("missing response at row {row}")));
            }
            response_raw.push(y.to_string());
        }
    }

    let columns = feature_idx
        .iter()
        .enumerate()
        .map(|(slot, &ci)| {
            let name = header[ci].clone();
            match schema.kind_of(&name) {
                ColumnKind::Numeric => FeatureColumn::numeric(name, std::mem::take(&mut numeric[slot])),
                ColumnKind::Categorical => FeatureColumn::categorical(name, &raw[slot]),
            }
        })
        .collect();
    Ok((columns, target_idx.map(|_| response_raw)))
}

// Numeric-looking labels sort numerically, anything else lexically.
fn sorted_labels(raw: &[String]) -> Vec<String> {
    let mut classes: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let all_numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    if let Some(nums) = all_numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(classes).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        classes = paired.into_iter().map(|(_, c)| c).collect();
    }
    classes
}

/// Fold index for every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of_row: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&i| self.fold_of_row[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&i| self.fold_of_row[i] != fold)
            .collect()
    }
}

/// Assigns rows to `k` folds. Classification shuffles within each class and
/// deals the rows round-robin, continuing the rotation across classes so fold
/// sizes stay balanced as well.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = ds.n_rows();
    if k < 2 {
        return Err(Error::Config(format!("fold count must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("fold count {k} exceeds row count {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[hash_str("folds")]));
    let mut fold_of_row = vec![0; n];
    match ds.response() {
        Response::Real(_) => {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng);
            for (pos, &row) in rows.iter().enumerate() {
                fold_of_row[row] = pos % k;
            }
        }
        Response::Class { labels, classes } => {
            let mut next = 0;
            for class in 0..classes.len() as u32 {
                let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                rows.shuffle(&mut rng);
                for row in rows {
                    fold_of_row[row] = next;
                    next = (next + 1) % k;
                }
            }
        }
    }
    Ok(FoldAssignment { fold_of_row, k })
}
