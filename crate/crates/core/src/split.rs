//! Candidate partitions of a feature's domain and their scoring under each
//! missing-value strategy.
//!
//! Every strategy prices a candidate `(feature, left set, right set)` from
//! three sufficient statistics: the observed-left rows `L`, the observed-right
//! rows `R` and the rows `M` missing the feature.
//!
//! * Majority appends `M` to the child with more observed rows (ties go right).
//! * MIA appends `M` to whichever child gives the lower loss.
//! * Fractional Case sends `M` to both children, scaled by each side's share of
//!   the observed rows.
//! * Trinary prices `M` at the mother node's estimate and fits `L`, `R` alone.
//! * TrinaryMIA takes the cheaper of the best MIA and best Trinary split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, ColumnData, Dataset};
use crate::error::Error;
use crate::loss::{LeafValue, LossKind, LossStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "majority")]
    Majority,
    #[serde(rename = "mia")]
    Mia,
    #[serde(rename = "fc")]
    FractionalCase,
    #[serde(rename = "trinary")]
    Trinary,
    #[serde(rename = "trinary-mia")]
    TrinaryMia,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Majority,
        Strategy::Mia,
        Strategy::FractionalCase,
        Strategy::Trinary,
        Strategy::TrinaryMia,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Majority => "majority",
            Strategy::Mia => "mia",
            Strategy::FractionalCase => "fc",
            Strategy::Trinary => "trinary",
            Strategy::TrinaryMia => "trinary-mia",
        }
    }

    pub fn is_trinary(&self) -> bool {
        matches!(self, Strategy::Trinary | Strategy::TrinaryMia)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "majority" | "maj" => Ok(Strategy::Majority),
            "mia" => Ok(Strategy::Mia),
            "fc" | "fractional" | "fractional-case" => Ok(Strategy::FractionalCase),
            "trinary" | "tri" => Ok(Strategy::Trinary),
            "trinary-mia" | "trinarymia" => Ok(Strategy::TrinaryMia),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Two-set partition of one feature's observed domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    /// Left holds values `<= threshold`.
    Threshold { feature: usize, threshold: f64 },
    /// Sorted category codes on each side. Codes on neither side were not
    /// seen at the node and route like a missing value.
    Categories {
        feature: usize,
        left: Vec<u32>,
        right: Vec<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Partition {
    pub fn feature(&self) -> usize {
        match self {
            Partition::Threshold { feature, .. } | Partition::Categories { feature, .. } => *feature,
        }
    }

    /// Side of an observed cell; `None` for missing cells, unseen categories
    /// and cells of the wrong kind.
    pub fn side(&self, cell: Cell) -> Option<Side> {
        match (self, cell) {
            (Partition::Threshold { threshold, .. }, Cell::Num(x)) => {
                Some(if x <= *threshold { Side::Left } else { Side::Right })
            }
            (Partition::Categories { left, right, .. }, Cell::Cat(c)) => {
                if left.binary_search(&c).is_ok() {
                    Some(Side::Left)
                } else if right.binary_search(&c).is_ok() {
                    Some(Side::Right)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// Where rows missing the split feature go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissingRoute {
    Left,
    Right,
    /// Third child (Trinary-style splits).
    Middle,
    /// Both children, with the observed-data fractions of each side.
    Fractional { left: f64, right: f64 },
}

/// Row indices of a child together with their case weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChildSet {
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ChildSet {
    fn push(&mut self, row: usize, weight: f64) {
        self.rows.push(row);
        self.weights.push(weight);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A priced split. For `Middle` routes the children hold observed rows only;
/// the middle child is the whole node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSplit {
    pub partition: Partition,
    pub route: MissingRoute,
    pub total_loss: f64,
    pub left: ChildSet,
    pub right: ChildSet,
}

/// Basis for the Fractional Case missing-row fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractionBasis {
    /// Observed row counts on each side.
    #[default]
    RowCount,
    /// Observed case-weight sums on each side.
    WeightSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Minimum rows per child (Majority, MIA, Trinary).
    pub min_child: usize,
    /// Minimum total case weight per child (Fractional Case).
    pub min_child_weight: f64,
    /// Largest category count searched exhaustively when the ordering
    /// shortcut does not apply.
    pub exhaustive_category_limit: usize,
    pub fraction_basis: FractionBasis,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            min_child: 5,
            min_child_weight: 5.0,
            exhaustive_category_limit: 10,
            fraction_basis: FractionBasis::RowCount,
        }
    }
}

// ---------------------------------------------------------------------------
// candidate enumeration

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CategoricalSearch {
    /// Prefix cuts of categories sorted by mean response (or class-1 share).
    MeanOrdered,
    /// Prefix cuts of categories sorted by descending weight.
    FrequencyOrdered,
    /// Every nontrivial two-set partition.
    Exhaustive,
}

enum Cut<'a> {
    Threshold(f64),
    Categories { left: &'a [u32], right: &'a [u32] },
}

impl Partition {
    /// Swaps the left and right category sets.
    fn mirrored(self) -> Partition {
        match self {
            Partition::Categories { feature, left, right } => Partition::Categories {
                feature,
                left: right,
                right: left,
            },
            other => other,
        }
    }
}

impl Cut<'_> {
    fn to_partition(&self, feature: usize) -> Partition {
        match *self {
            Cut::Threshold(threshold) => Partition::Threshold { feature, threshold },
            Cut::Categories { left, right } => {
                let mut left = left.to_vec();
                let mut right = right.to_vec();
                left.sort_unstable();
                right.sort_unstable();
                Partition::Categories { feature, left, right }
            }
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

fn search_mode(kind: LossKind, n_categories: usize, needs_exact: bool, cfg: &SplitConfig) -> CategoricalSearch {
    let small = n_categories <= cfg.exhaustive_category_limit;
    match kind {
        LossKind::CrossEntropy { classes } if classes > 2 => {
            if small {
                CategoricalSearch::Exhaustive
            } else {
                CategoricalSearch::FrequencyOrdered
            }
        }
        _ if needs_exact && small => CategoricalSearch::Exhaustive,
        _ => CategoricalSearch::MeanOrdered,
    }
}

/// Visits every candidate cut of feature `j` over the observed rows, passing
/// the observed-left statistics and observed-left row count.
fn visit_cuts(
    ds: &Dataset,
    j: usize,
    observed: &[(usize, f64)],
    shift: f64,
    mode: impl Fn(usize) -> CategoricalSearch,
    visit: &mut dyn FnMut(Cut<'_>, &LossStats, usize),
) {
    let kind = ds.loss_kind();
    let response = ds.response();
    match &ds.column(j).data {
        ColumnData::Numeric(values) => {
            let mut sorted: Vec<(f64, usize, f64)> = observed
                .iter()
                .map(|&(r, w)| (values[r].expect("observed row"), r, w))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left = LossStats::new(kind, shift);
            for i in 0..sorted.len().saturating_sub(1) {
                let (x, r, w) = sorted[i];
                left.add(response.value(r), w);
                let next = sorted[i + 1].0;
                if next > x {
                    visit(Cut::Threshold(midpoint(x, next)), &left, i + 1);
                }
            }
        }
        ColumnData::Categorical { codes, .. } => {
            // Per-category statistics, in code order.
            let mut groups: Vec<(u32, LossStats, usize)> = Vec::new();
            {
                let mut present: Vec<(u32, usize, f64)> = observed
                    .iter()
                    .map(|&(r, w)| (codes[r].expect("observed row"), r, w))
                    .collect();
                present.sort_by_key(|&(c, r, _)| (c, r));
                for (c, r, w) in present {
                    if groups.last().map(|g| g.0) != Some(c) {
                        groups.push((c, LossStats::new(kind, shift), 0));
                    }
                    let g = groups.last_mut().unwrap();
                    g.1.add(response.value(r), w);
                    g.2 += 1;
                }
            }
            if groups.len() < 2 {
                return;
            }
            match mode(groups.len()) {
                CategoricalSearch::Exhaustive => {
                    let c = groups.len();
                    let mut left_codes = Vec::with_capacity(c);
                    let mut right_codes = Vec::with_capacity(c);
                    for mask in 1u64..(1u64 << (c - 1)) {
                        left_codes.clear();
                        right_codes.clear();
                        let mut left = LossStats::new(kind, shift);
                        let mut n_left = 0;
                        for (g, (code, stats, n)) in groups.iter().enumerate() {
                            let goes_right = g > 0 && mask & (1 << (g - 1)) != 0;
                            if goes_right {
                                right_codes.push(*code);
                            } else {
                                left_codes.push(*code);
                                left = left.plus(stats);
                                n_left += n;
                            }
                        }
                        visit(
                            Cut::Categories {
                                left: &left_codes,
                                right: &right_codes,
                            },
                            &left,
                            n_left,
                        );
                    }
                }
                search => {
                    let key = |s: &LossStats| -> f64 {
                        match (search, s) {
                            (CategoricalSearch::FrequencyOrdered, _) => -s.weight(),
                            (_, LossStats::Sse { weight, sum, shift, .. }) => shift + sum / weight,
                            (_, LossStats::Xe { weight, counts }) => counts[1] / weight,
                        }
                    };
                    groups.sort_by(|a, b| key(&a.1).total_cmp(&key(&b.1)).then(a.0.cmp(&b.0)));
                    let order: Vec<u32> = groups.iter().map(|g| g.0).collect();
                    let mut left = LossStats::new(kind, shift);
                    let mut n_left = 0;
                    for cut in 1..groups.len() {
                        left = left.plus(&groups[cut - 1].1);
                        n_left += groups[cut - 1].2;
                        visit(
                            Cut::Categories {
                                left: &order[..cut],
                                right: &order[cut..],
                            },
                            &left,
                            n_left,
                        );
                    }
                }
            }
        }
    }
}

/// Candidate partitions of feature `feature` over `rows`: midpoints between
/// consecutive distinct values for numeric features; for categorical ones,
/// prefix cuts of the mean-response ordering (regression, binary
/// classification), or every nontrivial partition for multiclass problems with
/// at most [`SplitConfig::exhaustive_category_limit`] categories.
pub fn enumerate_candidates(ds: &Dataset, feature: usize, rows: &[usize], weights: Option<&[f64]>) -> Vec<Partition> {
    let cfg = SplitConfig::default();
    let observed = observed_rows(ds, feature, rows, weights).0;
    let shift = rows.first().map_or(0.0, |&r| ds.response().value(r));
    let mut out = Vec::new();
    visit_cuts(
        ds,
        feature,
        &observed,
        shift,
        |c| search_mode(ds.loss_kind(), c, false, &cfg),
        &mut |cut, _, _| out.push(cut.to_partition(feature)),
    );
    out
}

type RowWeights = Vec<(usize, f64)>;

fn observed_rows(ds: &Dataset, feature: usize, rows: &[usize], weights: Option<&[f64]>) -> (RowWeights, RowWeights) {
    let col = ds.column(feature);
    let mut observed = Vec::with_capacity(rows.len());
    let mut missing = Vec::new();
    for (k, &r) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        if col.is_missing(r) {
            missing.push((r, w));
        } else {
            observed.push((r, w));
        }
    }
    (observed, missing)
}

// ---------------------------------------------------------------------------
// scoring one partition

/// Weight floor check, tolerant of rounding in accumulated fractions.
pub(crate) fn heavy_enough(weight: f64, floor: f64) -> bool {
    weight >= floor - 1e-9
}

fn majority_route(n_left: usize, n_right: usize) -> MissingRoute {
    if n_left > n_right {
        MissingRoute::Left
    } else {
        MissingRoute::Right
    }
}

struct Assigned {
    left: ChildSet,
    right: ChildSet,
    missing: ChildSet,
}

fn assign(ds: &Dataset, rows: &[usize], weights: Option<&[f64]>, partition: &Partition) -> Assigned {
    let col = ds.column(partition.feature());
    let mut out = Assigned {
        left: ChildSet::default(),
        right: ChildSet::default(),
        missing: ChildSet::default(),
    };
    for (k, &r) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        match partition.side(col.cell(r)) {
            Some(Side::Left) => out.left.push(r, w),
            Some(Side::Right) => out.right.push(r, w),
            None => out.missing.push(r, w),
        }
    }
    out
}

fn stats_of(ds: &Dataset, shift: f64, sets: &[&ChildSet]) -> LossStats {
    let mut s = LossStats::new(ds.loss_kind(), shift);
    for set in sets {
        for (&r, &w) in set.rows.iter().zip(&set.weights) {
            s.add(ds.response().value(r), w);
        }
    }
    s
}

fn shift_of(ds: &Dataset, rows: &[usize]) -> f64 {
    rows.first().map_or(0.0, |&r| ds.response().value(r))
}

/// Scores a binary split whose missing rows are appended to the `route` side.
/// `None` when either child ends up with fewer than `min_child` rows.
pub fn score_binary(
    ds: &Dataset,
    rows: &[usize],
    partition: &Partition,
    route: MissingRoute,
    min_child: usize,
) -> Option<ScoredSplit> {
    let shift = shift_of(ds, rows);
    let Assigned {
        mut left,
        mut right,
        missing,
    } = assign(ds, rows, None, partition);
    match route {
        MissingRoute::Left => {
            left.rows.extend(&missing.rows);
            left.weights.extend(&missing.weights);
        }
        MissingRoute::Right => {
            right.rows.extend(&missing.rows);
            right.weights.extend(&missing.weights);
        }
        _ => panic!("score_binary needs a Left or Right route"),
    }
    if left.len() < min_child.max(1) || right.len() < min_child.max(1) {
        return None;
    }
    let total_loss = stats_of(ds, shift, &[&left]).fitted_loss() + stats_of(ds, shift, &[&right]).fitted_loss();
    Some(ScoredSplit {
        partition: partition.clone(),
        route,
        total_loss,
        left,
        right,
    })
}

/// Scores a Fractional Case split. Rows missing the feature enter both
/// children with their weight scaled by the observed share of each side.
pub fn score_fractional(
    ds: &Dataset,
    rows: &[usize],
    weights: &[f64],
    partition: &Partition,
    min_child_weight: f64,
    basis: FractionBasis,
) -> Option<ScoredSplit> {
    let shift = shift_of(ds, rows);
    let Assigned {
        mut left,
        mut right,
        missing,
    } = assign(ds, rows, Some(weights), partition);
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let (frac_left, frac_right) = fractions(
        basis,
        left.len(),
        right.len(),
        left.total_weight(),
        right.total_weight(),
    );
    for (&r, &w) in missing.rows.iter().zip(&missing.weights) {
        left.push(r, w * frac_left);
        right.push(r, w * frac_right);
    }
    let ls = stats_of(ds, shift, &[&left]);
    let rs = stats_of(ds, shift, &[&right]);
    if !heavy_enough(ls.weight(), min_child_weight) || !heavy_enough(rs.weight(), min_child_weight) {
        return None;
    }
    Some(ScoredSplit {
        partition: partition.clone(),
        route: MissingRoute::Fractional {
            left: frac_left,
            right: frac_right,
        },
        total_loss: ls.fitted_loss() + rs.fitted_loss(),
        left,
        right,
    })
}

fn fractions(basis: FractionBasis, n_left: usize, n_right: usize, w_left: f64, w_right: f64) -> (f64, f64) {
    let (a, b) = match basis {
        FractionBasis::RowCount => (n_left as f64, n_right as f64),
        FractionBasis::WeightSum => (w_left, w_right),
    };
    let left = a / (a + b);
    (left, 1.0 - left)
}

/// Scores a Trinary split: observed rows are fitted per side while rows
/// missing the feature are priced at the mother node's estimate.
pub fn score_trinary(
    ds: &Dataset,
    rows: &[usize],
    partition: &Partition,
    mother: &LeafValue,
    min_child: usize,
) -> Option<ScoredSplit> {
    let shift = shift_of(ds, rows);
    let Assigned { left, right, missing } = assign(ds, rows, None, partition);
    if left.len() < min_child.max(1) || right.len() < min_child.max(1) {
        return None;
    }
    let missing_term = missing_loss(ds, &missing.rows, mother);
    let total_loss =
        stats_of(ds, shift, &[&left]).fitted_loss() + stats_of(ds, shift, &[&right]).fitted_loss() + missing_term;
    Some(ScoredSplit {
        partition: partition.clone(),
        route: MissingRoute::Middle,
        total_loss,
        left,
        right,
    })
}

fn missing_loss(ds: &Dataset, rows: &[usize], at: &LeafValue) -> f64 {
    rows.iter().map(|&r| at.loss_at(ds.response().value(r))).sum()
}

// ---------------------------------------------------------------------------
// best split search

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Objective {
    Majority,
    Mia,
    Fractional,
    Trinary,
}

struct Best {
    loss: f64,
    partition: Option<Partition>,
    route: MissingRoute,
}

impl Best {
    fn new() -> Self {
        Best {
            loss: f64::INFINITY,
            partition: None,
            route: MissingRoute::Right,
        }
    }
}

/// Loss of every row at the node's own fit.
pub fn node_loss(ds: &Dataset, rows: &[usize], weights: Option<&[f64]>) -> f64 {
    let mut s = LossStats::new(ds.loss_kind(), shift_of(ds, rows));
    for (k, &r) in rows.iter().enumerate() {
        s.add(ds.response().value(r), weights.map_or(1.0, |w| w[k]));
    }
    s.fitted_loss()
}

pub fn fit_node(ds: &Dataset, rows: &[usize], weights: Option<&[f64]>) -> LeafValue {
    let mut s = LossStats::new(ds.loss_kind(), 0.0);
    for (k, &r) in rows.iter().enumerate() {
        s.add(ds.response().value(r), weights.map_or(1.0, |w| w[k]));
    }
    s.fit()
}

fn search(
    ds: &Dataset,
    rows: &[usize],
    weights: Option<&[f64]>,
    features: &[usize],
    objective: Objective,
    cfg: &SplitConfig,
) -> Best {
    let kind = ds.loss_kind();
    let shift = shift_of(ds, rows);
    let mother = (objective == Objective::Trinary).then(|| fit_node(ds, rows, None));
    let mut best = Best::new();

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();

    for &j in &sorted_features {
        let (observed, missing) = observed_rows(ds, j, rows, weights);
        if observed.len() < 2 {
            continue;
        }
        let mut obs_total = LossStats::new(kind, shift);
        for &(r, w) in &observed {
            obs_total.add(ds.response().value(r), w);
        }
        let mut miss = LossStats::new(kind, shift);
        for &(r, w) in &missing {
            miss.add(ds.response().value(r), w);
        }
        let n_obs = observed.len();
        let n_miss = missing.len();
        let missing_term = match &mother {
            Some(m) => missing.iter().map(|&(r, _)| m.loss_at(ds.response().value(r))).sum(),
            None => 0.0,
        };
        let needs_exact = n_miss > 0 && objective != Objective::Trinary;
        let min_child = cfg.min_child.max(1);

        let mut evaluate = |cut: Cut<'_>, left: &LossStats, n_left: usize| {
            let right = obs_total.minus(left);
            let n_right = n_obs - n_left;
            // A categorical cut has no natural orientation, so on a count tie
            // either side may be labelled right.
            let mut mirrored = false;
            let scored = match objective {
                Objective::Majority => {
                    let route = majority_route(n_left, n_right);
                    let priced = price_route(left, &right, &miss, n_left, n_right, n_miss, route, min_child);
                    let tie_flip = matches!(cut, Cut::Categories { .. }) && n_left == n_right && n_miss > 0;
                    let flipped = if tie_flip {
                        price_route(left, &right, &miss, n_left, n_right, n_miss, MissingRoute::Left, min_child)
                    } else {
                        None
                    };
                    match (priced, flipped) {
                        (Some(a), Some(b)) if b < a => {
                            mirrored = true;
                            Some((b, MissingRoute::Right))
                        }
                        (None, Some(b)) => {
                            mirrored = true;
                            Some((b, MissingRoute::Right))
                        }
                        (a, _) => a.map(|l| (l, route)),
                    }
                }
                Objective::Mia => {
                    let to_left = price_route(left, &right, &miss, n_left, n_right, n_miss, MissingRoute::Left, min_child);
                    let to_right =
                        price_route(left, &right, &miss, n_left, n_right, n_miss, MissingRoute::Right, min_child);
                    match (to_left, to_right) {
                        (Some(a), Some(b)) if a < b => Some((a, MissingRoute::Left)),
                        (Some(a), Some(b)) if b < a => Some((b, MissingRoute::Right)),
                        (Some(a), Some(_)) => Some((a, majority_route(n_left, n_right))),
                        (Some(a), None) => Some((a, MissingRoute::Left)),
                        (None, Some(b)) => Some((b, MissingRoute::Right)),
                        (None, None) => None,
                    }
                }
                Objective::Fractional => {
                    let (fl, fr) = fractions(cfg.fraction_basis, n_left, n_right, left.weight(), right.weight());
                    let l = left.plus_scaled(&miss, fl);
                    let r = right.plus_scaled(&miss, fr);
                    (heavy_enough(l.weight(), cfg.min_child_weight) && heavy_enough(r.weight(), cfg.min_child_weight)).then(|| {
                        (
                            l.fitted_loss() + r.fitted_loss(),
                            MissingRoute::Fractional { left: fl, right: fr },
                        )
                    })
                }
                Objective::Trinary => (n_left >= min_child && n_right >= min_child)
                    .then(|| (left.fitted_loss() + right.fitted_loss() + missing_term, MissingRoute::Middle)),
            };
            if let Some((loss, route)) = scored {
                if loss < best.loss {
                    best.loss = loss;
                    best.route = route;
                    let partition = cut.to_partition(j);
                    best.partition = Some(if mirrored { partition.mirrored() } else { partition });
                }
            }
        };
        visit_cuts(
            ds,
            j,
            &observed,
            shift,
            |c| search_mode(kind, c, needs_exact, cfg),
            &mut evaluate,
        );
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn price_route(
    left: &LossStats,
    right: &LossStats,
    miss: &LossStats,
    n_left: usize,
    n_right: usize,
    n_miss: usize,
    route: MissingRoute,
    min_child: usize,
) -> Option<f64> {
    match route {
        MissingRoute::Left => (n_left + n_miss >= min_child && n_right >= min_child)
            .then(|| left.plus(miss).fitted_loss() + right.fitted_loss()),
        MissingRoute::Right => (n_left >= min_child && n_right + n_miss >= min_child)
            .then(|| left.fitted_loss() + right.plus(miss).fitted_loss()),
        _ => unreachable!(),
    }
}

/// Finds the loss-minimising split of `rows` over `features` under
/// `strategy`, or `None` when no candidate is feasible.
///
/// Ties resolve to the lowest feature index, then the earliest candidate;
/// TrinaryMIA prefers the Trinary split when both objectives tie.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    weights: Option<&[f64]>,
    features: &[usize],
    strategy: Strategy,
    cfg: &SplitConfig,
) -> Option<ScoredSplit> {
    if rows.is_empty() || features.is_empty() {
        return None;
    }
    let best = match strategy {
        Strategy::Majority => search(ds, rows, None, features, Objective::Majority, cfg),
        Strategy::Mia => search(ds, rows, None, features, Objective::Mia, cfg),
        Strategy::FractionalCase => search(ds, rows, weights, features, Objective::Fractional, cfg),
        Strategy::Trinary => search(ds, rows, None, features, Objective::Trinary, cfg),
        Strategy::TrinaryMia => {
            let tri = search(ds, rows, None, features, Objective::Trinary, cfg);
            let mia = search(ds, rows, None, features, Objective::Mia, cfg);
            match (&tri.partition, &mia.partition) {
                (Some(_), Some(_)) if mia.loss < tri.loss => mia,
                (Some(_), _) => tri,
                _ => mia,
            }
        }
    };
    let partition = best.partition?;
    Some(materialize(ds, rows, weights, partition, best.route, best.loss))
}

fn materialize(
    ds: &Dataset,
    rows: &[usize],
    weights: Option<&[f64]>,
    partition: Partition,
    route: MissingRoute,
    total_loss: f64,
) -> ScoredSplit {
    let fc_weights = match route {
        MissingRoute::Fractional { .. } => weights,
        _ => None,
    };
    let Assigned {
        mut left,
        mut right,
        missing,
    } = assign(ds, rows, fc_weights, &partition);
    match route {
        MissingRoute::Left => left.rows.extend(&missing.rows),
        MissingRoute::Right => right.rows.extend(&missing.rows),
        MissingRoute::Middle => {}
        MissingRoute::Fractional { left: fl, right: fr } => {
            for (&r, &w) in missing.rows.iter().zip(&missing.weights) {
                left.push(r, w * fl);
                right.push(r, w * fr);
            }
        }
    }
    if !matches!(route, MissingRoute::Fractional { .. }) {
        left.weights = vec![1.0; left.rows.len()];
        right.weights = vec![1.0; right.rows.len()];
    }
    ScoredSplit {
        partition,
        route,
        total_loss,
        left,
        right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureColumn, Response};

    fn ds_num(x: Vec<Option<f64>>, y: Vec<f64>) -> Dataset {
        Dataset::new(vec![FeatureColumn::numeric("x", x)], "y", Response::Real(y)).unwrap()
    }

    fn example5() -> Dataset {
        ds_num(
            vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), None],
            vec![0.0, 0.0, 10.0, 10.0, 5.0],
        )
    }

    fn thr(t: f64) -> Partition {
        Partition::Threshold {
            feature: 0,
            threshold: t,
        }
    }

    #[test]
    fn numeric_candidates_are_midpoints() {
        let ds = ds_num(vec![Some(3.0), Some(1.0), Some(2.0)], vec![0.0; 3]);
        let c = enumerate_candidates(&ds, 0, &[0, 1, 2], None);
        assert_eq!(c, vec![thr(1.5), thr(2.5)]);
    }

    #[test]
    fn single_value_column_has_no_candidates() {
        let ds = ds_num(vec![Some(3.0), Some(3.0), None], vec![0.0, 1.0, 2.0]);
        assert!(enumerate_candidates(&ds, 0, &[0, 1, 2], None).is_empty());
    }

    #[test]
    fn categorical_candidates_follow_mean_order() {
        let ds = Dataset::new(
            vec![FeatureColumn::categorical("c", &[Some("A"), Some("B"), Some("C"), Some("A")])],
            "y",
            Response::Real(vec![0.0, 10.0, 5.0, 0.0]),
        )
        .unwrap();
        // codes: A=0, B=1, C=2
        let c = enumerate_candidates(&ds, 0, &[0, 1, 2, 3], None);
        assert_eq!(
            c,
            vec![
                Partition::Categories {
                    feature: 0,
                    left: vec![0],
                    right: vec![1, 2]
                },
                Partition::Categories {
                    feature: 0,
                    left: vec![0, 2],
                    right: vec![1]
                },
            ]
        );
    }

    #[test]
    fn multiclass_small_domain_is_exhaustive() {
        let ds = Dataset::new(
            vec![FeatureColumn::categorical("c", &[Some("A"), Some("B"), Some("C"), Some("D")])],
            "y",
            Response::Class {
                labels: vec![0, 1, 2, 0],
                classes: vec!["a".into(), "b".into(), "c".into()],
            },
        )
        .unwrap();
        assert_eq!(enumerate_candidates(&ds, 0, &[0, 1, 2, 3], None).len(), 7);
    }

    #[test]
    fn binary_scoring_examples() {
        let ds = ds_num(
            vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)],
            vec![0.0, 0.0, 10.0, 10.0],
        );
        let s = score_binary(&ds, &[0, 1, 2, 3], &thr(2.5), MissingRoute::Left, 1).unwrap();
        assert_eq!(s.total_loss, 0.0);

        let ds = example5();
        let rows = [0, 1, 2, 3, 4];
        let s = score_binary(&ds, &rows, &thr(2.5), MissingRoute::Left, 1).unwrap();
        assert!((s.total_loss - 150.0 / 9.0).abs() < 1e-12);
        assert_eq!(s.left.rows, vec![0, 1, 4]);
        assert!(score_binary(&ds, &rows, &thr(2.5), MissingRoute::Right, 3).is_none());
    }

    #[test]
    fn fractional_scoring_example() {
        let ds = example5();
        let rows = [0, 1, 2, 3, 4];
        let s = score_fractional(&ds, &rows, &[1.0; 5], &thr(2.5), 1.0, FractionBasis::RowCount).unwrap();
        assert_eq!(s.route, MissingRoute::Fractional { left: 0.5, right: 0.5 });
        assert_eq!(s.left.weights, vec![1.0, 1.0, 0.5]);
        assert!((s.total_loss - 20.0).abs() < 1e-12);

        let doubled = score_fractional(&ds, &rows, &[2.0; 5], &thr(2.5), 1.0, FractionBasis::RowCount).unwrap();
        assert!((doubled.total_loss - 40.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_without_missing_matches_binary() {
        let ds = ds_num(
            vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(5.0)],
            vec![0.3, 0.1, 10.0, 9.0, 7.5],
        );
        let rows = [0, 1, 2, 3, 4];
        for t in [1.5, 2.5, 3.5, 4.5] {
            let b = score_binary(&ds, &rows, &thr(t), MissingRoute::Right, 1).unwrap();
            let f = score_fractional(&ds, &rows, &[1.0; 5], &thr(t), 1.0, FractionBasis::RowCount).unwrap();
            assert_eq!(b.total_loss, f.total_loss);
        }
    }

    #[test]
    fn trinary_scoring_examples() {
        let ds = example5();
        let rows = [0, 1, 2, 3, 4];
        let mother = fit_node(&ds, &rows, None);
        assert_eq!(mother, LeafValue::Real(5.0));
        let s = score_trinary(&ds, &rows, &thr(2.5), &mother, 1).unwrap();
        assert_eq!(s.total_loss, 0.0);
        assert_eq!(s.left.rows, vec![0, 1]);
        assert_eq!(s.right.rows, vec![2, 3]);

        let all_missing = ds_num(vec![None, None], vec![1.0, 2.0]);
        let m = fit_node(&all_missing, &[0, 1], None);
        assert!(score_trinary(&all_missing, &[0, 1], &thr(0.0), &m, 1).is_none());
    }

    #[test]
    fn best_split_per_strategy_on_example() {
        let ds = example5();
        let rows = [0, 1, 2, 3, 4];
        let cfg = SplitConfig {
            min_child: 1,
            min_child_weight: 1.0,
            ..SplitConfig::default()
        };
        let tri = best_split(&ds, &rows, None, &[0], Strategy::Trinary, &cfg).unwrap();
        assert_eq!(tri.total_loss, 0.0);
        let mia = best_split(&ds, &rows, None, &[0], Strategy::Mia, &cfg).unwrap();
        assert!((mia.total_loss - 150.0 / 9.0).abs() < 1e-9);
        let hybrid = best_split(&ds, &rows, None, &[0], Strategy::TrinaryMia, &cfg).unwrap();
        assert_eq!(hybrid.route, MissingRoute::Middle);
        assert_eq!(hybrid.partition, thr(2.5));
    }

    #[test]
    fn constant_response_takes_first_candidate() {
        let ds = Dataset::new(
            vec![
                FeatureColumn::numeric("a", vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]),
                FeatureColumn::numeric("b", vec![Some(4.0), Some(3.0), Some(2.0), Some(1.0)]),
            ],
            "y",
            Response::Real(vec![0.7; 4]),
        )
        .unwrap();
        let cfg = SplitConfig {
            min_child: 1,
            min_child_weight: 1.0,
            ..SplitConfig::default()
        };
        for strategy in Strategy::ALL {
            let s = best_split(&ds, &[0, 1, 2, 3], None, &[0, 1], strategy, &cfg).unwrap();
            assert_eq!(s.partition, thr(1.5), "{strategy}");
            assert_eq!(s.total_loss, 0.0);
        }
    }

    #[test]
    fn no_features_no_split() {
        let ds = example5();
        assert!(best_split(&ds, &[0, 1, 2], None, &[], Strategy::Majority, &SplitConfig::default()).is_none());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }
}
