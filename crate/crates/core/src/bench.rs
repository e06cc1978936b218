//! Censoring benchmark: depth tuning on complete data, then a sweep over
//! missingness levels with per-fold training and evaluation of each strategy.
//!
//! Excess loss is `L_q / L_0 − 1`, where `L_0` is the same strategy's total
//! test loss on uncensored folds.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::censor::{apply_scenario, CensorSpec, Scenario};
use crate::data::{stratified_kfold, Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::rng::{hash_str, mix_seed};
use crate::split::Strategy;
use crate::tree::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub scenarios: Vec<Scenario>,
    pub q_grid: Vec<f64>,
    pub folds: usize,
    /// Depths `1..=max_depth` are tried during tuning.
    pub max_depth: usize,
    pub min_samples: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategies: Strategy::ALL.to_vec(),
            scenarios: Scenario::ALL.to_vec(),
            q_grid: default_q_grid(),
            folds: 10,
            max_depth: 5,
            min_samples: 5,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("at least 2 folds are required".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max depth must be at least 1".into()));
        }
        if self.min_samples == 0 {
            return Err(Error::Config("min samples must be at least 1".into()));
        }
        if self.strategies.is_empty() || self.scenarios.is_empty() || self.q_grid.is_empty() {
            return Err(Error::Config("strategies, scenarios and q grid must be nonempty".into()));
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(0.0..=0.9 + 1e-12).contains(*q)) {
            return Err(Error::Config(format!("missingness {q} outside [0, 0.9]")));
        }
        Ok(())
    }
}

fn round_q(q: f64) -> f64 {
    (q * 1e9).round() / 1e9
}

pub fn default_q_grid() -> Vec<f64> {
    (0..10).map(|i| round_q(i as f64 * 0.1)).collect()
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_q_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse q grid `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| round_q(start + i as f64 * step)).collect())
    } else {
        spec.split(',').map(|s| num(s).map(round_q)).collect()
    }
}

pub struct NamedDataset {
    pub name: String,
    pub data: Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub strategy: Strategy,
    pub scenario: Scenario,
    pub q: f64,
    /// `-1` for the aggregate over folds.
    pub fold: i64,
    pub loss: f64,
    pub excess_loss: f64,
    pub depth: usize,
    pub wall_ms: f64,
    /// Misclassification rate; `None` for regression.
    pub error_rate: Option<f64>,
}

/// Total held-out loss of a tree trained on each fold's complement.
fn cv_loss(ds: &Dataset, folds: &FoldAssignment, cfg: &TrainConfig) -> Result<f64> {
    let losses = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let test = folds.test_rows(f);
            if test.is_empty() {
                return Ok(0.0);
            }
            let tree = train(ds, &folds.train_rows(f), cfg)?;
            Ok(tree.evaluate(&ds.subset(&test))?.loss)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum())
}

/// Picks the depth in `1..=max_depth` with the lowest cross-validated loss,
/// using the Majority strategy on complete data. Ties go to the shallower tree.
pub fn tune_depth(ds: &Dataset, folds: &FoldAssignment, max_depth: usize, min_samples: usize) -> Result<usize> {
    let mut best = (1, f64::INFINITY);
    for depth in 1..=max_depth.max(1) {
        let loss = cv_loss(ds, folds, &TrainConfig::new(Strategy::Majority, depth, min_samples))?;
        if loss < best.1 {
            best = (depth, loss);
        }
    }
    Ok(best.0)
}

struct FoldResult {
    loss: f64,
    wrong: Option<f64>,
    n_test: usize,
    wall_ms: f64,
}

fn q_key(q: f64) -> u64 {
    (q * 1e6).round() as u64
}

fn excess(loss: f64, full: f64) -> f64 {
    if full > 0.0 {
        loss / full - 1.0
    } else if loss == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs the full censoring sweep. Records come back ordered by dataset,
/// strategy, scenario, q and fold, with each aggregate (`fold = -1`) first.
pub fn run_experiment(datasets: &[NamedDataset], cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for named in datasets {
        records.extend(run_dataset(named, cfg)?);
    }
    Ok(records)
}

fn run_dataset(named: &NamedDataset, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let ds = &named.data;
    let ds_key = hash_str(&named.name);
    let folds = stratified_kfold(ds, cfg.folds, mix_seed(cfg.seed, &[ds_key]))?;
    let depth = tune_depth(ds, &folds, cfg.max_depth, cfg.min_samples)?;

    let mut levels: Vec<f64> = cfg.q_grid.clone();
    if !levels.contains(&0.0) {
        levels.insert(0, 0.0);
    }

    let jobs: Vec<(Scenario, f64, usize)> = cfg
        .scenarios
        .iter()
        .flat_map(|&s| levels.iter().flat_map(move |&q| (0..cfg.folds).map(move |f| (s, q, f))))
        .collect();

    let outcomes = jobs
        .par_iter()
        .map(|&(scenario, q, fold)| -> Result<Vec<FoldResult>> {
            let train_rows = folds.train_rows(fold);
            let test_rows = folds.test_rows(fold);
            let spec = CensorSpec {
                scenario,
                q,
                seed: mix_seed(cfg.seed, &[ds_key, hash_str(scenario.name()), q_key(q), fold as u64]),
            };
            let (train_ds, test_ds) = apply_scenario(&ds.subset(&train_rows), &ds.subset(&test_rows), &spec)?;
            let all_rows: Vec<usize> = (0..train_ds.n_rows()).collect();
            cfg.strategies
                .iter()
                .map(|&strategy| {
                    let start = Instant::now();
                    let tree = train(&train_ds, &all_rows, &TrainConfig::new(strategy, depth, cfg.min_samples))?;
                    let eval = tree.evaluate(&test_ds)?;
                    Ok(FoldResult {
                        loss: eval.loss,
                        wrong: eval.error_rate.map(|e| e * test_ds.n_rows() as f64),
                        n_test: test_ds.n_rows(),
                        wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table: HashMap<(usize, Scenario, u64, usize), &FoldResult> = HashMap::new();
    for ((scenario, q, fold), per_strategy) in jobs.iter().zip(&outcomes) {
        for (si, res) in per_strategy.iter().enumerate() {
            table.insert((si, *scenario, q_key(*q), *fold), res);
        }
    }

    let mut records = Vec::new();
    for (si, &strategy) in cfg.strategies.iter().enumerate() {
        for &scenario in &cfg.scenarios {
            let full: Vec<f64> = (0..cfg.folds).map(|f| table[&(si, scenario, 0, f)].loss).collect();
            let full_total: f64 = full.iter().sum();
            for &q in &cfg.q_grid {
                let fold_results: Vec<&FoldResult> =
                    (0..cfg.folds).map(|f| table[&(si, scenario, q_key(q), f)]).collect();
                let total: f64 = fold_results.iter().map(|r| r.loss).sum();
                let n_test: usize = fold_results.iter().map(|r| r.n_test).sum();
                let wrong: Option<f64> = fold_results.iter().map(|r| r.wrong).sum();
                let base = |fold: i64, loss: f64, excess_loss: f64, wall_ms: f64, error_rate: Option<f64>| {
                    ExperimentRecord {
                        dataset: named.name.clone(),
                        strategy,
                        scenario,
                        q,
                        fold,
                        loss,
                        excess_loss,
                        depth,
                        wall_ms,
                        error_rate,
                    }
                };
                records.push(base(
                    -1,
                    total,
                    excess(total, full_total),
                    fold_results.iter().map(|r| r.wall_ms).sum(),
                    wrong.map(|w| w / n_test as f64),
                ));
                for (f, r) in fold_results.iter().enumerate() {
                    records.push(base(
                        f as i64,
                        r.loss,
                        excess(r.loss, full[f]),
                        r.wall_ms,
                        r.wrong.map(|w| w / r.n_test as f64),
                    ));
                }
            }
        }
    }
    Ok(records)
}

/// Unweighted mean of aggregate excess loss across datasets, per
/// (strategy, scenario, q), in first-seen order.
pub fn mean_excess_over_datasets(records: &[ExperimentRecord]) -> Vec<(Strategy, Scenario, f64, f64)> {
    let mut order: Vec<(Strategy, Scenario, u64, f64)> = Vec::new();
    let mut acc: HashMap<(Strategy, Scenario, u64), (f64, usize)> = HashMap::new();
    for r in records.iter().filter(|r| r.fold == -1) {
        let key = (r.strategy, r.scenario, q_key(r.q));
        let e = acc.entry(key).or_insert_with(|| {
            order.push((r.strategy, r.scenario, q_key(r.q), r.q));
            (0.0, 0)
        });
        e.0 += r.excess_loss;
        e.1 += 1;
    }
    order
        .into_iter()
        .map(|(s, sc, k, q)| {
            let (sum, n) = acc[&(s, sc, k)];
            (s, sc, q, sum / n as f64)
        })
        .collect()
}

pub const CSV_HEADER: [&str; 10] = [
    "dataset",
    "strategy",
    "scenario",
    "q",
    "fold",
    "loss",
    "excess_loss",
    "depth",
    "wall_ms",
    "error_rate",
];

pub fn write_records<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.strategy.name().to_string(),
            r.scenario.name().to_string(),
            r.q.to_string(),
            r.fold.to_string(),
            r.loss.to_string(),
            r.excess_loss.to_string(),
            r.depth.to_string(),
            r.wall_ms.to_string(),
            r.error_rate.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

pub fn emit_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, file)
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Schema(format!("unexpected record header {header:?}")));
    }
    rdr.records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let parse_err = |column: &str| Error::Parse {
                row,
                column: column.to_string(),
                message: format!("invalid value `{}`", field(CSV_HEADER.iter().position(|h| *h == column).unwrap())),
            };
            let f64_at = |i: usize| field(i).parse::<f64>().map_err(|_| parse_err(CSV_HEADER[i]));
            Ok(ExperimentRecord {
                dataset: field(0).to_string(),
                strategy: field(1).parse()?,
                scenario: field(2).parse()?,
                q: f64_at(3)?,
                fold: field(4).parse().map_err(|_| parse_err("fold"))?,
                loss: f64_at(5)?,
                excess_loss: f64_at(6)?,
                depth: field(7).parse().map_err(|_| parse_err("depth"))?,
                wall_ms: f64_at(8)?,
                error_rate: if field(9).is_empty() { None } else { Some(f64_at(9)?) },
            })
        })
        .collect()
}
