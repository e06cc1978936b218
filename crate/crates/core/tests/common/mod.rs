#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tritree::data::{Cell, ColumnKind, Dataset, FeatureColumn, Response};
use tritree::Strategy;

pub const CATS: [&str; 5] = ["A", "B", "C", "D", "E"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Regression,
    Binary,
    Multiclass,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small mixed-type dataset with tied values and optional missing cells.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, n_features: usize, missing: f64, task: Task) -> Dataset {
    let mut columns = Vec::new();
    for j in 0..n_features {
        let name = format!("f{j}");
        if rng.random_bool(0.5) {
            let v: Vec<Option<f64>> = (0..n)
                .map(|_| (!rng.random_bool(missing)).then(|| rng.random_range(0..7) as f64 * 0.5))
                .collect();
            columns.push(FeatureColumn::numeric(name, v));
        } else {
            let n_cats = rng.random_range(2..=CATS.len());
            let v: Vec<Option<&str>> = (0..n)
                .map(|_| (!rng.random_bool(missing)).then(|| CATS[rng.random_range(0..n_cats)]))
                .collect();
            columns.push(FeatureColumn::categorical(name, &v));
        }
    }
    let response = match task {
        Task::Regression => Response::Real((0..n).map(|_| rng.random_range(0..40) as f64 / 4.0).collect()),
        Task::Binary | Task::Multiclass => {
            let k = if task == Task::Binary { 2 } else { 3 };
            Response::Class {
                labels: (0..n).map(|_| rng.random_range(0..k)).collect(),
                classes: (0..k).map(|c| format!("c{c}")).collect(),
            }
        }
    };
    Dataset::new(columns, "y", response).unwrap()
}

pub fn random_task(rng: &mut ChaCha8Rng) -> Task {
    [Task::Regression, Task::Binary, Task::Multiclass][rng.random_range(0..3)]
}

pub fn random_strategy(rng: &mut ChaCha8Rng) -> Strategy {
    Strategy::ALL[rng.random_range(0..Strategy::ALL.len())]
}

// ---------------------------------------------------------------------------
// brute-force split oracle

/// Direct loss of a weighted sample at its own optimum.
fn fitted(ys: &[(f64, f64)], n_classes: Option<usize>) -> f64 {
    let w: f64 = ys.iter().map(|p| p.1).sum();
    if w <= 0.0 {
        return 0.0;
    }
    match n_classes {
        None => {
            let mean = ys.iter().map(|(y, w)| y * w).sum::<f64>() / w;
            ys.iter().map(|(y, w)| w * (y - mean) * (y - mean)).sum()
        }
        Some(k) => {
            let mut counts = vec![0.0; k];
            for (y, w) in ys {
                counts[*y as usize] += w;
            }
            counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| -c * (c / w).max(1e-12).ln())
                .sum()
        }
    }
}

/// Loss of unit-weight rows at the optimum of `mother`.
fn loss_at_mother(rows: &[f64], mother: &[f64], n_classes: Option<usize>) -> f64 {
    let n = mother.len() as f64;
    match n_classes {
        None => {
            let mean = mother.iter().sum::<f64>() / n;
            rows.iter().map(|y| (y - mean) * (y - mean)).sum()
        }
        Some(_) => rows
            .iter()
            .map(|y| {
                let share = mother.iter().filter(|m| *m == y).count() as f64 / n;
                -share.max(1e-12).ln()
            })
            .sum(),
    }
}

enum Side {
    Left,
    Right,
    Missing,
}

/// Every way to cut a feature's observed values in two.
fn all_partitions(ds: &Dataset, j: usize, rows: &[usize]) -> Vec<Vec<Side>> {
    let cells: Vec<Cell> = rows.iter().map(|&r| ds.row(r)[j]).collect();
    let mut out = Vec::new();
    match cells.iter().find(|c| !c.is_missing()) {
        None => {}
        Some(Cell::Num(_)) => {
            let mut vals: Vec<f64> = cells
                .iter()
                .filter_map(|c| if let Cell::Num(v) = c { Some(*v) } else { None })
                .collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for &cut in vals.iter().take(vals.len().saturating_sub(1)) {
                out.push(
                    cells
                        .iter()
                        .map(|c| match c {
                            Cell::Num(v) if *v <= cut => Side::Left,
                            Cell::Num(_) => Side::Right,
                            _ => Side::Missing,
                        })
                        .collect(),
                );
            }
        }
        Some(_) => {
            let mut cats: Vec<u32> = cells
                .iter()
                .filter_map(|c| if let Cell::Cat(k) = c { Some(*k) } else { None })
                .collect();
            cats.sort();
            cats.dedup();
            for mask in 1..(1u32 << cats.len()) - 1 {
                out.push(
                    cells
                        .iter()
                        .map(|c| match c {
                            Cell::Cat(k) => {
                                let bit = cats.iter().position(|x| x == k).unwrap();
                                if mask >> bit & 1 == 1 {
                                    Side::Left
                                } else {
                                    Side::Right
                                }
                            }
                            _ => Side::Missing,
                        })
                        .collect(),
                );
            }
        }
    }
    out
}

fn feature_loss(
    ys: &[f64],
    sides: &[Side],
    strategy: Strategy,
    min_child: usize,
    min_weight: f64,
    k: Option<usize>,
) -> Option<f64> {
    let pick = |want: fn(&Side) -> bool| -> Vec<f64> {
        ys.iter().zip(sides).filter(|(_, s)| want(s)).map(|(y, _)| *y).collect()
    };
    let l = pick(|s| matches!(s, Side::Left));
    let r = pick(|s| matches!(s, Side::Right));
    let m = pick(|s| matches!(s, Side::Missing));
    let unit = |v: &[f64]| v.iter().map(|y| (*y, 1.0)).collect::<Vec<_>>();
    let routed = |to_left: bool| -> Option<f64> {
        let (mut lc, mut rc) = (l.clone(), r.clone());
        if to_left { lc.extend(&m) } else { rc.extend(&m) }
        (lc.len() >= min_child && rc.len() >= min_child).then(|| fitted(&unit(&lc), k) + fitted(&unit(&rc), k))
    };
    let trinary = || -> Option<f64> {
        (l.len() >= min_child && r.len() >= min_child)
            .then(|| fitted(&unit(&l), k) + fitted(&unit(&r), k) + loss_at_mother(&m, ys, k))
    };
    let min_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    match strategy {
        Strategy::Majority => routed(l.len() > r.len()),
        Strategy::Mia => min_opt(routed(true), routed(false)),
        Strategy::FractionalCase => {
            let f = l.len() as f64 / (l.len() + r.len()) as f64;
            let mut lw = unit(&l);
            let mut rw = unit(&r);
            lw.extend(m.iter().map(|y| (*y, f)));
            rw.extend(m.iter().map(|y| (*y, 1.0 - f)));
            let wl: f64 = lw.iter().map(|p| p.1).sum();
            let wr: f64 = rw.iter().map(|p| p.1).sum();
            (wl >= min_weight - 1e-9 && wr >= min_weight - 1e-9).then(|| fitted(&lw, k) + fitted(&rw, k))
        }
        Strategy::Trinary => trinary(),
        Strategy::TrinaryMia => min_opt(min_opt(routed(true), routed(false)), trinary()),
    }
}

/// Minimal split loss over all features, cuts and missing routings, or
/// `None` if nothing is feasible.
pub fn oracle_best_loss(ds: &Dataset, rows: &[usize], strategy: Strategy, min_child: usize, min_weight: f64) -> Option<f64> {
    let k = match ds.response() {
        Response::Real(_) => None,
        Response::Class { classes, .. } => Some(classes.len()),
    };
    let ys: Vec<f64> = rows.iter().map(|&r| ds.response().value(r)).collect();
    let mut best: Option<f64> = None;
    for j in 0..ds.n_features() {
        for sides in all_partitions(ds, j, rows) {
            if let Some(loss) = feature_loss(&ys, &sides, strategy, min_child, min_weight, k) {
                best = Some(best.map_or(loss, |b: f64| b.min(loss)));
            }
        }
    }
    best
}

/// Random feature rows in a tree's own encoding.
pub fn random_cells(rng: &mut ChaCha8Rng, tree: &tritree::Tree, missing: f64) -> Vec<Cell> {
    tree.features
        .iter()
        .map(|f| {
            if rng.random_bool(missing) {
                Cell::Missing
            } else if f.kind == ColumnKind::Numeric {
                Cell::Num(rng.random_range(-1.0..4.0))
            } else {
                Cell::Cat(rng.random_range(0..f.categories.len() as u32))
            }
        })
        .collect()
}
