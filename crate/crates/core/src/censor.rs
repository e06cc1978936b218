//! Censoring mechanisms: MCAR on train and test, MCAR on test only, and
//! informative missingness where the largest values disappear first.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, Dataset, FeatureColumn};
use crate::error::{Error, Result};
use crate::rng::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "mcar")]
    Mcar,
    #[serde(rename = "mcar-test")]
    McarTest,
    #[serde(rename = "im")]
    Im,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Mcar, Scenario::McarTest, Scenario::Im];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Mcar => "mcar",
            Scenario::McarTest => "mcar-test",
            Scenario::Im => "im",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mcar" => Ok(Scenario::Mcar),
            "mcar-test" | "mcartest" => Ok(Scenario::McarTest),
            "im" => Ok(Scenario::Im),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorSpec {
    pub scenario: Scenario,
    /// Fraction of each feature column to censor.
    pub q: f64,
    /// Ignored by [`Scenario::Im`].
    pub seed: u64,
}

/// Number of cells censored per column at level `q`.
pub fn censor_count(q: f64, n_rows: usize) -> usize {
    ((q * n_rows as f64).round() as usize).min(n_rows)
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::Config(format!("missingness fraction {q} outside [0, 1]")))
    }
}

fn present_rows(col: &FeatureColumn) -> Vec<usize> {
    (0..col.len()).filter(|&i| !col.is_missing(i)).collect()
}

/// Censors exactly `round(q·n)` present cells per feature column, chosen
/// uniformly without replacement from a stream keyed by `(seed, column)`.
pub fn censor_mcar(ds: &Dataset, q: f64, seed: u64) -> Result<Dataset> {
    check_q(q)?;
    let mut out = ds.clone();
    let k = censor_count(q, ds.n_rows());
    for (j, col) in out.columns_mut().iter_mut().enumerate() {
        let present = present_rows(col);
        let take = k.min(present.len());
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[j as u64]));
        for idx in rand::seq::index::sample(&mut rng, present.len(), take) {
            col.set_missing(present[idx]);
        }
    }
    Ok(out)
}

/// Censors the largest values of numeric columns and whole categories of
/// categorical columns (most frequent first, ties by name; the last category
/// is censored partially, lowest row indices first). Deterministic.
pub fn censor_im(ds: &Dataset, q: f64) -> Result<Dataset> {
    check_q(q)?;
    let mut out = ds.clone();
    let k = censor_count(q, ds.n_rows());
    for col in out.columns_mut() {
        let victims = im_victims(col, k);
        for r in victims {
            col.set_missing(r);
        }
    }
    Ok(out)
}

fn im_victims(col: &FeatureColumn, k: usize) -> Vec<usize> {
    match &col.data {
        ColumnData::Numeric(values) => {
            let mut rows: Vec<(f64, usize)> = values
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|x| (x, i)))
                .collect();
            rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            rows.into_iter().take(k).map(|(_, i)| i).collect()
        }
        ColumnData::Categorical { codes, categories } => {
            let mut by_category: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, c) in codes.iter().enumerate() {
                if let Some(c) = c {
                    by_category.entry(*c).or_default().push(i);
                }
            }
            let mut order: Vec<(u32, Vec<usize>)> = by_category.into_iter().collect();
            order.sort_by(|a, b| {
                b.1.len()
                    .cmp(&a.1.len())
                    .then_with(|| categories[a.0 as usize].cmp(&categories[b.0 as usize]))
            });
            order.into_iter().flat_map(|(_, rows)| rows).take(k).collect()
        }
    }
}

/// Censors a train/test pair according to `spec.scenario`.
pub fn apply_scenario(train: &Dataset, test: &Dataset, spec: &CensorSpec) -> Result<(Dataset, Dataset)> {
    check_q(spec.q)?;
    match spec.scenario {
        Scenario::Mcar => Ok((
            censor_mcar(train, spec.q, mix_seed(spec.seed, &[0]))?,
            censor_mcar(test, spec.q, mix_seed(spec.seed, &[1]))?,
        )),
        Scenario::McarTest => Ok((train.clone(), censor_mcar(test, spec.q, mix_seed(spec.seed, &[1]))?)),
        Scenario::Im => Ok((censor_im(train, spec.q)?, censor_im(test, spec.q)?)),
    }
}
