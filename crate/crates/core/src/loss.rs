//! Weighted squared-error and cross-entropy losses with closed-form leaf fits.
//!
//! Cross-entropy is the negative log-likelihood `Σ wᵢ · −ln δ_{yᵢ}`, so the
//! leaf fit is a minimiser for both losses. Probabilities are clamped below at
//! [`PROB_FLOOR`] before taking logs, which keeps reported losses finite when a
//! test row carries a class its leaf never saw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    Sse,
    CrossEntropy { classes: usize },
}

impl LossKind {
    pub fn n_classes(&self) -> Option<usize> {
        match *self {
            LossKind::Sse => None,
            LossKind::CrossEntropy { classes } => Some(classes),
        }
    }
}

/// Loss-minimising leaf parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafValue {
    Real(f64),
    Probs(Vec<f64>),
}

impl LeafValue {
    /// Real prediction for SSE leaves; the arg-max class index for
    /// probability leaves.
    pub fn point(&self) -> f64 {
        match self {
            LeafValue::Real(v) => *v,
            LeafValue::Probs(p) => argmax(p) as f64,
        }
    }

    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            LeafValue::Real(_) => None,
            LeafValue::Probs(p) => Some(p),
        }
    }

    /// Loss contribution of a single observation with response `y`
    /// (class index for probability leaves).
    pub fn loss_at(&self, y: f64) -> f64 {
        match self {
            LeafValue::Real(d) => (y - d) * (y - d),
            LeafValue::Probs(p) => -p[y as usize].max(PROB_FLOOR).ln(),
        }
    }

    pub fn validate(&self, kind: LossKind) -> Result<()> {
        match (self, kind) {
            (LeafValue::Real(v), LossKind::Sse) if v.is_finite() => Ok(()),
            (LeafValue::Real(v), LossKind::Sse) => Err(Error::Validation(format!("non-finite leaf value {v}"))),
            (LeafValue::Probs(p), LossKind::CrossEntropy { classes }) => {
                if p.len() != classes {
                    return Err(Error::Validation(format!(
                        "probability vector has {} entries, expected {classes}",
                        p.len()
                    )));
                }
                if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::Validation("negative or non-finite probability".into()));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!("probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            _ => Err(Error::Validation("leaf value does not match loss kind".into())),
        }
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    /// Real response, or the class index for cross-entropy.
    pub y: f64,
    pub weight: f64,
}

impl WeightedSample {
    pub fn unit(y: f64) -> Self {
        WeightedSample { y, weight: 1.0 }
    }
}

fn class_index(y: f64, classes: usize) -> Result<usize> {
    if y >= 0.0 && y.fract() == 0.0 && (y as usize) < classes {
        Ok(y as usize)
    } else {
        Err(Error::Validation(format!("class label {y} outside 0..{classes}")))
    }
}

pub fn fit_leaf(samples: &[WeightedSample], kind: LossKind) -> Result<LeafValue> {
    if samples.is_empty() {
        return Err(Error::Validation("cannot fit a leaf on an empty sample".into()));
    }
    let mut stats = LossStats::new(kind, 0.0);
    for s in samples {
        if let LossKind::CrossEntropy { classes } = kind {
            class_index(s.y, classes)?;
        }
        stats.add(s.y, s.weight);
    }
    if stats.weight() <= 0.0 {
        return Err(Error::Validation("total sample weight must be positive".into()));
    }
    Ok(stats.fit())
}

pub fn eval_loss(samples: &[WeightedSample], leaf: &LeafValue, kind: LossKind) -> Result<f64> {
    leaf.validate(kind)?;
    let mut total = 0.0;
    for s in samples {
        if let LossKind::CrossEntropy { classes } = kind {
            class_index(s.y, classes)?;
        }
        total += s.weight * leaf.loss_at(s.y);
    }
    Ok(total)
}

/// Sufficient statistics of a weighted sample, from which the fitted leaf and
/// its loss follow in O(K).
///
/// SSE responses are accumulated relative to `shift`; the fitted loss is shift
/// invariant and a shift near the data keeps the `Σy² − (Σy)²/W` form well
/// conditioned.
#[derive(Debug, Clone, PartialEq)]
pub enum LossStats {
    Sse {
        weight: f64,
        sum: f64,
        sum_sq: f64,
        shift: f64,
    },
    Xe {
        weight: f64,
        counts: Vec<f64>,
    },
}

impl LossStats {
    pub fn new(kind: LossKind, shift: f64) -> Self {
        match kind {
            LossKind::Sse => LossStats::Sse {
                weight: 0.0,
                sum: 0.0,
                sum_sq: 0.0,
                shift,
            },
            LossKind::CrossEntropy { classes } => LossStats::Xe {
                weight: 0.0,
                counts: vec![0.0; classes],
            },
        }
    }

    #[inline]
    pub fn add(&mut self, y: f64, w: f64) {
        match self {
            LossStats::Sse {
                weight,
                sum,
                sum_sq,
                shift,
            } => {
                let d = y - *shift;
                *weight += w;
                *sum += w * d;
                *sum_sq += w * d * d;
            }
            LossStats::Xe { weight, counts } => {
                *weight += w;
                counts[y as usize] += w;
            }
        }
    }

    /// `self − other`, for statistics accumulated with the same shift.
    pub fn minus(&self, other: &LossStats) -> LossStats {
        match (self, other) {
            (
                LossStats::Sse {
                    weight,
                    sum,
                    sum_sq,
                    shift,
                },
                LossStats::Sse {
                    weight: w2,
                    sum: s2,
                    sum_sq: q2,
                    ..
                },
            ) => LossStats::Sse {
                weight: weight - w2,
                sum: sum - s2,
                sum_sq: sum_sq - q2,
                shift: *shift,
            },
            (LossStats::Xe { weight, counts }, LossStats::Xe { weight: w2, counts: c2 }) => LossStats::Xe {
                weight: weight - w2,
                counts: counts.iter().zip(c2).map(|(a, b)| (a - b).max(0.0)).collect(),
            },
            _ => panic!("mismatched loss statistics"),
        }
    }

    /// `self + alpha · other`, for statistics accumulated with the same shift.
    pub fn plus_scaled(&self, other: &LossStats, alpha: f64) -> LossStats {
        match (self, other) {
            (
                LossStats::Sse {
                    weight,
                    sum,
                    sum_sq,
                    shift,
                },
                LossStats::Sse {
                    weight: w2,
                    sum: s2,
                    sum_sq: q2,
                    ..
                },
            ) => LossStats::Sse {
                weight: weight + alpha * w2,
                sum: sum + alpha * s2,
                sum_sq: sum_sq + alpha * q2,
                shift: *shift,
            },
            (LossStats::Xe { weight, counts }, LossStats::Xe { weight: w2, counts: c2 }) => LossStats::Xe {
                weight: weight + alpha * w2,
                counts: counts.iter().zip(c2).map(|(a, b)| a + alpha * b).collect(),
            },
            _ => panic!("mismatched loss statistics"),
        }
    }

    pub fn plus(&self, other: &LossStats) -> LossStats {
        self.plus_scaled(other, 1.0)
    }

    pub fn weight(&self) -> f64 {
        match self {
            LossStats::Sse { weight, .. } | LossStats::Xe { weight, .. } => *weight,
        }
    }

    /// Loss of the sample at its own minimiser.
    pub fn fitted_loss(&self) -> f64 {
        match self {
            LossStats::Sse {
                weight, sum, sum_sq, ..
            } => {
                if *weight <= 0.0 {
                    0.0
                } else {
                    (sum_sq - sum * sum / weight).max(0.0)
                }
            }
            LossStats::Xe { weight, counts } => {
                if *weight <= 0.0 {
                    return 0.0;
                }
                counts
                    .iter()
                    .filter(|&&c| c > 0.0)
                    .map(|&c| -c * (c / weight).ln())
                    .sum::<f64>()
                    .max(0.0)
            }
        }
    }

    pub fn fit(&self) -> LeafValue {
        match self {
            LossStats::Sse {
                weight, sum, shift, ..
            } => LeafValue::Real(shift + sum / weight),
            LossStats::Xe { weight, counts } => LeafValue::Probs(counts.iter().map(|c| c / weight).collect()),
        }
    }
}
