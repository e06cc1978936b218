//! Monte-Carlo study of the left-leaf estimate `â` under each missing-data
//! strategy, for a one-split tree whose structure is known in advance.
//!
//! Rows fall right with probability `p`; responses are `a` on the left and
//! `b` on the right plus Gaussian noise; each covariate is censored
//! independently with probability `q`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::mix_seed;
use crate::split::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasScenario {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for BiasScenario {
    fn default() -> Self {
        BiasScenario {
            a: 0.0,
            b: 1.0,
            p: 0.5,
            q: 0.3,
            sigma: 0.1,
            n: 200,
            reps: 2000,
            seed: 1,
        }
    }
}

impl BiasScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.a.partial_cmp(&self.b) != Some(std::cmp::Ordering::Less) {
            return bad("a must be smaller than b");
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad("p must lie strictly between 0 and 1");
        }
        if !(0.0..=1.0).contains(&self.q) {
            return bad("q must lie in [0, 1]");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and nonnegative");
        }
        if self.n == 0 || self.reps == 0 {
            return bad("n and reps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasResult {
    pub strategy: Strategy,
    pub mean_a_hat: f64,
    pub se: f64,
    pub mean_b_hat: f64,
    pub se_b: f64,
    /// Share of replications routing missing rows right (Majority and MIA).
    pub kappa_hat: Option<f64>,
    /// Lower bound on `E[â]`; exact value `a` for Trinary.
    pub bound: f64,
    pub used_reps: usize,
    pub skipped_reps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub majority: f64,
    pub fc: f64,
    pub trinary: f64,
}

pub fn theoretical_bounds(sc: &BiasScenario, kappa: f64) -> Result<Bounds> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Config(format!("kappa {kappa} outside [0, 1]")));
    }
    let pq = sc.p * sc.q;
    Ok(Bounds {
        majority: sc.a + (1.0 - kappa) * pq / (1.0 - sc.p + pq) * (sc.b - sc.a),
        fc: sc.a + pq * (sc.b - sc.a),
        trinary: sc.a,
    })
}

/// Count, sum and sum of squares of one index set.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn add(&mut self, y: f64) {
        self.n += 1.0;
        self.sum += y;
        self.sum_sq += y * y;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    fn sse(&self) -> f64 {
        if self.n == 0.0 {
            0.0
        } else {
            (self.sum_sq - self.sum * self.sum / self.n).max(0.0)
        }
    }
}

struct Replication {
    left: Moments,
    right: Moments,
    missing: Moments,
}

fn draw(sc: &BiasScenario, rep: usize) -> Replication {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(sc.seed, &[rep as u64]));
    let noise = Normal::new(0.0, sc.sigma).expect("sigma validated");
    let mut r = Replication {
        left: Moments::default(),
        right: Moments::default(),
        missing: Moments::default(),
    };
    for _ in 0..sc.n {
        let is_right = rng.random_bool(sc.p);
        let y = if is_right { sc.b } else { sc.a } + noise.sample(&mut rng);
        if rng.random_bool(sc.q) {
            r.missing.add(y);
        } else if is_right {
            r.right.add(y);
        } else {
            r.left.add(y);
        }
    }
    r
}

/// `(â, b̂, routed_right)` or `None` when an estimate is undefined.
fn estimate(r: &Replication, strategy: Strategy) -> Option<(f64, f64, Option<bool>)> {
    let mean = |m: Moments| (m.n > 0.0).then(|| m.sum / m.n);
    let (l, rt, m) = (r.left, r.right, r.missing);
    let majority_right = l.n <= rt.n;
    match strategy {
        Strategy::Majority | Strategy::Mia => {
            let right = if strategy == Strategy::Majority {
                majority_right
            } else {
                let to_left = l.merge(m).sse() + rt.sse();
                let to_right = l.sse() + rt.merge(m).sse();
                if to_left == to_right {
                    majority_right
                } else {
                    to_right < to_left
                }
            };
            let (ml, mr) = if right { (l, rt.merge(m)) } else { (l.merge(m), rt) };
            Some((mean(ml)?, mean(mr)?, Some(right)))
        }
        Strategy::FractionalCase => {
            let observed = l.n + rt.n;
            if observed == 0.0 {
                return None;
            }
            let f = l.n / observed;
            let a_w = l.n + f * m.n;
            let b_w = rt.n + (1.0 - f) * m.n;
            if a_w == 0.0 || b_w == 0.0 {
                return None;
            }
            Some(((l.sum + f * m.sum) / a_w, (rt.sum + (1.0 - f) * m.sum) / b_w, None))
        }
        Strategy::Trinary => Some((mean(l)?, mean(rt)?, None)),
        Strategy::TrinaryMia => None,
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `sc.reps` replications. Replications where an estimate is undefined
/// are skipped and counted. The same data are drawn for every strategy.
pub fn simulate(sc: &BiasScenario, strategy: Strategy) -> Result<BiasResult> {
    sc.validate()?;
    if strategy == Strategy::TrinaryMia {
        return Err(Error::Config("trinary-mia has no fixed-structure estimator".into()));
    }
    let outcomes: Vec<Option<(f64, f64, Option<bool>)>> =
        (0..sc.reps).into_par_iter().map(|rep| estimate(&draw(sc, rep), strategy)).collect();
    let used: Vec<(f64, f64, Option<bool>)> = outcomes.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(Error::Validation("every replication was degenerate".into()));
    }
    let a_hats: Vec<f64> = used.iter().map(|u| u.0).collect();
    let b_hats: Vec<f64> = used.iter().map(|u| u.1).collect();
    let (mean_a_hat, se) = mean_se(&a_hats);
    let (mean_b_hat, se_b) = mean_se(&b_hats);
    let kappa_hat = matches!(strategy, Strategy::Majority | Strategy::Mia)
        .then(|| used.iter().filter(|u| u.2 == Some(true)).count() as f64 / used.len() as f64);
    let bounds = theoretical_bounds(sc, kappa_hat.unwrap_or(1.0))?;
    let bound = match strategy {
        Strategy::Majority | Strategy::Mia => bounds.majority,
        Strategy::FractionalCase => bounds.fc,
        _ => bounds.trinary,
    };
    Ok(BiasResult {
        strategy,
        mean_a_hat,
        se,
        mean_b_hat,
        se_b,
        kappa_hat,
        bound,
        used_reps: used.len(),
        skipped_reps: sc.reps - used.len(),
    })
}

pub const BIAS_STRATEGIES: [Strategy; 4] =
    [Strategy::Majority, Strategy::Mia, Strategy::FractionalCase, Strategy::Trinary];

pub fn simulate_all(sc: &BiasScenario) -> Result<Vec<BiasResult>> {
    BIAS_STRATEGIES.iter().map(|&s| simulate(sc, s)).collect()
}

pub fn write_results<W: Write>(results: &[BiasResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "mean_a_hat", "se", "kappa_hat", "bound"])?;
    for r in results {
        w.write_record([
            r.strategy.name().to_string(),
            r.mean_a_hat.to_string(),
            r.se.to_string(),
            r.kappa_hat.map(|k| k.to_string()).unwrap_or_default(),
            r.bound.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<bias results>", e))?;
    Ok(())
}
