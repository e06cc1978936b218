//! Seeded synthetic regression data with a tree-shaped response and
//! redundant, correlated covariates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, FeatureColumn, Response};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    /// Standard deviation of the response noise.
    pub noise: f64,
    /// Standard deviation of the proxy covariates around their source.
    pub proxy_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 2000,
            noise: 0.5,
            proxy_noise: 0.05,
            seed: 2024,
        }
    }
}

fn signal(x0: f64, x1: f64, x2: f64) -> f64 {
    match (x0 < 0.5, x1 < 0.5, x2 < 0.5) {
        (true, true, _) => 1.0,
        (true, false, true) => 3.0,
        (true, false, false) => 4.0,
        (false, _, true) => 6.0,
        (false, true, false) => 7.0,
        (false, false, false) => 9.0,
    }
}

/// Features: `x0..x2` uniform on [0, 1]; `x3`, `x4` noisy copies of `x0`,
/// `x1`; `c5` a categorical band of `x2` with occasional relabelling.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let y_noise = Normal::new(0.0, cfg.noise).expect("finite noise");
    let x_noise = Normal::new(0.0, cfg.proxy_noise).expect("finite noise");
    let bands = ["low", "mid", "high"];

    let mut cols: [Vec<Option<f64>>; 5] = Default::default();
    let mut c5 = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let (x0, x1, x2): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let x3 = x0 + x_noise.sample(&mut rng);
        let x4 = x1 + x_noise.sample(&mut rng);
        let band = if rng.random_bool(0.1) {
            rng.random_range(0..3)
        } else {
            ((x2 * 3.0) as usize).min(2)
        };
        for (c, v) in cols.iter_mut().zip([x0, x1, x2, x3, x4]) {
            c.push(Some(round6(v)));
        }
        c5.push(Some(bands[band]));
        y.push(round6(signal(x0, x1, x2) + y_noise.sample(&mut rng)));
    }
    let mut columns: Vec<FeatureColumn> = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| FeatureColumn::numeric(format!("x{j}"), v))
        .collect();
    columns.push(FeatureColumn::categorical("c5", &c5));
    Dataset::new(columns, "y", Response::Real(y))
}

/// Keeps CSV output short and parse-stable.
fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let cfg = SynthConfig {
            n: 100,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg).unwrap();
        assert_eq!((ds.n_rows(), ds.n_features()), (100, 6));
        assert_eq!(ds.n_missing(), 0);
        assert_eq!(ds, generate(&cfg).unwrap());
    }
}
