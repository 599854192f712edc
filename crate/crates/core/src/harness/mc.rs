//! Monte Carlo runs with a fixed chunk schedule.
//!
//! Samples are cut into chunks of [`CHUNK`]; chunk `c` draws from
//! `stream(seed, tag, c)`. Chunks are reduced in index order, so the result does
//! not depend on how many workers evaluate them.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Rng};
use crate::error::{Error, Result};

pub const CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub tag: String,
    pub seed: u64,
    pub samples: u64,
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub wall_seconds: f64,
}

impl McRun {
    /// True when `target` lies within `k` standard errors of the estimate.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + 1e-12
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(samples - c * CHUNK)))
        .collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

/// Estimates `E[estimator(rng)]` from `samples` draws.
pub fn mc_run<F>(tag: &str, estimator: F, samples: u64, seed: u64, workers: usize) -> Result<McRun>
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo run needs at least one sample"));
    }
    let start = Instant::now();
    let work = |&(c, n): &(u64, u64)| {
        let mut rng = stream(seed, tag, c);
        let mut m = Moments { n, ..Moments::default() };
        for _ in 0..n {
            let v = estimator(&mut rng);
            m.sum += v;
            m.sum_sq += v * v;
        }
        m
    };
    let plan = chunks(samples);
    let parts: Vec<Moments> = if workers <= 1 {
        plan.iter().map(work).collect()
    } else {
        pool(workers)?.install(|| plan.par_iter().map(work).collect())
    };
    let total = parts.iter().fold(Moments::default(), |a, b| Moments {
        n: a.n + b.n,
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
    });
    let n = total.n as f64;
    let value = total.sum / n;
    let var = (total.sum_sq / n - value * value).max(0.0);
    let stderr = (var / n).sqrt();
    Ok(McRun {
        tag: tag.to_string(),
        seed,
        samples,
        value,
        stderr,
        ci95: (value - 1.96 * stderr, value + 1.96 * stderr),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Sample means and their covariance for a vector-valued estimator.
#[derive(Clone, Debug)]
pub struct MultiMoments {
    pub samples: u64,
    pub means: Vec<f64>,
    /// Covariance of single draws (population form).
    pub covariance: Vec<Vec<f64>>,
}

impl MultiMoments {
    pub fn stderr(&self, k: usize) -> f64 {
        (self.covariance[k][k].max(0.0) / self.samples as f64).sqrt()
    }

    /// Delta-method standard error of `Σ_k grad_k · mean_k`.
    pub fn linear_stderr(&self, grad: &[f64]) -> f64 {
        let mut v = 0.0;
        for (a, ga) in grad.iter().enumerate() {
            for (b, gb) in grad.iter().enumerate() {
                v += ga * gb * self.covariance[a][b];
            }
        }
        (v.max(0.0) / self.samples as f64).sqrt()
    }
}

/// Vector-valued version of [`mc_run`]; the estimator writes `dim` outputs.
pub fn mc_run_multi<F>(tag: &str, dim: usize, estimator: F, samples: u64, seed: u64, workers: usize) -> Result<MultiMoments>
where
    F: Fn(&mut Rng, &mut [f64]) + Sync,
{
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo run needs at least one sample"));
    }
    let work = |&(c, n): &(u64, u64)| {
        let mut rng = stream(seed, tag, c);
        let mut out = vec![0.0; dim];
        let mut sum = vec![0.0; dim];
        let mut cross = vec![0.0; dim * dim];
        for _ in 0..n {
            estimator(&mut rng, &mut out);
            for a in 0..dim {
                sum[a] += out[a];
                for b in 0..dim {
                    cross[a * dim + b] += out[a] * out[b];
                }
            }
        }
        (sum, cross)
    };
    let plan = chunks(samples);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = if workers <= 1 {
        plan.iter().map(work).collect()
    } else {
        pool(workers)?.install(|| plan.par_iter().map(work).collect())
    };
    let mut sum = vec![0.0; dim];
    let mut cross = vec![0.0; dim * dim];
    for (s, c) in parts {
        sum.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        cross.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    let n = samples as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let covariance = (0..dim)
        .map(|a| (0..dim).map(|b| cross[a * dim + b] / n - means[a] * means[b]).collect())
        .collect();
    Ok(MultiMoments { samples, means, covariance })
}
