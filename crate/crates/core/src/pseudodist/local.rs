use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distribution over `{0,1}^S`. Bit `k` of an outcome mask is the value of `subset[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDist {
    pub subset: Vec<usize>,
    pub probs: Vec<f64>,
}

pub(crate) const PROB_TOL: f64 = 1e-9;

impl LocalDist {
    pub fn new(subset: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << subset.len() {
            return Err(Error::Shape(format!(
                "local on {} vertices has {} probabilities",
                subset.len(),
                probs.len()
            )));
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("local subsets must be sorted and distinct"));
        }
        Ok(Self { subset, probs })
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.probs.iter().all(|p| *p >= -PROB_TOL) && (self.total() - 1.0).abs() <= PROB_TOL
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.subset.binary_search(&v).ok()
    }

    /// Marginal on `target ⊆ subset` (target sorted).
    pub fn marginal(&self, target: &[usize]) -> Result<LocalDist> {
        let pos: Vec<usize> = target
            .iter()
            .map(|v| self.position(*v).ok_or_else(|| Error::MissingLocal(target.to_vec())))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; 1 << target.len()];
        for (m, p) in self.probs.iter().enumerate() {
            let k = pos.iter().enumerate().fold(0, |acc, (t, &s)| acc | (m >> s & 1) << t);
            out[k] += p;
        }
        LocalDist::new(target.to_vec(), out)
    }

    /// `Pr[X_v = 1]` for `v` in the subset.
    pub fn prob_one(&self, v: usize) -> Option<f64> {
        let k = self.position(v)?;
        Some(self.probs.iter().enumerate().filter(|(m, _)| m >> k & 1 == 1).map(|(_, p)| p).sum())
    }

    /// `Pr[X_U = 1^U]` for the whole subset.
    pub fn prob_all_ones(&self) -> f64 {
        *self.probs.last().expect("nonempty")
    }

    /// Labels of vertex `v` in outcome `m`.
    pub fn value_of(&self, m: usize, v: usize) -> Option<u8> {
        self.position(v).map(|k| (m >> k & 1) as u8)
    }
}

/// Sorted, deduplicated copy of a vertex list.
pub fn canonical(vs: &[usize]) -> Vec<usize> {
    let mut s = vs.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}
