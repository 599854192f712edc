use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sampler::{apply_perm, random_perm, LiftedVertex};
use crate::error::{Error, Result};
use crate::harness::rng::Rng;
use rand::Rng as _;

/// How `i*(A, z)` was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IStarRule {
    /// `|Π(A,z)| = 1`.
    Unique,
    /// Position of the smallest `(A(k), z(k))` pair occurring exactly once.
    Orbit,
    /// Every pair repeats; the stabilizer of `(A,z)` is nontrivial and the first
    /// occurrence of the smallest pair is used.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dictator {
    pub r: usize,
    /// Sorted planted set `S`.
    pub set: Vec<usize>,
    membership: Vec<bool>,
}

impl Dictator {
    pub fn new(set: &[usize], n: usize, r: usize) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Empty("dictator set is empty".into()));
        }
        if r == 0 || r > 64 {
            return Err(Error::invalid(format!("R = {r} outside 1..=64")));
        }
        let mut membership = vec![false; n];
        for &v in set {
            if v >= n {
                return Err(Error::UnknownVertex(format!("set vertex {v}")));
            }
            membership[v] = true;
        }
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        Ok(Self { r, set: s, membership })
    }

    /// `Π(A, z)` as a bit mask.
    pub fn pi_set(&self, a: &[usize], z: u64) -> u64 {
        a.iter()
            .enumerate()
            .filter(|(k, v)| self.membership[**v] && z >> k & 1 == 1)
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    pub fn i_star(&self, a: &[usize], z: u64) -> (usize, IStarRule) {
        let pi = self.pi_set(a, z);
        if pi.count_ones() == 1 {
            return (pi.trailing_zeros() as usize, IStarRule::Unique);
        }
        let pair = |k: usize| (a[k], z >> k & 1);
        let mut best_unique: Option<usize> = None;
        let mut best_any = 0;
        for k in 0..a.len() {
            if pair(k) < pair(best_any) {
                best_any = k;
            }
            let unique = (0..a.len()).filter(|&j| pair(j) == pair(k)).count() == 1;
            if unique && best_unique.is_none_or(|b| pair(k) < pair(b)) {
                best_unique = Some(k);
            }
        }
        match best_unique {
            Some(k) => (k, IStarRule::Orbit),
            None => (best_any, IStarRule::Degenerate),
        }
    }
}

pub type Callback = Arc<dyn Fn(&[usize], u64, u64) -> u8 + Send + Sync>;

/// A Boolean labeling `f : V^R × {0,1}^R × {⊥,⊤}^R → {0,1}`.
#[derive(Clone)]
pub enum LongCodeAssignment {
    Dictator(Dictator),
    /// Values indexed by `((A as base-n number) · 2^R + x) · 2^R + z`.
    Table { n: usize, r: usize, values: Vec<u8> },
    Callback(Callback),
    Constant(u8),
}

impl fmt::Debug for LongCodeAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dictator(d) => f.debug_tuple("Dictator").field(d).finish(),
            Self::Table { n, r, .. } => f.debug_struct("Table").field("n", n).field("r", r).finish_non_exhaustive(),
            Self::Callback(_) => f.write_str("Callback(..)"),
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
        }
    }
}

pub fn table_index(n: usize, r: usize, a: &[usize], x: u64, z: u64) -> usize {
    let ai = a.iter().rev().fold(0usize, |acc, &v| acc * n + v);
    ((ai << r) | x as usize) << r | z as usize
}

pub fn dictator_assignment(set: &[usize], n: usize, r: usize) -> Result<LongCodeAssignment> {
    Ok(LongCodeAssignment::Dictator(Dictator::new(set, n, r)?))
}

impl LongCodeAssignment {
    pub fn table(n: usize, r: usize, values: Vec<u8>) -> Result<Self> {
        let size = n.checked_pow(r as u32).and_then(|s| s.checked_mul(1 << (2 * r)));
        match size {
            Some(s) if s == values.len() => {}
            _ => return Err(Error::Shape(format!("table for n = {n}, R = {r} has {} entries", values.len()))),
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::invalid("table values must be 0 or 1"));
        }
        Ok(Self::Table { n, r, values })
    }

    pub fn callback(f: impl Fn(&[usize], u64, u64) -> u8 + Send + Sync + 'static) -> Self {
        Self::Callback(Arc::new(f))
    }

    pub fn eval(&self, a: &[usize], x: u64, z: u64) -> u8 {
        match self {
            Self::Dictator(d) => (x >> d.i_star(a, z).0 & 1) as u8,
            Self::Table { n, r, values } => values[table_index(*n, *r, a, x, z)],
            Self::Callback(f) => f(a, x, z),
            Self::Constant(c) => *c,
        }
    }

    pub fn eval_vertex(&self, v: &LiftedVertex) -> u8 {
        self.eval(&v.a, v.x, v.z)
    }

    /// `E_{x ∼ {0,1}^R_μ} f(A, x, z)` when known in closed form.
    pub fn mean_over_x(&self, _a: &[usize], _z: u64, mu: f64) -> Option<f64> {
        match self {
            Self::Dictator(_) => Some(mu),
            Self::Constant(c) => Some(*c as f64),
            _ => None,
        }
    }

    /// True when `f ∘ π = f` holds by construction.
    pub fn respects_permutations(&self) -> bool {
        matches!(self, Self::Dictator(_) | Self::Constant(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationCheck {
    pub trials: usize,
    pub violations: usize,
    /// Trials whose point had a degenerate `i*`.
    pub degenerate: usize,
    /// Violations on non-degenerate points.
    pub strict_violations: usize,
    /// Trials where `i*(π(A,z)) = π(i*(A,z))` failed on non-degenerate points.
    pub orbit_violations: usize,
}

/// Sampled check of `f(π(A,x,z)) = f(A,x,z)` on uniform points.
pub fn permutation_respect_check(f: &LongCodeAssignment, n: usize, r: usize, trials: usize, rng: &mut Rng) -> PermutationCheck {
    let mut out = PermutationCheck { trials, violations: 0, degenerate: 0, strict_violations: 0, orbit_violations: 0 };
    let full = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    for _ in 0..trials {
        let v = LiftedVertex {
            a: (0..r).map(|_| rng.random_range(0..n)).collect(),
            x: rng.random::<u64>() & full,
            z: rng.random::<u64>() & full,
        };
        let perm = random_perm(r, rng);
        let w = apply_perm(&v, &perm);
        let bad = f.eval_vertex(&v) != f.eval_vertex(&w);
        let degenerate = match f {
            LongCodeAssignment::Dictator(d) => {
                let (i, rule) = d.i_star(&v.a, v.z);
                let (j, _) = d.i_star(&w.a, w.z);
                if rule != IStarRule::Degenerate && perm[j] != i {
                    out.orbit_violations += 1;
                }
                rule == IStarRule::Degenerate
            }
            _ => false,
        };
        out.violations += bad as usize;
        out.degenerate += degenerate as usize;
        out.strict_violations += (bad && !degenerate) as usize;
    }
    out
}

/// `E_i w̃_i E_{(A,z)} E_{x ∼ μ_i} f`, exact for closed-form kinds.
pub fn analytic_bias(f: &LongCodeAssignment, mus: &[f64], weights: &[f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (&mu, &w) in mus.iter().zip(weights) {
        acc += w * f.mean_over_x(&[], 0, mu)?;
    }
    Some(acc / total)
}
