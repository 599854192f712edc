use std::collections::BTreeMap;
use std::sync::Arc;

use super::local::{canonical, LocalDist, PROB_TOL};
use crate::csp::Assignment;
use crate::error::{Error, Result};

#[derive(Debug)]
enum Source {
    Mixture(Vec<(Assignment, f64)>),
    Stored(BTreeMap<Vec<usize>, Vec<f64>>),
    Smoothed { base: Arc<Source>, eta: f64, mu: f64 },
    Conditioned { base: Arc<Source>, fixed: Vec<(usize, u8)> },
}

impl Source {
    fn local(&self, s: &[usize]) -> Result<Vec<f64>> {
        match self {
            Source::Mixture(support) => {
                let mut out = vec![0.0; 1 << s.len()];
                for (a, p) in support {
                    let m = s.iter().enumerate().fold(0, |acc, (k, &v)| acc | usize::from(a.labels[v]) << k);
                    out[m] += p;
                }
                Ok(out)
            }
            Source::Stored(locals) => {
                if let Some(p) = locals.get(s) {
                    return Ok(p.clone());
                }
                let sup = locals
                    .iter()
                    .filter(|(k, _)| s.iter().all(|v| k.binary_search(v).is_ok()))
                    .min_by_key(|(k, _)| k.len())
                    .ok_or_else(|| Error::MissingLocal(s.to_vec()))?;
                let full = LocalDist { subset: sup.0.clone(), probs: sup.1.clone() };
                Ok(full.marginal(s)?.probs)
            }
            Source::Smoothed { base, eta, mu } => {
                let mut p = base.local(s)?;
                smooth_kernel(&mut p, s.len(), *eta, *mu);
                Ok(p)
            }
            Source::Conditioned { base, fixed } => {
                let mut union: Vec<usize> = s.to_vec();
                union.extend(fixed.iter().map(|(v, _)| *v));
                let union = canonical(&union);
                let joint = LocalDist { subset: union.clone(), probs: base.local(&union)? };
                let pos_s: Vec<usize> = s.iter().map(|v| joint.position(*v).expect("in union")).collect();
                let pos_f: Vec<(usize, u8)> =
                    fixed.iter().map(|(v, b)| (joint.position(*v).expect("in union"), *b)).collect();
                let mut out = vec![0.0; 1 << s.len()];
                let mut z = 0.0;
                for (m, p) in joint.probs.iter().enumerate() {
                    if pos_f.iter().all(|&(k, b)| (m >> k & 1) as u8 == b) {
                        let t = pos_s.iter().enumerate().fold(0, |acc, (j, &k)| acc | (m >> k & 1) << j);
                        out[t] += p;
                        z += p;
                    }
                }
                if z <= 0.0 {
                    return Err(Error::ZeroProbabilityEvent);
                }
                out.iter_mut().for_each(|v| *v /= z);
                Ok(out)
            }
        }
    }
}

/// Applies "w.p. η resample from Bernoulli(μ)" to every coordinate of a local.
pub(crate) fn smooth_kernel(p: &mut [f64], width: usize, eta: f64, mu: f64) {
    let (a00, a01) = (1.0 - eta * mu, eta * mu);
    let (a10, a11) = (eta * (1.0 - mu), 1.0 - eta + eta * mu);
    for k in 0..width {
        let bit = 1 << k;
        for i in 0..p.len() {
            if i & bit == 0 {
                let (p0, p1) = (p[i], p[i | bit]);
                p[i] = p0 * a00 + p1 * a10;
                p[i | bit] = p0 * a01 + p1 * a11;
            }
        }
    }
}

/// A Lasserre-style family `{θ_S}` of level `ℓ` over vertices `0..n`.
///
/// Locals are produced on demand from the family's source (a true mixture,
/// stored tables, or a smoothing/conditioning of another family).
#[derive(Clone, Debug)]
pub struct LocalDistributionFamily {
    level: usize,
    vertex_count: usize,
    source: Arc<Source>,
    fixed: Vec<(usize, u8)>,
}

impl LocalDistributionFamily {
    /// Family of explicit locals. Each subset must be sorted and distinct.
    pub fn from_locals(level: usize, vertex_count: usize, locals: Vec<LocalDist>) -> Result<Self> {
        if level < 2 {
            return Err(Error::invalid("level must be at least 2"));
        }
        let mut map = BTreeMap::new();
        for l in locals {
            if l.subset.len() > level {
                return Err(Error::invalid(format!("local on {} vertices exceeds level {level}", l.subset.len())));
            }
            if let Some(&v) = l.subset.iter().find(|&&v| v >= vertex_count) {
                return Err(Error::UnknownVertex(format!("index {v}")));
            }
            let subset = l.subset.clone();
            let l = LocalDist::new(l.subset, l.probs)?;
            map.insert(subset, l.probs);
        }
        Ok(Self { level, vertex_count, source: Arc::new(Source::Stored(map)), fixed: Vec::new() })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Vertices conditioned so far, with their values.
    pub fn conditioned_on(&self) -> &[(usize, u8)] {
        &self.fixed
    }

    /// `θ_S` for a vertex list (duplicates allowed, output on the sorted distinct set).
    pub fn local(&self, subset: &[usize]) -> Result<LocalDist> {
        let s = canonical(subset);
        if s.len() > self.level {
            return Err(Error::TooLarge(format!("local on {} vertices exceeds level {}", s.len(), self.level)));
        }
        if let Some(&v) = s.iter().find(|&&v| v >= self.vertex_count) {
            return Err(Error::UnknownVertex(format!("index {v}")));
        }
        let probs = self.source.local(&s)?;
        LocalDist::new(s, probs)
    }

    /// `Pr[X_i = 1]`.
    pub fn marginal_one(&self, i: usize) -> Result<f64> {
        Ok(self.local(&[i])?.probs[1])
    }

    /// `Pr[X_i = 1, X_j = 1]`.
    pub fn pair_one(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.local(&[i, j])?.prob_all_ones())
    }

    /// Subsets explicitly stored, for stored families.
    pub fn stored_subsets(&self) -> Vec<Vec<usize>> {
        match &*self.source {
            Source::Stored(m) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_stored(&self) -> bool {
        matches!(&*self.source, Source::Stored(_))
    }
}

/// Marginals of a true distribution over total assignments.
pub fn from_distribution(support: Vec<(Assignment, f64)>, level: usize) -> Result<LocalDistributionFamily> {
    let Some(first) = support.first() else {
        return Err(Error::Empty("distribution has empty support".into()));
    };
    if level < 2 {
        return Err(Error::invalid("level must be at least 2"));
    }
    let n = first.0.len();
    if support.iter().any(|(a, _)| a.len() != n) {
        return Err(Error::Shape("support assignments differ in length".into()));
    }
    if support.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("support probabilities must be nonnegative"));
    }
    let total: f64 = support.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::invalid(format!("support probabilities sum to {total}")));
    }
    Ok(LocalDistributionFamily {
        level,
        vertex_count: n,
        source: Arc::new(Source::Mixture(support)),
        fixed: Vec::new(),
    })
}

/// Per-coordinate `η`-resampling toward Bernoulli(`μ`).
pub fn smooth(theta: &LocalDistributionFamily, eta: f64, mu: f64) -> Result<LocalDistributionFamily> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(format!("smoothing rate {eta} outside (0,1)")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::invalid(format!("resample bias {mu} outside [0,1]")));
    }
    Ok(LocalDistributionFamily {
        source: Arc::new(Source::Smoothed { base: theta.source.clone(), eta, mu }),
        ..theta.clone()
    })
}

/// `θ | X_S ← α`; the level drops by `|S|`.
pub fn condition(theta: &LocalDistributionFamily, subset: &[usize], alpha: &[u8]) -> Result<LocalDistributionFamily> {
    if subset.len() != alpha.len() {
        return Err(Error::Shape("one value per conditioned vertex required".into()));
    }
    let mut fresh: Vec<(usize, u8)> = Vec::new();
    for (&v, &b) in subset.iter().zip(alpha) {
        if v >= theta.vertex_count {
            return Err(Error::UnknownVertex(format!("index {v}")));
        }
        if b > 1 {
            return Err(Error::invalid("conditioning values must be 0 or 1"));
        }
        match fresh.iter().find(|(u, _)| *u == v) {
            Some((_, c)) if *c != b => return Err(Error::ZeroProbabilityEvent),
            Some(_) => {}
            None => fresh.push((v, b)),
        }
    }
    let verts: Vec<usize> = fresh.iter().map(|(v, _)| *v).collect();
    let event = theta.local(&verts)?;
    let mask = fresh.iter().fold(0, |m, (v, b)| m | usize::from(*b) << event.position(*v).expect("present"));
    if event.prob(mask) <= 0.0 {
        return Err(Error::ZeroProbabilityEvent);
    }
    if theta.level < fresh.len() + 2 {
        return Err(Error::invalid(format!(
            "conditioning on {} vertices leaves level {} below 2",
            fresh.len(),
            theta.level as i64 - fresh.len() as i64
        )));
    }
    let mut fixed = theta.fixed.clone();
    fixed.extend(&fresh);
    Ok(LocalDistributionFamily {
        level: theta.level - fresh.len(),
        vertex_count: theta.vertex_count,
        source: Arc::new(Source::Conditioned { base: theta.source.clone(), fixed: fresh }),
        fixed,
    })
}
