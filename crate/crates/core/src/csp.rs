//! Predicates, weighted constraint hypergraphs, and brute-force constrained optima.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::MultilinearPoly;

/// Largest vertex count [`opt_constrained`] will enumerate by default.
pub const EXHAUSTIVE_CAP: usize = 22;
const WEIGHT_TOL: f64 = 1e-9;

/// Arity-`r` Boolean predicate given by its accepting strings. A string is stored
/// as a bitmask whose bit `j` is argument `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    arity: usize,
    accepting: Vec<u32>,
    table: Vec<bool>,
}

impl Predicate {
    pub fn new(arity: usize, accepting: impl IntoIterator<Item = u32>) -> Result<Self> {
        Self::build(arity, accepting, false)
    }

    /// Allows an empty accepting set (the constant-false predicate).
    pub fn new_trivial_false(arity: usize) -> Result<Self> {
        Self::build(arity, [], true)
    }

    fn build(arity: usize, accepting: impl IntoIterator<Item = u32>, allow_empty: bool) -> Result<Self> {
        if arity == 0 || arity > 16 {
            return Err(Error::invalid(format!("predicate arity {arity} outside 1..=16")));
        }
        let mut table = vec![false; 1 << arity];
        for a in accepting {
            if a as usize >= table.len() {
                return Err(Error::invalid(format!("accepting string {a:#b} wider than arity {arity}")));
            }
            table[a as usize] = true;
        }
        let accepting: Vec<u32> = (0..table.len() as u32).filter(|&a| table[a as usize]).collect();
        if accepting.is_empty() && !allow_empty {
            return Err(Error::invalid("predicate has no accepting strings"));
        }
        Ok(Self { arity, accepting, table })
    }

    /// Parses strings like `"100"`, character `j` giving argument `j`.
    pub fn from_strings<S: AsRef<str>>(arity: usize, strings: &[S]) -> Result<Self> {
        let masks = strings
            .iter()
            .map(|s| parse_bits(s.as_ref(), arity))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arity, masks)
    }

    pub fn and(arity: usize) -> Self {
        Self::new(arity, [(1u32 << arity) - 1]).expect("valid")
    }

    pub fn xor(arity: usize) -> Self {
        Self::new(arity, (0..1u32 << arity).filter(|a| a.count_ones() % 2 == 1)).expect("valid")
    }

    pub fn or(arity: usize) -> Self {
        Self::new(arity, 1..1u32 << arity).expect("valid")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn accepting(&self) -> &[u32] {
        &self.accepting
    }

    pub fn accepting_strings(&self) -> Vec<String> {
        self.accepting.iter().map(|&a| bits_to_string(a, self.arity)).collect()
    }

    /// `ψ` on arguments packed as a bitmask.
    pub fn accepts_mask(&self, args: u32) -> bool {
        self.table[args as usize]
    }

    pub fn accepts(&self, args: &[u8]) -> bool {
        self.accepts_mask(pack(args))
    }

    pub fn is_all_ones_accepting(&self) -> bool {
        self.table[(1 << self.arity) - 1]
    }
}

pub(crate) fn pack(args: &[u8]) -> u32 {
    args.iter().enumerate().fold(0, |m, (j, &b)| m | (u32::from(b & 1) << j))
}

pub(crate) fn parse_bits(s: &str, arity: usize) -> Result<u32> {
    let bad = |m: String| Error::Parse { context: format!("bit string '{s}'"), message: m };
    if s.chars().count() != arity {
        return Err(bad(format!("expected {arity} characters")));
    }
    s.chars().enumerate().try_fold(0u32, |m, (j, c)| match c {
        '0' => Ok(m),
        '1' => Ok(m | 1 << j),
        _ => Err(bad(format!("unexpected character '{c}'"))),
    })
}

pub(crate) fn bits_to_string(mask: u32, len: usize) -> String {
    (0..len).map(|j| if mask >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// `Σ_{a∈ψ⁻¹(1)} ∏_{j∈S₊(a)} x_j ∏_{j∈S₋(a)} (1 − x_j)` expanded into monomials.
pub fn predicate_multilinear(psi: &Predicate) -> MultilinearPoly {
    let r = psi.arity;
    let mut coef = vec![0.0; 1 << r];
    for &a in &psi.accepting {
        let minus = !a & ((1 << r) - 1);
        // expand ∏_{j∈S₋}(1 − x_j) over subsets T of S₋
        let mut t = minus;
        loop {
            let sign = if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            coef[(a | t) as usize] += sign;
            if t == 0 {
                break;
            }
            t = (t - 1) & minus;
        }
    }
    MultilinearPoly::new(r, coef).expect("shape matches arity")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub vs: Vec<usize>,
    pub weight: f64,
}

/// Vertex- and edge-weighted ordered `r`-uniform instance.
#[derive(Clone, Debug)]
pub struct ConstraintHypergraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    vertex_weights: Vec<f64>,
    edges: Vec<Edge>,
    predicate: Predicate,
}

impl ConstraintHypergraph {
    pub fn new(ids: Vec<String>, vertex_weights: Vec<f64>, edges: Vec<Edge>, predicate: Predicate) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Empty("instance has no vertices".into()));
        }
        if ids.len() != vertex_weights.len() {
            return Err(Error::Shape("one weight per vertex required".into()));
        }
        let mut index = HashMap::new();
        for (k, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), k).is_some() {
                return Err(Error::invalid(format!("duplicate vertex id '{id}'")));
            }
        }
        check_distribution("vertex weights", &vertex_weights)?;
        if edges.is_empty() {
            return Err(Error::Empty("instance has no edges".into()));
        }
        let edge_weights: Vec<f64> = edges.iter().map(|e| e.weight).collect();
        check_distribution("edge weights", &edge_weights)?;
        for e in &edges {
            if e.vs.len() != predicate.arity() {
                return Err(Error::Shape(format!(
                    "edge has {} vertices, predicate arity is {}",
                    e.vs.len(),
                    predicate.arity()
                )));
            }
            if let Some(&v) = e.vs.iter().find(|&&v| v >= ids.len()) {
                return Err(Error::UnknownVertex(format!("index {v}")));
            }
        }
        Ok(Self { ids, index, vertex_weights, edges, predicate })
    }

    /// Vertices `0..n` with uniform weights; edges given as index tuples with uniform weights.
    pub fn uniform(n: usize, edges: Vec<Vec<usize>>, predicate: Predicate) -> Result<Self> {
        let m = edges.len().max(1) as f64;
        Self::new(
            (0..n).map(|i| i.to_string()).collect(),
            vec![1.0 / n as f64; n],
            edges.into_iter().map(|vs| Edge { vs, weight: 1.0 / m }).collect(),
            predicate,
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn arity(&self) -> usize {
        self.predicate.arity()
    }

    /// Smallest positive vertex weight halved: the default bias window.
    pub fn default_tol(&self) -> f64 {
        0.5 * self.vertex_weights.iter().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min)
    }
}

fn check_distribution(what: &str, w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(format!("{what} must be nonnegative")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::invalid(format!("{what} sum to {s}, not 1")));
    }
    Ok(())
}

/// Total labeling `σ: V → {0,1}` by vertex index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<u8>,
}

impl Assignment {
    pub fn new(labels: Vec<u8>) -> Self {
        Self { labels }
    }

    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self { labels: (0..n).map(|i| (mask >> i & 1) as u8).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.labels[i]
    }
}

fn check_total(g: &ConstraintHypergraph, s: &Assignment) -> Result<()> {
    if s.len() != g.vertex_count() {
        return Err(Error::IncompleteAssignment { expected: g.vertex_count(), got: s.len() });
    }
    Ok(())
}

/// `Σ_e w(e)·ψ(σ|_e)`.
pub fn assignment_value(g: &ConstraintHypergraph, sigma: &Assignment) -> Result<f64> {
    check_total(g, sigma)?;
    Ok(value_of(g, |v| sigma.labels[v]))
}

fn value_of(g: &ConstraintHypergraph, label: impl Fn(usize) -> u8) -> f64 {
    g.edges
        .iter()
        .filter(|e| {
            let args = e.vs.iter().enumerate().fold(0u32, |m, (j, &v)| m | u32::from(label(v)) << j);
            g.predicate.accepts_mask(args)
        })
        .map(|e| e.weight)
        .sum()
}

/// Same value computed through the multilinear representation.
pub fn assignment_value_multilinear(g: &ConstraintHypergraph, sigma: &Assignment) -> Result<f64> {
    check_total(g, sigma)?;
    let poly = predicate_multilinear(&g.predicate);
    Ok(g.edges
        .iter()
        .map(|e| {
            let x: Vec<f64> = e.vs.iter().map(|&v| f64::from(sigma.labels[v])).collect();
            e.weight * poly.evaluate_unchecked(&x)
        })
        .sum())
}

/// `E_{i∼w̃}[σ(i)]`.
pub fn relative_weight(g: &ConstraintHypergraph, sigma: &Assignment) -> Result<f64> {
    check_total(g, sigma)?;
    Ok(g.vertex_weights.iter().zip(&sigma.labels).map(|(w, &b)| w * f64::from(b)).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    /// `None` when no assignment is feasible.
    pub witness: Option<Assignment>,
    pub feasible: bool,
    pub enumerated: u64,
}

/// Best value over assignments whose relative weight lies in `[lo, hi]`.
pub fn opt_in_window(g: &ConstraintHypergraph, lo: f64, hi: f64, cap: usize) -> Result<OptResult> {
    let n = g.vertex_count();
    if n > cap || n > 40 {
        return Err(Error::TooLarge(format!("{n} vertices exceeds the exhaustive cap {cap}")));
    }
    let total = 1u64 << n;
    let block = 1u64 << 12;
    let best = (0..total.div_ceil(block))
        .into_par_iter()
        .map(|b| {
            let mut best: Option<(f64, u64)> = None;
            for mask in b * block..total.min((b + 1) * block) {
                let rw: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| g.vertex_weights[i]).sum();
                if rw < lo - WEIGHT_TOL || rw > hi + WEIGHT_TOL {
                    continue;
                }
                let v = value_of(g, |i| (mask >> i & 1) as u8);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, mask));
                }
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
            },
        );
    Ok(match best {
        Some((value, mask)) => OptResult {
            value,
            witness: Some(Assignment::from_mask(mask, n)),
            feasible: true,
            enumerated: total,
        },
        None => OptResult { value: 0.0, witness: None, feasible: false, enumerated: total },
    })
}

/// `Opt_μ(G)` with relative weight within `tol` of `μ`.
pub fn opt_constrained(g: &ConstraintHypergraph, mu: f64, tol: f64) -> Result<OptResult> {
    if tol < 0.0 {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    opt_in_window(g, mu - tol, mu + tol, EXHAUSTIVE_CAP)
}

/// Max over `μ' ∈ μ(1 ± √γ)` of the exactly-`μ'`-constrained optimum.
pub fn robust_opt(g: &ConstraintHypergraph, mu: f64, gamma: f64) -> Result<OptResult> {
    if gamma < 0.0 {
        return Err(Error::invalid("γ must be nonnegative"));
    }
    let w = mu * gamma.sqrt();
    opt_in_window(g, mu - w, mu + w, EXHAUSTIVE_CAP)
}
