use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::rng::{stream, Rng};

/// Regular (multi)graph with an optional planted set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SseGraph {
    pub n: usize,
    pub deg: usize,
    /// Neighbor lists with multiplicity; a self-loop appears twice.
    pub adj: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<usize>>,
}

impl SseGraph {
    pub fn new(adj: Vec<Vec<usize>>, planted: Option<Vec<usize>>) -> Result<Self> {
        let n = adj.len();
        if n == 0 {
            return Err(Error::Empty("graph has no vertices".into()));
        }
        let deg = adj[0].len();
        if deg == 0 {
            return Err(Error::invalid("graph degree must be positive"));
        }
        for (v, nb) in adj.iter().enumerate() {
            if nb.len() != deg {
                return Err(Error::invalid(format!("vertex {v} has degree {}, expected {deg}", nb.len())));
            }
            if let Some(&u) = nb.iter().find(|&&u| u >= n) {
                return Err(Error::UnknownVertex(format!("neighbor {u} of vertex {v}")));
            }
        }
        let mut counts = vec![vec![0usize; n]; n];
        for (v, nb) in adj.iter().enumerate() {
            for &u in nb {
                counts[v][u] += 1;
            }
        }
        for v in 0..n {
            for u in 0..n {
                if counts[v][u] != counts[u][v] {
                    return Err(Error::invalid(format!("adjacency is not symmetric at ({v}, {u})")));
                }
            }
        }
        let planted = match planted {
            Some(mut s) => {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    return Err(Error::Empty("planted set is empty".into()));
                }
                if let Some(&u) = s.iter().find(|&&u| u >= n) {
                    return Err(Error::UnknownVertex(format!("planted vertex {u}")));
                }
                Some(s)
            }
            None => None,
        };
        Ok(Self { n, deg, adj, planted })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new((0..n).map(|v| (0..n).filter(|&u| u != v).collect()).collect(), None)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new((0..n).map(|v| vec![(v + n - 1) % n, (v + 1) % n]).collect(), None)
    }

    /// Number of `v → u` entries in `v`'s list.
    pub fn multiplicity(&self, v: usize, u: usize) -> usize {
        self.adj[v].iter().filter(|&&w| w == u).count()
    }

    /// `Pr[B = u | A = v]` under the `η`-noisy walk.
    pub fn walk_probability(&self, eta: f64, v: usize, u: usize) -> f64 {
        (1.0 - eta) * self.multiplicity(v, u) as f64 / self.deg as f64 + eta / self.n as f64
    }

    /// Planted set volume `|S|/n`.
    pub fn planted_volume(&self) -> Option<f64> {
        self.planted.as_ref().map(|s| s.len() as f64 / self.n as f64)
    }

    pub fn membership(&self, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &v in set {
            if v < self.n {
                m[v] = true;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub value: f64,
    /// `|S| > n/2`: the value is reported but the set is not small.
    pub oversized: bool,
}

/// `φ_G(S) = Pr_{(i,j)∼E}[j ∉ S | i ∈ S]`, the probability a random edge leaves `S`.
pub fn expansion(g: &SseGraph, set: &[usize]) -> Result<Expansion> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::Empty("expansion of the empty set".into()));
    }
    if let Some(&u) = s.iter().find(|&&u| u >= g.n) {
        return Err(Error::UnknownVertex(format!("vertex {u}")));
    }
    let inside = g.membership(&s);
    let leaving: usize = s.iter().map(|&v| g.adj[v].iter().filter(|&&u| !inside[u]).count()).sum();
    Ok(Expansion {
        value: leaving as f64 / (s.len() * g.deg) as f64,
        oversized: 2 * s.len() > g.n,
    })
}

/// One step of `G_η` per coordinate: a uniform neighbor w.p. `1−η`, else a uniform vertex.
pub fn noisy_walk(g: &SseGraph, eta: f64, a: &[usize], rng: &mut Rng) -> Vec<usize> {
    a.iter().map(|&v| walk_step(g, eta, v, rng)).collect()
}

#[inline]
pub(crate) fn walk_step(g: &SseGraph, eta: f64, v: usize, rng: &mut Rng) -> usize {
    if rng.random::<f64>() < eta {
        rng.random_range(0..g.n)
    } else {
        g.adj[v][rng.random_range(0..g.deg)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Planted,
    RandomRegular,
}

/// Edge multiset of a `deg`-regular multigraph on `vertices`: `deg/2` random
/// derangements, plus a random perfect matching when `deg` is odd.
fn regular_edges(vertices: &[usize], deg: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    let m = vertices.len();
    if deg == 0 {
        return Ok(Vec::new());
    }
    if m < 2 {
        return Err(Error::invalid("a regular graph of positive degree needs at least 2 vertices"));
    }
    if deg % 2 == 1 && m % 2 == 1 {
        return Err(Error::invalid(format!("no {deg}-regular graph on {m} vertices (odd degree, odd order)")));
    }
    let mut edges = Vec::with_capacity(m * deg / 2);
    for _ in 0..deg / 2 {
        let mut p: Vec<usize> = (0..m).collect();
        loop {
            p.shuffle(rng);
            if p.iter().enumerate().all(|(i, &j)| i != j) {
                break;
            }
        }
        edges.extend((0..m).map(|i| (vertices[i], vertices[p[i]])));
    }
    if deg % 2 == 1 {
        let mut p: Vec<usize> = vertices.to_vec();
        p.shuffle(rng);
        edges.extend(p.chunks(2).map(|c| (c[0], c[1])));
    }
    Ok(edges)
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    adj
}

/// Random instance generator.
///
/// `RandomRegular` unions random derangements. `Planted` picks a random set `S` of
/// `δn` vertices, builds `dg`-regular graphs inside `S` and inside its complement,
/// then performs `round(ε·|S|·dg/2)` edge swaps `(a,b),(x,y) → (a,x),(b,y)` across the
/// cut. Each swap keeps every degree and adds two crossing edges, so
/// `φ(S) = 2·swaps/(|S|·dg) ≈ ε`.
pub fn generate_sse(kind: GraphKind, n: usize, dg: usize, delta: f64, eps: f64, seed: u64) -> Result<SseGraph> {
    if dg == 0 || dg >= n {
        return Err(Error::invalid(format!("degree {dg} must lie in 1..{n}")));
    }
    let mut rng = stream(seed, "reduce.gen", 0);
    match kind {
        GraphKind::RandomRegular => {
            let verts: Vec<usize> = (0..n).collect();
            SseGraph::new(adjacency(n, &regular_edges(&verts, dg, &mut rng)?), None)
        }
        GraphKind::Planted => {
            let k = delta * n as f64;
            if (k - k.round()).abs() > 1e-9 || k.round() < 1.0 {
                return Err(Error::invalid(format!("δn = {k} must be a positive integer")));
            }
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::invalid(format!("ε = {eps} outside [0,1]")));
            }
            let k = k.round() as usize;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut s = order[..k].to_vec();
            let mut rest = order[k..].to_vec();
            s.sort_unstable();
            rest.sort_unstable();
            let mut inner = regular_edges(&s, dg, &mut rng)?;
            let mut outer = regular_edges(&rest, dg, &mut rng)?;
            let swaps = (eps * (k * dg) as f64 / 2.0).round() as usize;
            if swaps > inner.len() || swaps > outer.len() {
                return Err(Error::invalid("too many cross edges requested for the planted set"));
            }
            let mut cross = Vec::with_capacity(2 * swaps);
            for _ in 0..swaps {
                let (a, b) = inner.swap_remove(rng.random_range(0..inner.len()));
                let (x, y) = outer.swap_remove(rng.random_range(0..outer.len()));
                cross.push((a, x));
                cross.push((b, y));
            }
            inner.extend(outer);
            inner.extend(cross);
            SseGraph::new(adjacency(n, &inner), Some(s))
        }
    }
}
