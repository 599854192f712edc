use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::{walk_step, SseGraph};
use super::params::ReductionParams;
use crate::csp::ConstraintHypergraph;
use crate::error::{Error, Result};
use crate::harness::rng::Rng;
use crate::pseudodist::LocalDistributionFamily;

/// A point of `V^R × {0,1}^R × {⊥,⊤}^R`. Bit `k` of `x` is `x(k)`; bit `k` of `z` set means `z(k) = ⊤`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedVertex {
    pub a: Vec<usize>,
    pub x: u64,
    pub z: u64,
}

/// `π(v)[k] = v[perm[k]]`.
pub fn permute_slice<T: Copy>(v: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&p| v[p]).collect()
}

pub fn permute_bits(m: u64, perm: &[usize]) -> u64 {
    perm.iter().enumerate().fold(0, |acc, (k, &p)| acc | (m >> p & 1) << k)
}

pub fn apply_perm(v: &LiftedVertex, perm: &[usize]) -> LiftedVertex {
    LiftedVertex { a: permute_slice(&v.a, perm), x: permute_bits(v.x, perm), z: permute_bits(v.z, perm) }
}

pub fn random_perm(r: usize, rng: &mut Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..r).collect();
    p.shuffle(rng);
    p
}

fn bern(p: f64, rng: &mut Rng) -> bool {
    rng.random::<f64>() < p
}

/// `(A', x') ∼ M^{(μ)}_z(A, x)`.
pub fn leakage_apply(z: u64, mu: f64, a: &[usize], x: u64, g: &SseGraph, rng: &mut Rng) -> (Vec<usize>, u64) {
    let mut a2 = a.to_vec();
    let mut x2 = x;
    for (k, slot) in a2.iter_mut().enumerate() {
        if z >> k & 1 == 0 {
            *slot = rng.random_range(0..g.n);
            x2 &= !(1 << k);
            if bern(mu, rng) {
                x2 |= 1 << k;
            }
        }
    }
    (a2, x2)
}

/// `T^{(p)}_{1−η}` on a length-`r` bit vector.
pub fn resample_bits(m: u64, r: usize, p: f64, eta: f64, rng: &mut Rng) -> u64 {
    let mut out = m;
    for k in 0..r {
        if bern(eta, rng) {
            out &= !(1 << k);
            if bern(p, rng) {
                out |= 1 << k;
            }
        }
    }
    out
}

/// One sampled ordered constraint of the lifted instance, with the intermediate draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSample {
    pub edge: usize,
    /// Gap vertices of the edge, in edge order.
    pub vertices: Vec<usize>,
    pub tuple: Vec<LiftedVertex>,
    pub perms: Vec<Vec<usize>>,
    pub base: Vec<usize>,
    pub common_z: u64,
    pub xi: u64,
    /// `(x_i, z_i)` after the coupling step, before re-randomization.
    pub coupled: Vec<(u64, u64)>,
}

/// Gap instance, `θ`, SSE graph and parameters, with per-edge tables for sampling.
#[derive(Clone, Debug)]
pub struct ReductionContext {
    pub gap: ConstraintHypergraph,
    pub graph: SseGraph,
    pub params: ReductionParams,
    r: usize,
    mus: Vec<f64>,
    /// Per edge: `θ_e` over tuples, bit `j` = value of the `j`-th edge vertex.
    edge_tables: Vec<Vec<f64>>,
    edge_cdfs: Vec<Vec<f64>>,
    edge_weight_cdf: Vec<f64>,
}

fn cdf(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|v| {
            acc += v.max(0.0);
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * cdf.last().copied().unwrap_or(0.0);
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl ReductionContext {
    pub fn new(
        gap: &ConstraintHypergraph,
        theta: &LocalDistributionFamily,
        graph: &SseGraph,
        params: &ReductionParams,
    ) -> Result<Self> {
        let r = params.sampling_r()?;
        if theta.vertex_count() != gap.vertex_count() {
            return Err(Error::Shape(format!(
                "θ has {} vertices, instance has {}",
                theta.vertex_count(),
                gap.vertex_count()
            )));
        }
        let mus = (0..gap.vertex_count()).map(|i| theta.marginal_one(i)).collect::<Result<Vec<_>>>()?;
        let mut edge_tables = Vec::with_capacity(gap.edges().len());
        for e in gap.edges() {
            let local = theta.local(&e.vs).map_err(|err| match err {
                Error::TooLarge(_) => Error::MissingLocal(e.vs.clone()),
                other => other,
            })?;
            let pos: Vec<usize> = e.vs.iter().map(|v| local.position(*v).expect("edge vertex in local")).collect();
            let table: Vec<f64> = (0..1usize << e.vs.len())
                .map(|t| {
                    let ok = |m: usize| pos.iter().enumerate().all(|(j, &p)| (t >> j & 1) == (m >> p & 1));
                    (0..local.probs.len()).filter(|&m| ok(m)).map(|m| local.probs[m]).sum::<f64>()
                })
                .collect();
            edge_tables.push(table);
        }
        let edge_cdfs = edge_tables.iter().map(|t| cdf(t)).collect();
        let weights: Vec<f64> = gap.edges().iter().map(|e| e.weight).collect();
        Ok(Self {
            gap: gap.clone(),
            graph: graph.clone(),
            params: params.clone(),
            r,
            mus,
            edge_tables,
            edge_cdfs,
            edge_weight_cdf: cdf(&weights),
        })
    }

    pub fn big_r(&self) -> usize {
        self.r
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    /// `Σ_i w̃_i μ_i`.
    pub fn mean_bias(&self) -> f64 {
        let w = self.gap.vertex_weights();
        w.iter().zip(&self.mus).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
    }

    /// `θ_e` as a table over edge-ordered tuples.
    pub fn edge_table(&self, e: usize) -> &[f64] {
        &self.edge_tables[e]
    }

    /// Edge weights normalized to a distribution.
    pub fn edge_probability(&self, e: usize) -> f64 {
        let total = self.edge_weight_cdf.last().copied().unwrap_or(0.0);
        self.gap.edges()[e].weight / total
    }

    /// `p_e = Pr_{θ_e}[ψ = 1]`.
    pub fn edge_success(&self, e: usize) -> f64 {
        let psi = self.gap.predicate();
        self.edge_tables[e]
            .iter()
            .enumerate()
            .filter(|(t, _)| psi.accepts_mask(*t as u32))
            .map(|(_, p)| p)
            .sum()
    }

    /// `E_e p_e`, the objective of `θ`.
    pub fn objective(&self) -> f64 {
        (0..self.gap.edges().len()).map(|e| self.edge_probability(e) * self.edge_success(e)).sum()
    }

    pub fn sample(&self, rng: &mut Rng) -> TestSample {
        let e = draw(&self.edge_weight_cdf, rng);
        self.sample_for_edge(e, rng)
    }

    /// The test distribution with the edge fixed.
    pub fn sample_for_edge(&self, e: usize, rng: &mut Rng) -> TestSample {
        let p = &self.params;
        let r = self.r;
        let n = self.graph.n;
        let vertices = self.gap.edges()[e].vs.clone();
        let arity = vertices.len();

        let base: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
        let walks: Vec<Vec<usize>> = (0..arity)
            .map(|_| base.iter().map(|&v| walk_step(&self.graph, p.eta, v, rng)).collect())
            .collect();

        let mut common_z = 0u64;
        let mut xi = 0u64;
        for k in 0..r {
            if bern(p.beta, rng) {
                common_z |= 1 << k;
            }
        }
        for k in 0..r {
            if bern(p.rho_sq, rng) {
                xi |= 1 << k;
            }
        }

        let mut coupled = vec![(0u64, 0u64); arity];
        for k in 0..r {
            let t = draw(&self.edge_cdfs[e], rng);
            for (i, c) in coupled.iter_mut().enumerate() {
                c.0 |= ((t >> i & 1) as u64) << k;
                let top = if xi >> k & 1 == 1 { common_z >> k & 1 == 1 } else { bern(p.beta, rng) };
                if top {
                    c.1 |= 1 << k;
                }
            }
        }

        let mut tuple = Vec::with_capacity(arity);
        let mut perms = Vec::with_capacity(arity);
        for (i, &(x, z)) in coupled.iter().enumerate() {
            let mu_i = self.mus[vertices[i]];
            let xt = resample_bits(x, r, mu_i, p.eta, rng);
            let zt = resample_bits(z, r, p.beta, p.eta, rng);
            let (b2, x2) = leakage_apply(zt, mu_i, &walks[i], xt, &self.graph, rng);
            let perm = random_perm(r, rng);
            tuple.push(apply_perm(&LiftedVertex { a: b2, x: x2, z: zt }, &perm));
            perms.push(perm);
        }
        TestSample { edge: e, vertices, tuple, perms, base, common_z, xi, coupled }
    }
}

/// Convenience wrapper: one sample from a freshly built context.
pub fn sample_test_tuple(
    gap: &ConstraintHypergraph,
    theta: &LocalDistributionFamily,
    graph: &SseGraph,
    params: &ReductionParams,
    rng: &mut Rng,
) -> Result<TestSample> {
    Ok(ReductionContext::new(gap, theta, graph, params)?.sample(rng))
}
