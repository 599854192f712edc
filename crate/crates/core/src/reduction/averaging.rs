use serde::{Deserialize, Serialize};

use super::graph::SseGraph;
use super::longcode::LongCodeAssignment;
use super::sampler::{apply_perm, LiftedVertex, ReductionContext};
use crate::error::{Error, Result};
use crate::harness::rng::stream;
use crate::probspace::{fourier_expand, noise_apply, FunctionTable, NoiseMode, TableSpace};
use rand::Rng as _;

/// Largest `(2n)^R · R!` combination count enumerated per table point.
pub const AVERAGING_CAP: usize = 1 << 20;

/// Exact enumeration, or a per-point Monte Carlo average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..r).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// Law of `(B'(k), x'(k))` for one coordinate given `A(k)`, `x(k)`, `z(k)`.
fn coordinate_law(g: &SseGraph, eta: f64, mu: f64, a: usize, x: u8, top: bool) -> Vec<(usize, u8, f64)> {
    let n = g.n;
    if top {
        (0..n)
            .filter_map(|u| {
                let p = g.walk_probability(eta, a, u);
                (p > 0.0).then_some((u, x, p))
            })
            .collect()
    } else {
        (0..n).flat_map(|u| [(u, 0u8, (1.0 - mu) / n as f64), (u, 1u8, mu / n as f64)]).filter(|t| t.2 > 0.0).collect()
    }
}

/// `g_{A,i}(x,z) = E_{B∼G_η(A)} E_{(B',x')∼M^{(μ_i)}_z(B,x)} E_π f(π(B',x',z))` as an `Ω^R` table
/// with bit bias `μ_i` and leak bias `β`.
pub fn averaged_function(
    f: &LongCodeAssignment,
    a: &[usize],
    mu_i: f64,
    graph: &SseGraph,
    eta: f64,
    beta: f64,
    mode: AveragingMode,
) -> Result<FunctionTable> {
    let r = a.len();
    if r == 0 || r > crate::probspace::MAX_OMEGA_COORDS {
        return Err(Error::TooLarge(format!("R = {r} exceeds the Ω table cap")));
    }
    let space = TableSpace::omega_uniform(r, mu_i, beta)?;
    let perms = if f.respects_permutations() { vec![(0..r).collect()] } else { permutations(r) };
    let full = (1usize << r) - 1;
    let mut values = vec![0.0; 1 << (2 * r)];
    match mode {
        AveragingMode::Exact => {
            let per = (2 * graph.n).checked_pow(r as u32).and_then(|c| c.checked_mul(perms.len()));
            if per.is_none_or(|c| c > AVERAGING_CAP) {
                return Err(Error::TooLarge(format!("averaging over (2n)^R·R! exceeds {AVERAGING_CAP}; use Monte Carlo")));
            }
            for (point, slot) in values.iter_mut().enumerate() {
                let (x, z) = (point & full, point >> r);
                let laws: Vec<_> = (0..r)
                    .map(|k| coordinate_law(graph, eta, mu_i, a[k], (x >> k & 1) as u8, z >> k & 1 == 1))
                    .collect();
                let mut idx = vec![0usize; r];
                let mut acc = 0.0;
                'outer: loop {
                    let mut w = 1.0;
                    let mut b = vec![0usize; r];
                    let mut xb = 0u64;
                    for k in 0..r {
                        let (u, bit, p) = laws[k][idx[k]];
                        b[k] = u;
                        xb |= (bit as u64) << k;
                        w *= p;
                    }
                    let v = LiftedVertex { a: b, x: xb, z: z as u64 };
                    let s: f64 = perms.iter().map(|p| f.eval_vertex(&apply_perm(&v, p)) as f64).sum();
                    acc += w * s / perms.len() as f64;
                    for k in 0..r {
                        idx[k] += 1;
                        if idx[k] < laws[k].len() {
                            continue 'outer;
                        }
                        idx[k] = 0;
                    }
                    break;
                }
                *slot = acc.clamp(0.0, 1.0);
            }
        }
        AveragingMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo averaging needs samples"));
            }
            for (point, slot) in values.iter_mut().enumerate() {
                let mut rng = stream(seed, "averaged-function", point as u64);
                let (x, z) = (point & full, point >> r);
                let mut hits = 0u64;
                for _ in 0..samples {
                    let b: Vec<usize> = a.iter().map(|&v| super::graph::walk_step(graph, eta, v, &mut rng)).collect();
                    let (b2, x2) = super::sampler::leakage_apply(z as u64, mu_i, &b, x as u64, graph, &mut rng);
                    let p = &perms[rng.random_range(0..perms.len())];
                    hits += f.eval_vertex(&apply_perm(&LiftedVertex { a: b2, x: x2, z: z as u64 }, p)) as u64;
                }
                *slot = hits as f64 / samples as f64;
            }
        }
    }
    FunctionTable::new_bounded(space, values)
}

/// `T^{(Ω)}_{1−η} g`: `x` and `z` halves resampled independently. Bounded inputs stay bounded.
pub fn omega_noise(g: &FunctionTable, eta: f64) -> Result<FunctionTable> {
    let t = noise_apply(&fourier_expand(g)?, 1.0 - eta, NoiseMode::Composite)?.evaluate();
    if g.is_bounded() {
        let space = t.space().clone();
        FunctionTable::new_bounded(space, t.values().iter().map(|v| v.clamp(0.0, 1.0)).collect())
    } else {
        Ok(t)
    }
}

/// Per-coordinate law of `(x_i(j), z_i(j))_{i∈e}` after the coupling step.
/// State index: bits `0..r` are the `x`'s in edge order, bits `r..2r` the `z`'s (set = ⊤).
pub fn coupled_coordinate_law(theta_e: &[f64], rho_sq: f64, beta: f64) -> Result<Vec<f64>> {
    let r = theta_e.len().trailing_zeros() as usize;
    if theta_e.len() != 1 << r {
        return Err(Error::Shape("θ_e table length must be a power of two".into()));
    }
    let zmask = (1usize << r) - 1;
    let mut out = vec![0.0; 1 << (2 * r)];
    for (state, slot) in out.iter_mut().enumerate() {
        let x = state & zmask;
        let z = state >> r;
        let ones = z.count_ones() as i32;
        let independent = beta.powi(ones) * (1.0 - beta).powi(r as i32 - ones);
        let common = if z == 0 {
            1.0 - beta
        } else if z == zmask {
            beta
        } else {
            0.0
        };
        *slot = theta_e[x] * (rho_sq * common + (1.0 - rho_sq) * independent);
    }
    Ok(out)
}

/// `E_{(x_i,z_i) ∼ D_e^R} ∏_i h_i(x_i, z_i)` by enumeration.
pub fn coupled_product_expectation(law: &[f64], hs: &[&FunctionTable]) -> Result<f64> {
    let arity = hs.len();
    if law.len() != 1 << (2 * arity) {
        return Err(Error::Shape(format!("coordinate law has {} states for arity {arity}", law.len())));
    }
    let r = hs[0].space().coordinate_count();
    if hs.iter().any(|h| !h.space().is_omega() || h.space().coordinate_count() != r) {
        return Err(Error::Shape("product needs Ω^R tables of one dimension".into()));
    }
    let total = law.len().checked_pow(r as u32).filter(|&t| t <= crate::harness::ORACLE_CAP);
    if total.is_none() {
        return Err(Error::TooLarge("coupled enumeration exceeds the oracle cap".into()));
    }
    let states = law.len();
    let mut idx = vec![0usize; r];
    let mut acc = 0.0;
    'outer: loop {
        let mut w = 1.0;
        let mut xs = vec![0usize; arity];
        let mut zs = vec![0usize; arity];
        for (k, &s) in idx.iter().enumerate() {
            w *= law[s];
            for i in 0..arity {
                xs[i] |= (s >> i & 1) << k;
                zs[i] |= (s >> (arity + i) & 1) << k;
            }
        }
        if w > 0.0 {
            acc += w * hs.iter().enumerate().map(|(i, h)| h.omega_value(xs[i], zs[i])).product::<f64>();
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < states {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    Ok(acc)
}

/// `Σ_{a∈ψ⁻¹(1)} E_{A∼V^R} E_{D_e^R} ∏_{i∈e} T^{(Ω_i)}_{1−η} g^{(a)}_{A,i}(x_i, z_i)` for one edge.
pub fn arithmetization_rhs(ctx: &ReductionContext, f: &LongCodeAssignment, e: usize) -> Result<f64> {
    let r = ctx.big_r();
    let n = ctx.graph.n;
    let p = &ctx.params;
    let vs = ctx.gap.edges()[e].vs.clone();
    let law = coupled_coordinate_law(ctx.edge_table(e), p.rho_sq, p.beta)?;
    let count = n.checked_pow(r as u32).ok_or_else(|| Error::TooLarge("V^R".into()))?;
    let accepting = ctx.gap.predicate().accepting().to_vec();
    let mut total = 0.0;
    for ai in 0..count {
        let a: Vec<usize> = (0..r).map(|k| ai / n.pow(k as u32) % n).collect();
        let noisy: Vec<FunctionTable> = vs
            .iter()
            .map(|&i| {
                let g = averaged_function(f, &a, ctx.mus()[i], &ctx.graph, p.eta, p.beta, AveragingMode::Exact)?;
                omega_noise(&g, p.eta)
            })
            .collect::<Result<_>>()?;
        let complements: Vec<FunctionTable> = noisy.iter().map(|t| t.complement()).collect();
        for &acc in &accepting {
            let hs: Vec<&FunctionTable> =
                (0..vs.len()).map(|j| if acc >> j & 1 == 1 { &noisy[j] } else { &complements[j] }).collect();
            total += coupled_product_expectation(&law, &hs)?;
        }
    }
    Ok(total / count as f64)
}
