use rand::Rng as _;
use serde_json::json;

use super::graph::walk_step;
use super::longcode::LongCodeAssignment;
use super::sampler::{random_perm, apply_perm, LiftedVertex, ReductionContext};
use crate::error::Result;
use crate::harness::rng::{derive_seed, stream, Rng};
use crate::harness::{mc_run, CheckReport, Verdict};

fn bern(p: f64, rng: &mut Rng) -> bool {
    rng.random::<f64>() < p
}

/// `μ_{A,i} = E_{x∼μ_i} E_{z∼β} g_{A,i}(x,z)`; closed form for dictators and constants,
/// otherwise `inner` Monte Carlo draws of `(z, B', x', π)`.
pub fn mu_a_i(ctx: &ReductionContext, f: &LongCodeAssignment, a: &[usize], i: usize, inner: u64, rng: &mut Rng) -> f64 {
    let mu = ctx.mus()[i];
    if let Some(v) = f.mean_over_x(a, 0, mu) {
        return v;
    }
    let p = &ctx.params;
    let g = &ctx.graph;
    let r = a.len();
    let mut hits = 0u64;
    for _ in 0..inner.max(1) {
        let mut v = LiftedVertex { a: vec![0; r], x: 0, z: 0 };
        for k in 0..r {
            let top = bern(p.beta, rng);
            v.a[k] = if top { walk_step(g, p.eta, a[k], rng) } else { rng.random_range(0..g.n) };
            if top {
                v.z |= 1 << k;
            }
            if bern(mu, rng) {
                v.x |= 1 << k;
            }
        }
        let v = if f.respects_permutations() { v } else { apply_perm(&v, &random_perm(r, rng)) };
        hits += f.eval_vertex(&v) as u64;
    }
    hits as f64 / inner.max(1) as f64
}

/// `μ_A = E_{i∼w̃} μ_{A,i}`.
pub fn mu_a(ctx: &ReductionContext, f: &LongCodeAssignment, a: &[usize], inner: u64, rng: &mut Rng) -> f64 {
    let w = ctx.gap.vertex_weights();
    let total: f64 = w.iter().sum();
    (0..w.len()).map(|i| w[i] * mu_a_i(ctx, f, a, i, inner, rng)).sum::<f64>() / total
}

/// Estimates `Pr_{A∼V^R}[|μ_A − μ| ≥ α√μ]` against `|V_gap|·β/α² + 3σ`.
pub fn mixing_check(
    ctx: &ReductionContext,
    f: &LongCodeAssignment,
    alpha: f64,
    samples: u64,
    inner: u64,
    seed: u64,
    workers: usize,
) -> Result<CheckReport> {
    let mu = ctx.mean_bias();
    let r = ctx.big_r();
    let n = ctx.graph.n;
    let inner_seed = derive_seed(seed, "mixing-inner", 0);
    let run = mc_run(
        "reduction-mixing",
        |rng| {
            let a: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
            let mut irng = stream(inner_seed, "mu-a", rng.random());
            ((mu_a(ctx, f, &a, inner, &mut irng) - mu).abs() >= alpha * mu.sqrt()) as u8 as f64
        },
        samples,
        seed,
        workers,
    )?;
    let p = &ctx.params;
    let nominal_bound = p.n_gap as f64 * p.beta / (alpha * alpha);
    let bound = nominal_bound + 3.0 * run.stderr;
    Ok(CheckReport::new("reduction.mixing", Verdict::from_bool(run.value <= bound), run.value, bound)
        .with_mc(run.stderr, seed, samples)
        .with_details(json!({
            "mu": mu,
            "alpha": alpha,
            "nominal_bound": nominal_bound,
            "inner_samples": inner,
        })))
}
