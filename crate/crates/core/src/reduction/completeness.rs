use serde_json::json;

use super::longcode::LongCodeAssignment;
use super::sampler::ReductionContext;
use crate::error::Result;
use crate::harness::{mc_run, CheckReport, McRun, Verdict};

/// Default multiplier on the `r·η` slack.
pub const DEFAULT_ETA_SLACK: f64 = 10.0;

/// Monte Carlo acceptance probability of `f` under the test distribution.
pub fn acceptance_run(ctx: &ReductionContext, f: &LongCodeAssignment, trials: u64, seed: u64, workers: usize) -> Result<McRun> {
    let psi = ctx.gap.predicate();
    mc_run(
        "reduction-accept",
        |rng| {
            let s = ctx.sample(rng);
            let args = s.tuple.iter().enumerate().fold(0u32, |m, (j, v)| m | (f.eval_vertex(v) as u32) << j);
            psi.accepts_mask(args) as u8 as f64
        },
        trials,
        seed,
        workers,
    )
}

/// Acceptance estimate against `(e^{−6}ρ²/r)·c − slack·r·η − 3σ`, with `c` the objective of `θ`.
pub fn acceptance_estimate(
    ctx: &ReductionContext,
    f: &LongCodeAssignment,
    trials: u64,
    seed: u64,
    workers: usize,
    slack: f64,
) -> Result<CheckReport> {
    let run = acceptance_run(ctx, f, trials, seed, workers)?;
    let p = &ctx.params;
    let r = p.r as f64;
    let c = ctx.objective();
    let main = (-6f64).exp() * p.rho_sq / r * c;
    let eta_term = slack * r * p.eta;
    let bound = main - eta_term - 3.0 * run.stderr;
    Ok(CheckReport::new("reduction.acceptance", Verdict::from_bool(run.value >= bound), run.value, bound)
        .with_mc(run.stderr, seed, trials)
        .with_details(json!({
            "objective": c,
            "main_term": main,
            "eta_term": eta_term,
            "slack": slack,
            "ci95": [run.ci95.0, run.ci95.1],
            "wall_seconds": run.wall_seconds,
        })))
}
