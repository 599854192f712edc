//! Config-driven chain: load → verify → smooth → condition → vectors → rounding and reduction checks.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::io::{parse_json, read_json, GraphJson, InstanceJson, PseudoDistJson};
use super::report::{all_pass, CheckReport, Verdict};
use super::rng::derive_seed;
use crate::csp::ConstraintHypergraph;
use crate::error::{Error, Result};
use crate::gaussian::default_workers;
use crate::probspace::{FunctionTable, TableSpace};
use crate::pseudodist::{find_conditioning, smooth, statistics, vector_solution, verify_feasible, LocalDistributionFamily};
use crate::reduction::{
    acceptance_estimate, analytic_bias, dictator_assignment, generate_sse, mixing_check, permutation_respect_check,
    GraphKind, ManualParams, ReductionContext, ReductionParams, SseGraph, DEFAULT_ETA_SLACK,
};
use crate::rounding::{bias_concentration_check, value_check, RoundingInput};

/// A value given inline or as a path relative to the config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    fn load(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(t) => Ok(t.clone()),
            Source::Path(p) => {
                let path = base.join(p);
                read_json(&path)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothConfig {
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningConfig {
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_target() -> f64 {
    0.05
}

fn default_budget() -> usize {
    6
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingFunctions {
    /// `g_i(x) = x(1)`.
    Dictator,
    /// `g_i ≡ μ_i`.
    Constant,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundingConfig {
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_functions")]
    pub functions: RoundingFunctions,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_value_budget")]
    pub value_budget: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
}

fn default_r() -> usize {
    4
}
fn default_eta() -> f64 {
    0.01
}
fn default_functions() -> RoundingFunctions {
    RoundingFunctions::Dictator
}
fn default_trials() -> u64 {
    20_000
}
fn default_value_budget() -> f64 {
    0.02
}
fn default_tau() -> f64 {
    0.1
}
fn default_nu() -> f64 {
    0.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub kind: GraphKind,
    pub n: usize,
    pub deg: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_delta() -> f64 {
    0.25
}
fn default_eps() -> f64 {
    0.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    #[serde(default)]
    pub graph: Option<Source<GraphJson>>,
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
    pub params: ManualParams,
    #[serde(default = "default_accept_trials")]
    pub trials: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_mix_samples")]
    pub mixing_samples: u64,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_accept_trials() -> u64 {
    100_000
}
fn default_alpha() -> f64 {
    0.5
}
fn default_mix_samples() -> u64 {
    10_000
}
fn default_slack() -> f64 {
    DEFAULT_ETA_SLACK
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub instance: Source<InstanceJson>,
    pub pseudo_distribution: Source<PseudoDistJson>,
    #[serde(default)]
    pub seed: u64,
    /// Target bias; the weighted mean of the marginals when absent.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub smooth: Option<SmoothConfig>,
    #[serde(default)]
    pub conditioning: Option<ConditioningConfig>,
    #[serde(default)]
    pub rounding: Option<RoundingConfig>,
    #[serde(default)]
    pub reduction: Option<ReductionConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub all_pass: bool,
    pub reports: Vec<CheckReport>,
    pub conditioning: Value,
}

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn weights(g: &ConstraintHypergraph) -> Vec<f64> {
    g.vertex_weights().to_vec()
}

pub fn load_config(path: &Path) -> Result<(PipelineConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_json(&text, &path.display().to_string())?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub fn run_pipeline_file(path: &Path) -> Result<PipelineReport> {
    let (cfg, base) = staged("config", load_config(path))?;
    run_pipeline(&cfg, &base)
}

pub fn run_pipeline(cfg: &PipelineConfig, base: &Path) -> Result<PipelineReport> {
    let g = staged("load", cfg.instance.load(base).and_then(|j| j.to_instance()))?;
    let theta = staged("load", cfg.pseudo_distribution.load(base).and_then(|j| j.to_family(&g)))?;
    let w = weights(&g);
    let mut reports = Vec::new();

    let initial = staged("statistics", statistics(&theta, &w))?;
    let mu = cfg.mu.unwrap_or(initial.bias);
    let feas = staged("verify", verify_feasible(&theta, &g, mu))?;
    reports.push(
        CheckReport::new("pd.feasibility", Verdict::from_bool(feas.feasible), feas.min_eigenvalue, 0.0).with_details(json!({
            "violations": feas.violations.len(),
            "invalid_locals": feas.invalid_locals.len(),
            "moment_order": feas.moment_order,
            "bias": feas.bias,
            "target_bias": feas.target_bias,
            "objective": feas.objective,
        })),
    );

    let smoothed = match &cfg.smooth {
        Some(s) => {
            let t = staged("smooth", smooth(&theta, s.eta, mu))?;
            let after = staged("smooth", statistics(&t, &w))?;
            let expected = (1.0 - s.eta) * initial.bias + s.eta * mu;
            let err = (after.bias - expected).abs();
            reports.push(CheckReport::new("pd.smooth_bias", Verdict::from_bool(err <= 1e-9), after.bias, expected));
            t
        }
        None => theta.clone(),
    };

    let (conditioned, conditioning) = match &cfg.conditioning {
        Some(c) => {
            let out = staged("condition", find_conditioning(&smoothed, &w, c.target, c.budget))?;
            let recomputed = staged("condition", statistics(&out.family, &w))?.avg_abs_corr_offdiag;
            let consistent = (recomputed - out.final_avg_abs_corr).abs() <= 1e-9;
            let verdict = if !consistent {
                Verdict::Fail
            } else if out.success {
                Verdict::Pass
            } else {
                Verdict::Info
            };
            reports.push(CheckReport::new("pd.conditioning", verdict, recomputed, c.target));
            let trace = json!({
                "success": out.success,
                "subset": out.subset,
                "values": out.values,
                "trace": out.trace,
                "initial_avg_abs_corr": out.initial_avg_abs_corr,
                "final_avg_abs_corr": out.final_avg_abs_corr,
            });
            (out.family, trace)
        }
        None => (smoothed.clone(), Value::Null),
    };

    let vectors = staged("vectors", vector_solution(&conditioned))?;
    let mut gram_err: f64 = 0.0;
    for i in 0..g.vertex_count() {
        for j in i + 1..g.vertex_count() {
            let p = staged("vectors", conditioned.pair_one(i, j))?;
            gram_err = gram_err.max((vectors.inner_u(i, j) - p).abs());
        }
    }
    reports.push(CheckReport::new("pd.vector_solution", Verdict::from_bool(gram_err <= 1e-7), gram_err, 1e-7));

    if let Some(rc) = &cfg.rounding {
        let fs = staged("rounding", rounding_functions(&vectors.mu, rc))?;
        let input = staged("rounding", RoundingInput::new(&g, fs, &vectors, rc.eta, rc.tau, rc.nu, mu))?;
        let stats = staged("rounding", statistics(&conditioned, &w))?;
        let gamma = stats.avg_abs_corr_offdiag.max(0.0).sqrt();
        reports.push(staged(
            "rounding",
            bias_concentration_check(&input, gamma, rc.trials, derive_seed(cfg.seed, "pipeline-bias", 0)),
        )?);
        reports.push(staged(
            "rounding",
            value_check(&input, &conditioned, rc.trials, derive_seed(cfg.seed, "pipeline-value", 0), rc.value_budget, default_workers()),
        )?);
    }

    if let Some(rc) = &cfg.reduction {
        reports.extend(staged("reduction", reduction_reports(&g, &smoothed, rc, cfg.seed, base))?);
    }

    Ok(PipelineReport { seed: cfg.seed, all_pass: all_pass(&reports), reports, conditioning })
}

fn rounding_functions(mus: &[f64], rc: &RoundingConfig) -> Result<Vec<FunctionTable>> {
    mus.iter()
        .map(|&m| {
            let bias = if m.min(1.0 - m) < crate::rounding::DEGENERATE_BIAS { 0.5 } else { m };
            let space = TableSpace::cube_uniform(rc.r, bias)?;
            match rc.functions {
                RoundingFunctions::Dictator => FunctionTable::from_fn(space, |x| (x & 1) as f64),
                RoundingFunctions::Constant => FunctionTable::constant(space, m),
            }
        })
        .collect()
}

fn reduction_reports(
    g: &ConstraintHypergraph,
    theta: &LocalDistributionFamily,
    rc: &ReductionConfig,
    seed: u64,
    base: &Path,
) -> Result<Vec<CheckReport>> {
    let graph: SseGraph = match (&rc.graph, &rc.generate) {
        (Some(src), _) => src.load(base)?.to_graph()?,
        (None, Some(gen)) => generate_sse(gen.kind, gen.n, gen.deg, gen.delta, gen.eps, derive_seed(seed, "pipeline-graph", 0))?,
        (None, None) => return Err(Error::invalid("reduction needs `graph` or `generate`")),
    };
    let set = graph
        .planted
        .clone()
        .ok_or_else(|| Error::invalid("reduction experiments need a planted set for the dictator"))?;
    let params = ReductionParams::manual(&rc.params)?;
    let ctx = ReductionContext::new(g, theta, &graph, &params)?;
    let f = dictator_assignment(&set, graph.n, ctx.big_r())?;
    let mut out = Vec::new();

    let bias = analytic_bias(&f, ctx.mus(), g.vertex_weights()).unwrap_or(f64::NAN);
    let target = ctx.mean_bias();
    out.push(CheckReport::new("reduction.analytic_bias", Verdict::from_bool((bias - target).abs() <= 1e-12), bias, target));

    let mut rng = crate::harness::rng::stream(seed, "pipeline-perm", 0);
    let pc = permutation_respect_check(&f, graph.n, ctx.big_r(), 10_000, &mut rng);
    out.push(
        CheckReport::new("reduction.permutation_respect", Verdict::from_bool(pc.strict_violations == 0), pc.strict_violations as f64, 0.0)
            .with_details(serde_json::to_value(&pc).unwrap_or(Value::Null)),
    );
    out.push(acceptance_estimate(&ctx, &f, rc.trials, derive_seed(seed, "pipeline-accept", 0), default_workers(), rc.slack)?);
    out.push(mixing_check(&ctx, &f, rc.alpha, rc.mixing_samples, 1, derive_seed(seed, "pipeline-mix", 0), default_workers())?);
    Ok(out)
}
