//! `mucsp`: command-line front end for the mucsp-core checks.
//!
//! Every command prints a JSON bundle `{command, seed, all_pass, reports, result}`.
//! Exit code 0 when no report failed, 1 when one did, 2 on bad input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use mucsp_core::csp::{assignment_value, opt_constrained, relative_weight, Assignment, ConstraintHypergraph};
use mucsp_core::gaussian::{borell_check, default_workers, lambda_bound_check, GaussianTestFn, DEFAULT_DELTA0};
use mucsp_core::harness::numparse::{parse_list, parse_number};
use mucsp_core::harness::rng::{derive_seed, stream};
use mucsp_core::harness::{
    all_pass, read_json, run_pipeline_file, write_json, CheckReport, GraphJson, InstanceJson, PseudoDistJson, TableJson,
    Verdict,
};
use mucsp_core::probspace::{FunctionTable, TableSpace};
use mucsp_core::pseudodist::{
    find_conditioning, smooth, statistics, vector_solution, verify_feasible, LocalDistributionFamily,
};
use mucsp_core::reduction::{
    acceptance_estimate, analytic_bias, decoupling_check, dictator_assignment, dictator_table, expansion,
    generate_sse, influence_decode_stat, mixing_check, permutation_respect_check, random_smooth_table, DecouplingConfig,
    DecouplingMode, Dictator, GraphKind, ManualParams, ReductionContext, ReductionParams, SseGraph, DEFAULT_ETA_SLACK,
};
use mucsp_core::rounding::{bias_concentration_check, round_once, value_check, RoundingInput};
use serde_json::{json, Value};

fn num(s: &str) -> Result<f64, String> {
    parse_number(s).map_err(|e| e.to_string())
}

/// Comma-separated numbers; wrapped so clap treats it as one value.
#[derive(Clone, Debug)]
struct NumList(Vec<f64>);

fn nums(s: &str) -> Result<NumList, String> {
    parse_list(s).map(NumList).map_err(|e| e.to_string())
}

fn indices(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("index '{p}': {e}")))
        .collect()
}

#[derive(Parser)]
#[command(name = "mucsp", version, about = "Checks for mu-constrained Boolean CSPs: Fourier analysis, pseudo-distributions, rounding and SSE reductions")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample count (command-specific default when absent).
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Also write the JSON bundle to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exhaustive CSP utilities.
    #[command(subcommand)]
    Csp(CspCmd),
    /// Pseudo-distribution checks.
    #[command(subcommand)]
    Pd(PdCmd),
    /// Gaussian stability estimates.
    #[command(subcommand)]
    Gauss(GaussCmd),
    /// Gaussian-projection rounding.
    #[command(subcommand)]
    Round(RoundCmd),
    /// SSE gadget reduction experiments.
    #[command(subcommand)]
    Reduce(ReduceCmd),
    /// Run a config-driven pipeline.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON.
    #[arg(long = "in")]
    instance: PathBuf,
}

#[derive(Args)]
struct FamilyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Pseudo-distribution JSON.
    #[arg(long)]
    pd: PathBuf,
}

#[derive(Subcommand)]
enum CspCmd {
    /// Best value among assignments of relative weight within `tol` of `mu`.
    Opt {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_parser = num)]
        mu: f64,
        #[arg(long, value_parser = num)]
        tol: Option<f64>,
    },
    /// Value and relative weight of one assignment given as a 0/1 string in vertex order.
    Value {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        assignment: String,
    },
}

#[derive(Subcommand)]
enum PdCmd {
    /// Consistency, moment-matrix PSD-ness, bias and objective.
    Verify {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = num)]
        mu: Option<f64>,
    },
    /// Smooth toward Bernoulli(mu) and check the bias.
    Smooth {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = num)]
        eta: f64,
        #[arg(long, value_parser = num)]
        mu: Option<f64>,
        /// Write the smoothed family here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Greedy conditioning toward low average correlation.
    Condition {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = num, default_value = "0.05")]
        target: f64,
        #[arg(long, default_value_t = 6)]
        budget: usize,
    },
    /// Gram vectors of the degree-2 moments.
    Vectors {
        #[command(flatten)]
        fam: FamilyArgs,
    },
}

#[derive(Subcommand)]
enum GaussCmd {
    /// Estimate Λ_ρ(δ) and check the small-δ bound.
    Lambda {
        #[arg(long, value_parser = num)]
        rho: f64,
        #[arg(long, value_parser = nums)]
        deltas: NumList,
        #[arg(long, value_parser = num, default_value = "0.01")]
        delta0: f64,
    },
    /// Parallel halfspaces of the given volumes against Λ_ρ.
    Borell {
        #[arg(long, value_parser = num)]
        rho: f64,
        #[arg(long, value_parser = nums)]
        volumes: NumList,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

#[derive(Subcommand)]
enum RoundCmd {
    /// One rounding plus the bias-concentration and value checks.
    Run {
        #[command(flatten)]
        fam: FamilyArgs,
        /// JSON array of one cube table per vertex; dictators `x(1)` when absent.
        #[arg(long)]
        functions: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, value_parser = num, default_value = "0.01")]
        eta: f64,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long, value_parser = num, default_value = "0.1")]
        tau: f64,
        #[arg(long, value_parser = num, default_value = "0.1")]
        nu: f64,
        #[arg(long, value_parser = num, default_value = "0.02")]
        budget: f64,
        #[arg(long, value_parser = num)]
        mu: Option<f64>,
    },
}

#[derive(Args)]
struct ContextArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// SSE graph JSON.
    #[arg(long)]
    graph: PathBuf,
    /// Manual parameter JSON.
    #[arg(long)]
    params: PathBuf,
    /// Smooth the family at this rate (toward its own bias) before use.
    #[arg(long, value_parser = num)]
    smooth: Option<f64>,
    /// Dictator set; the graph's planted set when absent.
    #[arg(long, value_parser = indices)]
    set: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum ReduceCmd {
    /// Parameters derived from mu, r, n_gap, delta and s.
    Params {
        #[arg(long, value_parser = num)]
        mu: f64,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n_gap: usize,
        #[arg(long, value_parser = num)]
        delta: f64,
        #[arg(long, value_parser = num, default_value = "0.5")]
        s: f64,
    },
    /// Generate an SSE graph.
    Gen {
        #[arg(long, value_parser = parse_kind, default_value = "planted")]
        kind: GraphKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        deg: usize,
        #[arg(long, value_parser = num, default_value = "0.25")]
        delta: f64,
        #[arg(long, value_parser = num, default_value = "0.1")]
        eps: f64,
        /// Write the graph JSON here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Draw test tuples.
    Sample {
        #[command(flatten)]
        ctx: ContextArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Analytic bias and permutation respect of the dictator.
    Dictator {
        #[command(flatten)]
        ctx: ContextArgs,
    },
    /// Monte Carlo acceptance of the dictator against the completeness bound.
    Accept {
        #[command(flatten)]
        ctx: ContextArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_parser = num, default_value_t = DEFAULT_ETA_SLACK)]
        slack: f64,
    },
    /// Half-decoupling inequality for Ω tables.
    Decouple {
        /// JSON array of Ω tables; random smooth tables when absent.
        #[arg(long)]
        tables: Option<PathBuf>,
        /// θ_e over edge tuples, length 2^r.
        #[arg(long, value_parser = nums)]
        theta: NumList,
        #[arg(long, value_parser = num)]
        rho_sq: f64,
        #[arg(long, value_parser = num)]
        beta: f64,
        #[arg(long, value_parser = num)]
        mu: f64,
        #[arg(long, value_parser = num, default_value = "0.01")]
        tau: f64,
        #[arg(long, value_parser = num, default_value = "0")]
        budget: f64,
        /// Exact enumeration instead of Monte Carlo.
        #[arg(long)]
        exact: bool,
        /// Dimension of random tables.
        #[arg(long, default_value_t = 2)]
        big_r: usize,
        /// Spread of random tables around their level.
        #[arg(long, value_parser = num, default_value = "0.3")]
        amp: f64,
        /// Noise applied to random tables.
        #[arg(long, value_parser = num, default_value = "0.2")]
        table_eta: f64,
    },
    /// Long-code mixing of the dictator.
    Mix {
        #[command(flatten)]
        ctx: ContextArgs,
        #[arg(long, value_parser = num, default_value = "0.5")]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        inner: u64,
    },
    /// Influence-decoding statistic for the planted dictator.
    DecodeStat {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = num, default_value = "0.1")]
        eta: f64,
        #[arg(long, value_parser = num, default_value = "0.05")]
        tau: f64,
        #[arg(long, value_parser = num, default_value = "0.3")]
        mu: f64,
        #[arg(long, default_value_t = 200)]
        respect_trials: usize,
    },
}

fn parse_kind(s: &str) -> Result<GraphKind, String> {
    match s {
        "planted" => Ok(GraphKind::Planted),
        "random-regular" | "random" => Ok(GraphKind::RandomRegular),
        _ => Err(format!("unknown graph kind '{s}' (planted, random-regular)")),
    }
}

/// Bad input; maps to exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

struct Bundle {
    reports: Vec<CheckReport>,
    result: Value,
}

impl Bundle {
    fn result(result: Value) -> Self {
        Self { reports: Vec::new(), result }
    }
}

fn load_instance(p: &Path) -> Result<ConstraintHypergraph> {
    let j: InstanceJson = read_json(p)?;
    Ok(j.to_instance().with_context(|| p.display().to_string())?)
}

fn load_family(args: &FamilyArgs) -> Result<(ConstraintHypergraph, LocalDistributionFamily, PseudoDistJson)> {
    let g = load_instance(&args.inst.instance)?;
    let j: PseudoDistJson = read_json(&args.pd)?;
    let theta = j.to_family(&g).with_context(|| args.pd.display().to_string())?;
    Ok((g, theta, j))
}

fn load_graph(p: &Path) -> Result<SseGraph> {
    let j: GraphJson = read_json(p)?;
    Ok(j.to_graph().with_context(|| p.display().to_string())?)
}

struct Loaded {
    g: ConstraintHypergraph,
    theta: LocalDistributionFamily,
    graph: SseGraph,
    params: ReductionParams,
    set: Vec<usize>,
}

fn load_context(a: &ContextArgs) -> Result<Loaded> {
    let (g, theta, _) = load_family(&a.fam)?;
    let theta = match a.smooth {
        Some(eta) => {
            let mu = statistics(&theta, g.vertex_weights())?.bias;
            smooth(&theta, eta, mu)?
        }
        None => theta,
    };
    let graph = load_graph(&a.graph)?;
    let manual: ManualParams = read_json(&a.params)?;
    let params = ReductionParams::manual(&manual)?;
    let set = match &a.set {
        Some(s) => s.clone(),
        None => graph.planted.clone().ok_or_else(|| anyhow!("graph has no planted set; pass --set"))?,
    };
    Ok(Loaded { g, theta, graph, params, set })
}

fn input<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn run(cli: &Cli) -> Result<Bundle> {
    let seed = cli.seed;
    let workers = cli.workers.unwrap_or_else(default_workers).max(1);
    let samples = |d: u64| cli.samples.unwrap_or(d);
    Ok(match &cli.cmd {
        Cmd::Csp(CspCmd::Opt { inst, mu, tol }) => {
            let g = input(load_instance(&inst.instance))?;
            let tol = tol.unwrap_or_else(|| g.default_tol());
            let opt = input(opt_constrained(&g, *mu, tol).map_err(Into::into))?;
            let verdict = if opt.feasible { Verdict::Pass } else { Verdict::Info };
            Bundle {
                reports: vec![CheckReport::new("csp.opt", verdict, opt.value, *mu)],
                result: json!({ "opt": opt, "tol": tol }),
            }
        }
        Cmd::Csp(CspCmd::Value { inst, assignment }) => {
            let g = input(load_instance(&inst.instance))?;
            let labels = assignment
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(InputError(anyhow!("assignment must be a 0/1 string, found '{c}'"))),
                })
                .collect::<std::result::Result<Vec<u8>, _>>()?;
            let sigma = Assignment::new(labels);
            let value = input(assignment_value(&g, &sigma).map_err(Into::into))?;
            let weight = input(relative_weight(&g, &sigma).map_err(Into::into))?;
            Bundle::result(json!({ "value": value, "relative_weight": weight }))
        }
        Cmd::Pd(cmd) => pd(cmd)?,
        Cmd::Gauss(GaussCmd::Lambda { rho, deltas, delta0 }) => {
            let d0 = if *delta0 > 0.0 { *delta0 } else { DEFAULT_DELTA0 };
            let rep = input(lambda_bound_check(*rho, &deltas.0, samples(1_000_000), seed, d0).map_err(Into::into))?;
            Bundle { result: json!({ "value": rep.value, "stderr": rep.stderr }), reports: vec![rep] }
        }
        Cmd::Gauss(GaussCmd::Borell { rho, volumes, dim }) => {
            let fs = input(
                volumes
                    .0
                    .iter()
                    .map(|&v| GaussianTestFn::halfspace_of_volume(*dim, v))
                    .collect::<mucsp_core::Result<Vec<_>>>()
                    .map_err(Into::into),
            )?;
            let rep = input(borell_check(&fs, *dim, *rho, samples(1_000_000), seed).map_err(Into::into))?;
            Bundle { result: json!({ "value": rep.value, "stderr": rep.stderr }), reports: vec![rep] }
        }
        Cmd::Round(RoundCmd::Run { fam, functions, r, eta, trials, tau, nu, budget, mu }) => {
            let (g, theta, _) = input(load_family(fam))?;
            let vectors = input(vector_solution(&theta).map_err(Into::into))?;
            let fs: Vec<FunctionTable> = match functions {
                Some(p) => {
                    let tables: Vec<TableJson> = input(read_json(p).map_err(Into::into))?;
                    input(tables.iter().map(TableJson::to_table).collect::<mucsp_core::Result<_>>().map_err(Into::into))?
                }
                None => input(
                    vectors
                        .mu
                        .iter()
                        .map(|&m| {
                            let b = if m.min(1.0 - m) < mucsp_core::rounding::DEGENERATE_BIAS { 0.5 } else { m };
                            FunctionTable::from_fn(TableSpace::cube_uniform(*r, b)?, |x| (x & 1) as f64)
                        })
                        .collect::<mucsp_core::Result<_>>()
                        .map_err(Into::into),
                )?,
            };
            let w = g.vertex_weights().to_vec();
            let stats = input(statistics(&theta, &w).map_err(Into::into))?;
            let mu = mu.unwrap_or(stats.bias);
            let inp = input(RoundingInput::new(&g, fs, &vectors, *eta, *tau, *nu, mu).map_err(Into::into))?;
            let outcome = round_once(&inp, seed)?;
            let gamma = stats.avg_abs_corr_offdiag.max(0.0).sqrt();
            let reports = vec![
                bias_concentration_check(&inp, gamma, *trials, derive_seed(seed, "cli-bias", 0))?,
                value_check(&inp, &theta, *trials, derive_seed(seed, "cli-value", 0), *budget, workers)?,
            ];
            Bundle { reports, result: json!({ "outcome": outcome }) }
        }
        Cmd::Reduce(cmd) => reduce(cmd, seed, workers, cli.samples)?,
        Cmd::Pipeline { config } => {
            let rep = input(run_pipeline_file(config).map_err(Into::into))?;
            Bundle { result: json!({ "conditioning": rep.conditioning }), reports: rep.reports }
        }
    })
}

fn pd(cmd: &PdCmd) -> Result<Bundle> {
    Ok(match cmd {
        PdCmd::Verify { fam, mu } => {
            let (g, theta, _) = input(load_family(fam))?;
            let mu = match mu {
                Some(m) => *m,
                None => input(statistics(&theta, g.vertex_weights()).map_err(Into::into))?.bias,
            };
            let rep = input(verify_feasible(&theta, &g, mu).map_err(Into::into))?;
            Bundle {
                reports: vec![CheckReport::new("pd.feasibility", Verdict::from_bool(rep.feasible), rep.min_eigenvalue, 0.0)],
                result: serde_json::to_value(&rep)?,
            }
        }
        PdCmd::Smooth { fam, eta, mu, write } => {
            let (g, theta, j) = input(load_family(fam))?;
            let w = g.vertex_weights();
            let before = input(statistics(&theta, w).map_err(Into::into))?.bias;
            let mu = mu.unwrap_or(before);
            let sm = input(smooth(&theta, *eta, mu).map_err(Into::into))?;
            let after = statistics(&sm, w)?.bias;
            let expected = (1.0 - eta) * before + eta * mu;
            if let Some(p) = write {
                let subsets: Vec<Vec<usize>> = j
                    .locals
                    .iter()
                    .map(|l| l.subset.iter().map(|id| g.vertex_index(id)).collect::<mucsp_core::Result<Vec<_>>>())
                    .collect::<mucsp_core::Result<_>>()?;
                let subsets: Vec<Vec<usize>> = subsets.iter().map(|s| mucsp_core::pseudodist::canonical(s)).collect();
                write_json(p, &PseudoDistJson::from_family(&sm, &g, &subsets)?)?;
            }
            Bundle {
                reports: vec![CheckReport::new(
                    "pd.smooth_bias",
                    Verdict::from_bool((after - expected).abs() <= 1e-9),
                    after,
                    expected,
                )],
                result: json!({ "bias_before": before, "bias_after": after, "mu": mu, "eta": eta }),
            }
        }
        PdCmd::Condition { fam, target, budget } => {
            let (g, theta, _) = input(load_family(fam))?;
            let out = input(find_conditioning(&theta, g.vertex_weights(), *target, *budget).map_err(Into::into))?;
            let verdict = if out.success { Verdict::Pass } else { Verdict::Info };
            let ids: Vec<&str> = out.subset.iter().map(|&v| g.ids()[v].as_str()).collect();
            Bundle {
                reports: vec![CheckReport::new("pd.conditioning", verdict, out.final_avg_abs_corr, *target)],
                result: json!({
                    "success": out.success,
                    "subset": ids,
                    "values": out.values,
                    "trace": out.trace,
                    "initial_avg_abs_corr": out.initial_avg_abs_corr,
                    "final_avg_abs_corr": out.final_avg_abs_corr,
                }),
            }
        }
        PdCmd::Vectors { fam } => {
            let (g, theta, _) = input(load_family(fam))?;
            let vs = input(vector_solution(&theta).map_err(Into::into))?;
            let n = g.vertex_count();
            let mut err: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    err = err.max((vs.inner_u(i, j) - theta.pair_one(i, j)?).abs());
                }
            }
            Bundle {
                reports: vec![CheckReport::new("pd.vector_solution", Verdict::from_bool(err <= 1e-7), err, 1e-7)],
                result: serde_json::to_value(&vs)?,
            }
        }
    })
}

fn reduce(cmd: &ReduceCmd, seed: u64, workers: usize, samples: Option<u64>) -> Result<Bundle> {
    Ok(match cmd {
        ReduceCmd::Params { mu, r, n_gap, delta, s } => {
            let p = input(ReductionParams::derived(*mu, *r, *n_gap, *delta, *s).map_err(Into::into))?;
            Bundle::result(json!({
                "params": p,
                "gamma": p.gamma(),
                "tau": p.tau(),
                "epsilon": p.epsilon(),
            }))
        }
        ReduceCmd::Gen { kind, n, deg, delta, eps, write } => {
            let g = input(generate_sse(*kind, *n, *deg, *delta, *eps, seed).map_err(Into::into))?;
            let mut reports = Vec::new();
            if let Some(set) = &g.planted {
                let e = expansion(&g, set)?;
                reports.push(CheckReport::new("graph.planted_expansion", Verdict::from_bool(e.value <= eps + 1e-12), e.value, *eps));
            }
            let j = GraphJson::from_graph(&g);
            if let Some(p) = write {
                write_json(p, &j)?;
            }
            Bundle { reports, result: serde_json::to_value(&j)? }
        }
        ReduceCmd::Sample { ctx, count } => {
            let l = input(load_context(ctx))?;
            let c = input(ReductionContext::new(&l.g, &l.theta, &l.graph, &l.params).map_err(Into::into))?;
            let mut rng = stream(seed, "cli-sample", 0);
            let draws: Vec<_> = (0..*count).map(|_| c.sample(&mut rng)).collect();
            Bundle::result(json!({ "samples": draws }))
        }
        ReduceCmd::Dictator { ctx } => {
            let l = input(load_context(ctx))?;
            let c = input(ReductionContext::new(&l.g, &l.theta, &l.graph, &l.params).map_err(Into::into))?;
            let f = input(dictator_assignment(&l.set, l.graph.n, c.big_r()).map_err(Into::into))?;
            let bias = analytic_bias(&f, c.mus(), l.g.vertex_weights()).unwrap_or(f64::NAN);
            let target = c.mean_bias();
            let trials = samples.unwrap_or(10_000) as usize;
            let pc = permutation_respect_check(&f, l.graph.n, c.big_r(), trials, &mut stream(seed, "cli-perm", 0));
            Bundle {
                reports: vec![
                    CheckReport::new("reduction.analytic_bias", Verdict::from_bool((bias - target).abs() <= 1e-12), bias, target),
                    CheckReport::new(
                        "reduction.permutation_respect",
                        Verdict::from_bool(pc.strict_violations == 0),
                        pc.strict_violations as f64,
                        0.0,
                    ),
                ],
                result: json!({ "permutation_check": pc, "set": l.set }),
            }
        }
        ReduceCmd::Accept { ctx, trials, slack } => {
            let l = input(load_context(ctx))?;
            let c = input(ReductionContext::new(&l.g, &l.theta, &l.graph, &l.params).map_err(Into::into))?;
            let f = input(dictator_assignment(&l.set, l.graph.n, c.big_r()).map_err(Into::into))?;
            let trials = samples.unwrap_or(*trials);
            let rep = acceptance_estimate(&c, &f, trials, seed, workers, *slack)?;
            Bundle { result: json!({ "acceptance": rep.value, "stderr": rep.stderr }), reports: vec![rep] }
        }
        ReduceCmd::Decouple { tables, theta, rho_sq, beta, mu, tau, budget, exact, big_r, amp, table_eta } => {
            let theta = &theta.0;
            let arity = theta.len().trailing_zeros() as usize;
            if theta.len() != 1 << arity || arity == 0 {
                return Err(InputError(anyhow!("--theta must list 2^r probabilities")).into());
            }
            let hs: Vec<FunctionTable> = match tables {
                Some(p) => {
                    let ts: Vec<TableJson> = input(read_json(p).map_err(Into::into))?;
                    input(ts.iter().map(TableJson::to_table).collect::<mucsp_core::Result<_>>().map_err(Into::into))?
                }
                None => input(
                    (0..arity as u64)
                        .map(|i| random_smooth_table(*big_r, *mu, *beta, *amp, *table_eta, seed, i))
                        .collect::<mucsp_core::Result<_>>()
                        .map_err(Into::into),
                )?,
            };
            let cfg = DecouplingConfig { rho_sq: *rho_sq, beta: *beta, mu: *mu, tau: *tau, budget: *budget };
            let mode = if *exact {
                DecouplingMode::Exact
            } else {
                DecouplingMode::Mc { samples: samples.unwrap_or(200_000), seed }
            };
            let rep = input(decoupling_check(&hs, theta, &cfg, mode).map_err(Into::into))?;
            Bundle { reports: vec![rep.to_check()], result: serde_json::to_value(&rep)? }
        }
        ReduceCmd::Mix { ctx, alpha, inner } => {
            let l = input(load_context(ctx))?;
            let c = input(ReductionContext::new(&l.g, &l.theta, &l.graph, &l.params).map_err(Into::into))?;
            let f = input(dictator_assignment(&l.set, l.graph.n, c.big_r()).map_err(Into::into))?;
            let rep = mixing_check(&c, &f, *alpha, samples.unwrap_or(10_000), *inner, seed, workers)?;
            Bundle { result: json!({ "probability": rep.value }), reports: vec![rep] }
        }
        ReduceCmd::DecodeStat { graph, r, eta, tau, mu, respect_trials } => {
            let g = input(load_graph(graph))?;
            let set = g.planted.clone().ok_or_else(|| InputError(anyhow!("decode-stat needs a planted set")))?;
            let d = input(Dictator::new(&set, g.n, *r).map_err(Into::into))?;
            let rep = input(
                influence_decode_stat(
                    |a: &[usize]| dictator_table(&d, a, *mu),
                    &g,
                    *r,
                    *eta,
                    *tau,
                    samples.unwrap_or(20_000),
                    *respect_trials,
                    seed,
                )
                .map_err(Into::into),
            )?;
            let verdict = Verdict::from_bool(rep.lists_within_bound);
            Bundle {
                reports: vec![CheckReport::new("reduction.decode_lists", verdict, rep.max_list as f64, rep.list_bound)
                    .with_mc(rep.stderr, seed, rep.samples)],
                result: serde_json::to_value(&rep)?,
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(bundle) => {
            let pass = all_pass(&bundle.reports);
            let out = json!({
                "command": std::env::args().skip(1).collect::<Vec<_>>().join(" "),
                "seed": cli.seed,
                "all_pass": pass,
                "reports": bundle.reports,
                "result": bundle.result,
            });
            let text = serde_json::to_string_pretty(&out).expect("serializable");
            if writeln!(std::io::stdout(), "{text}").is_err() {
                return ExitCode::from(2);
            }
            if let Some(p) = &cli.out {
                if let Err(e) = write_json(p, &out) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
