//! Gaussian-projection rounding of a vector solution through per-vertex rounding functions.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::csp::{assignment_value, predicate_multilinear, relative_weight, Assignment, ConstraintHypergraph};
use crate::error::{Error, Result};
use crate::gaussian::correlated_covariance;
use crate::harness::rng::{stream, Rng};
use crate::harness::{mc_run, CheckReport, Verdict};
use crate::probspace::{fourier_expand, multilinear_extend, noise_apply, FunctionTable, MultilinearPoly, NoiseMode, TableSpace};
use crate::pseudodist::{LocalDistributionFamily, VectorSolution};

/// Bias agreement required between `g_i`'s space and the vector solution.
pub const BIAS_MATCH_TOL: f64 = 1e-9;

/// Marginals this close to 0 or 1 mark a fixed (conditioned) vertex.
pub const DEGENERATE_BIAS: f64 = 1e-12;

pub fn clip(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct RoundingInput {
    pub instance: ConstraintHypergraph,
    /// `g_i` on `{0,1}^R_{μ_i}`; any bias is accepted for fixed vertices.
    pub functions: Vec<FunctionTable>,
    /// `T^{(μ_i)}_{1−η} g_i`.
    pub noisy: Vec<FunctionTable>,
    /// `H_i`, the multilinear representation of `T^{(μ_i)}_{1−η} g_i`.
    pub polys: Vec<MultilinearPoly>,
    pub vectors: VectorSolution,
    pub eta: f64,
    pub tau: f64,
    pub nu: f64,
    pub mu: f64,
    /// `E_{i∼w̃} E[g_i]`.
    pub functional_bias: f64,
    /// `max_i max_j Inf_j[T g_i]`.
    pub max_influence: f64,
    /// `Pr_{i∼w̃}[max_j Inf_j[T g_i] > τ]`.
    pub heavy_vertex_mass: f64,
}

impl RoundingInput {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance: &ConstraintHypergraph,
        functions: Vec<FunctionTable>,
        vectors: &VectorSolution,
        eta: f64,
        tau: f64,
        nu: f64,
        mu: f64,
    ) -> Result<Self> {
        let n = instance.vertex_count();
        if functions.len() != n || vectors.vertex_count() != n {
            return Err(Error::Shape(format!(
                "{} functions and {} vectors for {n} vertices",
                functions.len(),
                vectors.vertex_count()
            )));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("η = {eta} outside [0,1]")));
        }
        let r = functions.first().map(|g| g.space().coordinate_count()).unwrap_or(0);
        let mut noisy = Vec::with_capacity(n);
        let mut polys = Vec::with_capacity(n);
        let mut influences = Vec::with_capacity(n);
        for (i, g) in functions.iter().enumerate() {
            let TableSpace::Cube(space) = g.space() else {
                return Err(Error::Shape(format!("g_{i} must be a cube table")));
            };
            if space.coordinate_count() != r {
                return Err(Error::Shape(format!("g_{i} has {} coordinates, expected {r}", space.coordinate_count())));
            }
            if !g.values_in_unit(1e-9) {
                return Err(Error::invalid(format!("g_{i} leaves [0,1]")));
            }
            let mu_i = vectors.mu[i];
            if mu_i.min(1.0 - mu_i) < DEGENERATE_BIAS {
                // Fixed vertex: T g_i resamples to the corner itself, so H_i is the corner value.
                if vectors.w_norm(i) > 1e-6 {
                    return Err(Error::invalid(format!("vertex {i} has degenerate bias but a nonzero vector")));
                }
                let corner = if mu_i > 0.5 { (1usize << r) - 1 } else { 0 };
                let c = g.value(corner);
                influences.push(0.0);
                polys.push(MultilinearPoly::constant(r, c));
                noisy.push(FunctionTable::constant(g.space().clone(), c)?);
                continue;
            }
            if space.biases().iter().any(|b| (b - mu_i).abs() > BIAS_MATCH_TOL) {
                return Err(Error::invalid(format!("g_{i} bias differs from μ_{i} = {}", vectors.mu[i])));
            }
            let t = noise_apply(&fourier_expand(g)?, 1.0 - eta, NoiseMode::PerSpace)?;
            influences.push(t.max_influence());
            polys.push(multilinear_extend(&t)?);
            noisy.push(t.evaluate());
        }
        let w = normalized_weights(instance);
        let functional_bias = functions.iter().zip(&w).map(|(g, wi)| wi * g.expectation()).sum();
        let heavy_vertex_mass = influences.iter().zip(&w).filter(|(v, _)| **v > tau).map(|(_, wi)| wi).sum();
        Ok(Self {
            instance: instance.clone(),
            functions,
            noisy,
            polys,
            vectors: vectors.clone(),
            eta,
            tau,
            nu,
            mu,
            functional_bias,
            max_influence: influences.into_iter().fold(0.0, f64::max),
            heavy_vertex_mass,
        })
    }

    pub fn dimension(&self) -> usize {
        self.polys.first().map(|p| p.variables()).unwrap_or(0)
    }
}

fn normalized_weights(g: &ConstraintHypergraph) -> Vec<f64> {
    let w = g.vertex_weights();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingOutcome {
    pub p: Vec<f64>,
    pub sigma: Assignment,
    pub bias: f64,
    pub value: f64,
    pub seed: u64,
}

/// Steps 1–3 for one shared Gaussian matrix drawn from `rng`: `p_i = clip(H_i(μ_i·1 + G·w_i))`.
pub fn rounding_probabilities(input: &RoundingInput, rng: &mut Rng) -> Vec<f64> {
    let r = input.dimension();
    let d = input.vectors.dim;
    let g: Vec<f64> = (0..r * d).map(|_| rng.sample(StandardNormal)).collect();
    input
        .polys
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let w = &input.vectors.w[i];
            let q: Vec<f64> = (0..r)
                .map(|j| input.vectors.mu[i] + g[j * d..(j + 1) * d].iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            clip(h.evaluate(&q).expect("dimension checked at construction"))
        })
        .collect()
}

fn round_with(input: &RoundingInput, rng: &mut Rng, seed: u64) -> Result<RoundingOutcome> {
    let p = rounding_probabilities(input, rng);
    let sigma = Assignment::new(p.iter().map(|&pi| (rng.random::<f64>() < pi) as u8).collect());
    Ok(RoundingOutcome {
        bias: relative_weight(&input.instance, &sigma)?,
        value: assignment_value(&input.instance, &sigma)?,
        p,
        sigma,
        seed,
    })
}

pub fn round_once(input: &RoundingInput, seed: u64) -> Result<RoundingOutcome> {
    let d = input.vectors.w.first().map(|w| w.len()).unwrap_or(0);
    if d != input.vectors.dim {
        return Err(Error::Shape(format!("vector dimension {d} differs from declared {}", input.vectors.dim)));
    }
    round_with(input, &mut stream(seed, "round", 0), seed)
}

/// `F(ζ) = clip(H(μ + ‖w‖·ζ))`, the rounding function of one vertex in normalized coordinates.
pub fn normalized_rounding_fn<'a>(h: &'a MultilinearPoly, mu: f64, w_norm: f64) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |z: &[f64]| {
        let q: Vec<f64> = z.iter().map(|v| mu + w_norm * v).collect();
        clip(h.evaluate(&q).unwrap_or(0.0))
    }
}

/// `|Ê F_iF_j − Ê F_i Ê F_j| ≤ |ρ_ij| + 3σ` for `ρ_ij`-correlated standard Gaussian inputs.
pub fn covariance_bound_check<F, G>(fi: F, fj: G, dim: usize, rho: f64, samples: u64, seed: u64) -> Result<CheckReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let (cov, se, ei, ej) = correlated_covariance(fi, fj, dim, rho, samples, seed)?;
    let bound = rho.abs() + 3.0 * se;
    Ok(CheckReport::new("rounding.covariance", Verdict::from_bool(cov.abs() <= bound), cov.abs(), bound)
        .with_mc(se, seed, samples)
        .with_details(json!({ "rho": rho, "mean_i": ei, "mean_j": ej })))
}

/// `Var_G[E_{i∼w̃} p_i] ≤ E_{i,j∼w̃}|ρ_ij| + 3σ`, plus the deviation and Bernoulli windows
/// `μ√γ` and `√γ` (reported only).
pub fn bias_concentration_check(input: &RoundingInput, gamma: f64, trials: u64, seed: u64) -> Result<CheckReport> {
    if trials < 2 {
        return Err(Error::invalid("bias concentration needs at least two rounds"));
    }
    let w = normalized_weights(&input.instance);
    let rounds: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, "round-bias", t);
            let p = rounding_probabilities(input, &mut rng);
            let mp: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
            let ms: f64 = p.iter().zip(&w).map(|(pi, wi)| wi * (rng.random::<f64>() < *pi) as u8 as f64).sum();
            (mp, ms)
        })
        .collect();
    let n = trials as f64;
    let mean = rounds.iter().map(|r| r.0).sum::<f64>() / n;
    let c2 = rounds.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / n;
    let c4 = rounds.iter().map(|r| (r.0 - mean).powi(4)).sum::<f64>() / n;
    let var = c2 * n / (n - 1.0);
    let se = ((c4 - c2 * c2).max(0.0) / n).sqrt();
    let bound_main = input.vectors.avg_abs_rho(&w);
    let bound = bound_main + 3.0 * se;
    let sg = gamma.max(0.0).sqrt();
    let window = input.mu * sg;
    let deviating = rounds.iter().filter(|r| (r.0 - mean).abs() >= window).count() as f64 / n;
    let bernoulli_gap = rounds.iter().map(|r| (r.1 - r.0).abs()).sum::<f64>() / n;
    Ok(CheckReport::new("rounding.bias_concentration", Verdict::from_bool(var <= bound), var, bound)
        .with_mc(se, seed, trials)
        .with_details(json!({
            "mean_p": mean,
            "avg_abs_rho": bound_main,
            "gamma": gamma,
            "deviation_window": window,
            "deviating_fraction": deviating,
            "sqrt_gamma": sg,
            "mean_abs_sigma_minus_p": bernoulli_gap,
        })))
}

/// `Σ_a E_e E_{x∼θ_e^R} ∏_i T g^{(a)}_i(x_i)`: the dictatorship-test value of the `g_i`.
pub fn test_value(input: &RoundingInput, theta: &LocalDistributionFamily) -> Result<f64> {
    let g = &input.instance;
    let psi = predicate_multilinear(g.predicate());
    let r = input.dimension();
    let total_w: f64 = g.edges().iter().map(|e| e.weight).sum();
    let mut acc = 0.0;
    for e in g.edges() {
        let local = theta.local(&e.vs)?;
        let pos: Vec<usize> = e.vs.iter().map(|v| local.position(*v).expect("edge vertex in local")).collect();
        let arity = e.vs.len();
        let states = 1usize << local.subset.len();
        if states.checked_pow(r as u32).is_none_or(|t| t > crate::harness::ORACLE_CAP) {
            return Err(Error::TooLarge("θ_e^R enumeration exceeds the oracle cap".into()));
        }
        let mut idx = vec![0usize; r];
        let mut sum = 0.0;
        'outer: loop {
            let mut wgt = 1.0;
            let mut xs = vec![0usize; arity];
            for (k, &s) in idx.iter().enumerate() {
                wgt *= local.probs[s];
                for (j, x) in xs.iter_mut().enumerate() {
                    *x |= (s >> pos[j] & 1) << k;
                }
            }
            if wgt > 0.0 {
                let vals: Vec<f64> = xs.iter().zip(&e.vs).map(|(&x, &v)| input.noisy[v].value(x)).collect();
                sum += wgt * psi.evaluate(&vals)?;
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
        acc += e.weight * sum;
    }
    Ok(acc / total_w)
}

/// Monte Carlo rounded value against `test_value − budget − 3σ`.
pub fn value_check(
    input: &RoundingInput,
    theta: &LocalDistributionFamily,
    trials: u64,
    seed: u64,
    budget: f64,
    workers: usize,
) -> Result<CheckReport> {
    let exact = test_value(input, theta)?;
    let run = mc_run(
        "round-value",
        |rng| {
            let p = rounding_probabilities(input, rng);
            let sigma = Assignment::new(p.iter().map(|&pi| (rng.random::<f64>() < pi) as u8).collect());
            assignment_value(&input.instance, &sigma).unwrap_or(0.0)
        },
        trials,
        seed,
        workers,
    )?;
    let bound = exact - budget - 3.0 * run.stderr;
    Ok(CheckReport::new("rounding.value", Verdict::from_bool(run.value >= bound), run.value, bound)
        .with_mc(run.stderr, seed, trials)
        .with_details(json!({
            "test_value": exact,
            "budget": budget,
            "gap": exact - run.value,
            "max_influence": input.max_influence,
            "heavy_vertex_mass": input.heavy_vertex_mass,
            "tau": input.tau,
            "nu": input.nu,
        })))
}
