//! Correlated Gaussians, r-ary halfspace stability `Λ_ρ`, Borell checks and the
//! normalized Hermite basis.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::harness::mc::{mc_run, mc_run_multi};
use crate::harness::report::{CheckReport, Verdict};
use crate::harness::rng::{derive_seed, Rng};

/// Worker count used by the Monte Carlo estimators here. Results do not depend on it.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Default `δ_0` for the folklore halfspace bound.
pub const DEFAULT_DELTA0: f64 = 1e-2;
/// Largest total degree accepted by [`hermite_eval`].
pub const HERMITE_DEGREE_CAP: usize = 8;

pub fn normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ⁻¹(δ)` by bisection on `[-39, 39]` and one Newton step.
pub fn normal_quantile(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("quantile needs δ in (0,1), got {delta}")));
    }
    let (mut lo, mut hi) = (-39.0f64, 39.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let d = normal_pdf(t);
    Ok(if d > 1e-300 { t - (normal_cdf(t) - delta) / d } else { t })
}

/// Threshold for a stability coordinate; `±∞` at the endpoints.
fn threshold(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("δ = {delta} outside [0,1]")));
    }
    Ok(if delta == 0.0 {
        f64::NEG_INFINITY
    } else if delta == 1.0 {
        f64::INFINITY
    } else {
        normal_quantile(delta)?
    })
}

/// `(1−ε)√(2 ln(1/δ)) ≤ |Φ⁻¹(δ)| ≤ (1+ε)√(2 ln(1/δ))`.
pub fn quantile_sandwich_holds(delta: f64, eps: f64) -> Result<bool> {
    let q = normal_quantile(delta)?.abs();
    let s = (2.0 * (1.0 / delta).ln()).sqrt();
    Ok((1.0 - eps) * s <= q && q <= (1.0 + eps) * s)
}

/// `Φ(Φ⁻¹(δ) + 1/√(4 ln(1/δ))) ≤ 2δ`.
pub fn cdf_shift_holds(delta: f64) -> Result<bool> {
    let t = normal_quantile(delta)?;
    let shift = 1.0 / (4.0 * (1.0 / delta).ln()).sqrt();
    Ok(normal_cdf(t + shift) <= 2.0 * delta)
}

/// `r` copies of a `dimension`-variate Gaussian, each `ρ`-correlated with a shared `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedSampler {
    pub dimension: usize,
    pub rho: f64,
    pub copies: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedDraw {
    pub base: Vec<f64>,
    pub copies: Vec<Vec<f64>>,
}

impl CorrelatedSampler {
    pub fn new(dimension: usize, rho: f64, copies: usize) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("ρ = {rho} outside [-1,1]")));
        }
        if dimension == 0 || copies == 0 {
            return Err(Error::invalid("sampler needs positive dimension and copy count"));
        }
        Ok(Self { dimension, rho, copies })
    }

    /// `g_i = ρ·g + √(1−ρ²)·ζ_i`.
    pub fn sample(&self, rng: &mut Rng) -> CorrelatedDraw {
        let base: Vec<f64> = (0..self.dimension).map(|_| rng.sample(StandardNormal)).collect();
        let c = (1.0 - self.rho * self.rho).max(0.0).sqrt();
        let copies = (0..self.copies)
            .map(|_| {
                base.iter()
                    .map(|g| {
                        let z: f64 = rng.sample(StandardNormal);
                        self.rho * g + c * z
                    })
                    .collect()
            })
            .collect();
        CorrelatedDraw { base, copies }
    }
}

pub fn sample_correlated(sampler: &CorrelatedSampler, rng: &mut Rng) -> CorrelatedDraw {
    sampler.sample(rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Monte Carlo `Λ_ρ(δ_1,…,δ_r) = Pr[∀i g_i ≤ Φ⁻¹(δ_i)]`.
pub fn lambda_estimate(rho: f64, deltas: &[f64], samples: u64, seed: u64) -> Result<StabilityEstimate> {
    if deltas.is_empty() {
        return Err(Error::invalid("Λ needs at least one δ"));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("ρ = {rho} outside [-1,1]")));
    }
    let t: Vec<f64> = deltas.iter().map(|&d| threshold(d)).collect::<Result<_>>()?;
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    let run = mc_run(
        "gauss.lambda",
        |rng| {
            let g: f64 = rng.sample(StandardNormal);
            let mut hit = true;
            for ti in &t {
                let z: f64 = rng.sample(StandardNormal);
                hit &= rho * g + c * z <= *ti;
            }
            if hit {
                1.0
            } else {
                0.0
            }
        },
        samples,
        seed,
        default_workers(),
    )?;
    Ok(StabilityEstimate { value: run.value, stderr: run.stderr, samples, seed })
}

/// Folklore bound `Λ_ρ(δ⃗) ≤ 2^r ∏δ_i`, asserted only when `δ_i ≤ δ_0` and
/// `ρ ≤ 1/(4r² ln(1/δ*))` with `δ* = min δ_i`.
pub fn lambda_bound_check(rho: f64, deltas: &[f64], samples: u64, seed: u64, delta0: f64) -> Result<CheckReport> {
    let est = lambda_estimate(rho, deltas, samples, seed)?;
    let r = deltas.len() as f64;
    let dstar = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_cap = 1.0 / (4.0 * r * r * (1.0 / dstar).ln());
    let deltas_ok = deltas.iter().all(|&d| d <= delta0);
    let rho_ok = rho.abs() <= rho_cap * (1.0 + 1e-12);
    let product: f64 = deltas.iter().product();
    let bound = 2f64.powi(deltas.len() as i32) * product;
    let holds = est.value <= bound + 3.0 * est.stderr;
    let verdict = if deltas_ok && rho_ok { Verdict::from_bool(holds) } else { Verdict::Info };
    Ok(CheckReport::new("gauss.lambda_bound", verdict, est.value, bound)
        .with_mc(est.stderr, seed, samples)
        .with_details(json!({
            "preconditions_hold": deltas_ok && rho_ok,
            "delta0": delta0,
            "rho_cap": rho_cap,
            "product": product,
            "bound_holds": holds,
        })))
}

/// Bounded test functions on `R^d` with exactly known Gaussian means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GaussianTestFn {
    /// `1[⟨a, x⟩ ≤ t]`.
    Halfspace { normal: Vec<f64>, threshold: f64 },
    /// `1[lo ≤ x ≤ hi]` coordinatewise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Constant { value: f64 },
}

impl GaussianTestFn {
    /// The halfspace `{x_1 ≤ Φ⁻¹(μ)}` of Gaussian volume `μ`.
    pub fn halfspace_of_volume(d: usize, mu: f64) -> Result<Self> {
        let mut normal = vec![0.0; d];
        normal[0] = 1.0;
        Ok(GaussianTestFn::Halfspace { normal, threshold: threshold(mu)? })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GaussianTestFn::Halfspace { normal, threshold } => {
                let s: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum();
                if s <= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            GaussianTestFn::Box { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            GaussianTestFn::Constant { value } => *value,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            GaussianTestFn::Halfspace { normal, threshold } => {
                let n = normal.iter().map(|a| a * a).sum::<f64>().sqrt();
                if n == 0.0 {
                    if *threshold >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal_cdf(threshold / n)
                }
            }
            GaussianTestFn::Box { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| (normal_cdf(*h) - normal_cdf(*l)).max(0.0)).product()
            }
            GaussianTestFn::Constant { value } => *value,
        }
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            GaussianTestFn::Halfspace { normal, .. } => Some(normal.len()),
            GaussianTestFn::Box { lo, hi } => Some(lo.len().max(hi.len())),
            GaussianTestFn::Constant { .. } => None,
        }
    }
}

/// Estimates `E ∏ f_i(g_i)` for `ρ`-correlated copies in `R^d` and compares with
/// `Λ_ρ(μ_1,…,μ_r)` at the exact means.
pub fn borell_check(functions: &[GaussianTestFn], d: usize, rho: f64, samples: u64, seed: u64) -> Result<CheckReport> {
    if functions.is_empty() {
        return Err(Error::invalid("Borell check needs at least one function"));
    }
    for f in functions {
        if let Some(k) = f.dimension() {
            if k != d {
                return Err(Error::Shape(format!("function of dimension {k} on R^{d}")));
            }
        }
        if let GaussianTestFn::Constant { value } = f {
            if !(0.0..=1.0).contains(value) {
                return Err(Error::invalid("Borell check needs [0,1]-valued functions"));
            }
        }
    }
    let sampler = CorrelatedSampler::new(d, rho, functions.len())?;
    let lhs = mc_run(
        "gauss.borell",
        |rng| {
            let draw = sampler.sample(rng);
            functions.iter().zip(&draw.copies).map(|(f, g)| f.eval(g)).product()
        },
        samples,
        seed,
        default_workers(),
    )?;
    let means: Vec<f64> = functions.iter().map(GaussianTestFn::mean).collect();
    let lambda = lambda_estimate(rho, &means, samples, derive_seed(seed, "borell.lambda", 0))?;
    let sigma = (lhs.stderr.powi(2) + lambda.stderr.powi(2)).sqrt();
    let holds = lhs.value <= lambda.value + 3.0 * sigma;
    Ok(CheckReport::new("gauss.borell", Verdict::from_bool(holds), lhs.value, lambda.value)
        .with_mc(sigma, seed, samples)
        .with_details(json!({
            "means": means,
            "lambda_stderr": lambda.stderr,
            "lhs_stderr": lhs.stderr,
            "gap": lambda.value - lhs.value,
        })))
}

fn hermite_1d(k: usize, x: f64) -> f64 {
    // He_{k+1} = x He_k − k He_{k−1}
    let (mut a, mut b) = (1.0, x);
    if k == 0 {
        return 1.0;
    }
    for j in 1..k {
        let c = x * b - j as f64 * a;
        a = b;
        b = c;
    }
    b
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Orthonormal Hermite polynomial `h_σ(x) = ∏_j He_{σ_j}(x_j)/√(σ_j!)`.
pub fn hermite_eval(sigma: &[usize], x: &[f64]) -> Result<f64> {
    if sigma.len() != x.len() {
        return Err(Error::Shape(format!("multi-index of length {} at a point of dimension {}", sigma.len(), x.len())));
    }
    let degree: usize = sigma.iter().sum();
    if degree > HERMITE_DEGREE_CAP {
        return Err(Error::TooLarge(format!("Hermite degree {degree} exceeds cap {HERMITE_DEGREE_CAP}")));
    }
    Ok(sigma.iter().zip(x).map(|(&k, &v)| hermite_1d(k, v) / factorial(k).sqrt()).product())
}

/// Monte Carlo `E[h_σ(x) h_τ(y)]` for `ρ`-correlated standard Gaussian vectors
/// `x, y`. Equals `ρ^{|σ|}·1[σ = τ]` with `|σ|` the total degree.
pub fn hermite_noise_moment(sigma: &[usize], tau: &[usize], rho: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    hermite_eval(sigma, &vec![0.0; sigma.len()])?;
    hermite_eval(tau, &vec![0.0; tau.len()])?;
    if sigma.len() != tau.len() {
        return Err(Error::Shape("multi-indices differ in length".into()));
    }
    let d = sigma.len();
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    let run = mc_run(
        "gauss.hermite",
        |rng| {
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            for k in 0..d {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                x[k] = a;
                y[k] = rho * a + c * b;
            }
            hermite_eval(sigma, &x).expect("checked") * hermite_eval(tau, &y).expect("checked")
        },
        samples,
        seed,
        default_workers(),
    )?;
    Ok((run.value, run.stderr))
}

/// Monte Carlo covariance of `(F_i(ζ_i), F_j(ζ_j))` for per-coordinate
/// `ρ`-correlated `ζ_i, ζ_j ∈ R^R`. Returns `(cov, stderr, E F_i, E F_j)`.
pub fn correlated_covariance<F, G>(fi: F, fj: G, dim: usize, rho: f64, samples: u64, seed: u64) -> Result<(f64, f64, f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("ρ = {rho} outside [-1,1]")));
    }
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    let m = mc_run_multi(
        "gauss.cov",
        3,
        |rng, out| {
            let mut a = vec![0.0; dim];
            let mut b = vec![0.0; dim];
            for k in 0..dim {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                a[k] = x;
                b[k] = rho * x + c * y;
            }
            let (u, v) = (fi(&a), fj(&b));
            out[0] = u * v;
            out[1] = u;
            out[2] = v;
        },
        samples,
        seed,
        default_workers(),
    )?;
    let (e_uv, e_u, e_v) = (m.means[0], m.means[1], m.means[2]);
    let se = m.linear_stderr(&[1.0, -e_v, -e_u]);
    Ok((e_uv - e_u * e_v, se, e_u, e_v))
}
