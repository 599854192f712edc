use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::averaging::{coupled_coordinate_law, coupled_product_expectation, omega_noise};
use crate::error::{Error, Result};
use crate::harness::rng::stream;
use crate::harness::{CheckReport, Verdict};
use crate::probspace::{fourier_expand, FunctionTable, TableSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecouplingMode {
    Exact,
    Mc { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingConfig {
    pub rho_sq: f64,
    pub beta: f64,
    /// Global bias `μ` in the additive `μ^r` term.
    pub mu: f64,
    /// Influence threshold separating excused violations.
    pub tau: f64,
    #[serde(default)]
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub lhs: f64,
    /// `E_{x∼θ_e^R} ∏ h̄_i(x_i)`.
    pub product: f64,
    /// `2^r·product + μ^r`.
    pub rhs: f64,
    pub stderr: f64,
    pub max_influence: f64,
    pub holds: bool,
    pub influence_above_tau: bool,
}

impl DecouplingReport {
    pub fn to_check(&self) -> CheckReport {
        let verdict = if self.holds {
            Verdict::Pass
        } else if self.influence_above_tau {
            Verdict::Info
        } else {
            Verdict::Fail
        };
        CheckReport::new("reduction.decoupling", verdict, self.lhs, self.rhs).with_details(json!({
            "product": self.product,
            "max_influence": self.max_influence,
            "stderr": self.stderr,
        }))
    }
}

fn product_expectation(theta_e: &[f64], bars: &[FunctionTable]) -> Result<f64> {
    let arity = bars.len();
    let r = bars[0].space().coordinate_count();
    let states = theta_e.len();
    if states.checked_pow(r as u32).is_none_or(|t| t > crate::harness::ORACLE_CAP) {
        return Err(Error::TooLarge("θ_e^R enumeration exceeds the oracle cap".into()));
    }
    let mut idx = vec![0usize; r];
    let mut acc = 0.0;
    'outer: loop {
        let mut w = 1.0;
        let mut xs = vec![0usize; arity];
        for (k, &s) in idx.iter().enumerate() {
            w *= theta_e[s];
            for (i, x) in xs.iter_mut().enumerate() {
                *x |= (s >> i & 1) << k;
            }
        }
        if w > 0.0 {
            acc += w * bars.iter().zip(&xs).map(|(h, &x)| h.value(x)).product::<f64>();
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

fn draw(law: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (s, p) in law.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    law.len() - 1
}

/// Compares `E_{D_e^R} ∏ h_i` with `2^r·E_{θ_e^R} ∏ h̄_i + μ^r`.
pub fn decoupling_check(hs: &[FunctionTable], theta_e: &[f64], cfg: &DecouplingConfig, mode: DecouplingMode) -> Result<DecouplingReport> {
    let arity = hs.len();
    if arity == 0 || theta_e.len() != 1 << arity {
        return Err(Error::Shape(format!("{} tables against θ_e of length {}", arity, theta_e.len())));
    }
    let r = hs[0].space().coordinate_count();
    if hs.iter().any(|h| !h.space().is_omega() || h.space().coordinate_count() != r) {
        return Err(Error::Shape("decoupling needs Ω^R tables of one dimension".into()));
    }
    if hs.iter().any(|h| !h.values_in_unit(1e-9)) {
        return Err(Error::invalid("decoupling tables must take values in [0,1]"));
    }
    let law = coupled_coordinate_law(theta_e, cfg.rho_sq, cfg.beta)?;
    let bars: Vec<FunctionTable> = hs.iter().map(|h| h.average_out_leaks()).collect::<Result<_>>()?;
    let max_influence = hs
        .iter()
        .map(|h| fourier_expand(h).map(|t| t.max_influence()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let (lhs, product, stderr) = match mode {
        DecouplingMode::Exact => {
            if r > 3 || arity > 3 {
                return Err(Error::TooLarge("exact decoupling needs R ≤ 3 and r ≤ 3".into()));
            }
            let refs: Vec<&FunctionTable> = hs.iter().collect();
            (coupled_product_expectation(&law, &refs)?, product_expectation(theta_e, &bars)?, 0.0)
        }
        DecouplingMode::Mc { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo decoupling needs samples"));
            }
            let mut rng = stream(seed, "decoupling", 0);
            let (mut s1, mut s1q, mut s2, mut s2q) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..samples {
                let mut xs = vec![0usize; arity];
                let mut zs = vec![0usize; arity];
                let mut ys = vec![0usize; arity];
                for k in 0..r {
                    let s = draw(&law, rng.random());
                    let t = draw(theta_e, rng.random());
                    for i in 0..arity {
                        xs[i] |= (s >> i & 1) << k;
                        zs[i] |= (s >> (arity + i) & 1) << k;
                        ys[i] |= (t >> i & 1) << k;
                    }
                }
                let a: f64 = hs.iter().enumerate().map(|(i, h)| h.omega_value(xs[i], zs[i])).product();
                let b: f64 = bars.iter().enumerate().map(|(i, h)| h.value(ys[i])).product();
                s1 += a;
                s1q += a * a;
                s2 += b;
                s2q += b * b;
            }
            let n = samples as f64;
            let (m1, m2) = (s1 / n, s2 / n);
            let v1 = (s1q / n - m1 * m1).max(0.0) / n;
            let v2 = (s2q / n - m2 * m2).max(0.0) / n;
            let scale = 2f64.powi(arity as i32);
            (m1, m2, (v1 + scale * scale * v2).sqrt())
        }
    };
    let rhs = 2f64.powi(arity as i32) * product + cfg.mu.powi(arity as i32);
    Ok(DecouplingReport {
        lhs,
        product,
        rhs,
        stderr,
        max_influence,
        holds: lhs <= rhs + cfg.budget + 3.0 * stderr,
        influence_above_tau: max_influence > cfg.tau,
    })
}

/// `T^{(Ω)}_{1−η}(c + t·(u − c))` for a uniform random table `u` and a random level `c`.
pub fn random_smooth_table(r: usize, mu: f64, beta: f64, t: f64, eta: f64, seed: u64, index: u64) -> Result<FunctionTable> {
    let mut rng = stream(seed, "smooth-table", index);
    let space = TableSpace::omega_uniform(r, mu, beta)?;
    let c: f64 = rng.random();
    let values = (0..space.domain_size()).map(|_| c + t * (rng.random::<f64>() - c)).collect();
    omega_noise(&FunctionTable::new_bounded(space, values)?, eta)
}
