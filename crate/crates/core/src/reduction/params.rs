use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `R` the samplers handle (points are stored as 64-bit masks).
pub const SAMPLING_CAP: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    Derived,
    Manual,
}

/// Parameter ledger of the reduction. Quantities that underflow `f64` in the
/// derived regime (`γ`, `τ`, `ε`, `M`) are kept as natural logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub mode: ParamMode,
    pub mu: f64,
    pub r: usize,
    pub n_gap: usize,
    pub delta: f64,
    pub s: f64,
    pub beta: f64,
    pub rho: f64,
    /// Coupling rate of the `z` variables.
    pub rho_sq: f64,
    /// `1/(rβδ)` before rounding.
    pub r_exact: f64,
    /// `⌈r_exact⌉`, saturated at `u64::MAX`.
    pub big_r: u64,
    pub r_rounded: bool,
    pub nu: f64,
    pub ln_gamma: f64,
    pub eta: f64,
    pub ln_tau: f64,
    pub ln_epsilon: f64,
    pub ln_m: f64,
    pub kappa: f64,
    pub warnings: Vec<String>,
}

fn ceil_flag(x: f64) -> (u64, bool) {
    let c = x.ceil();
    let rounded = (x - x.round()).abs() > 1e-9 * x.max(1.0);
    let r = if c >= u64::MAX as f64 { u64::MAX } else if rounded { c as u64 } else { x.round() as u64 };
    (r, rounded)
}

/// Inputs for the manual (desk-scale) mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManualParams {
    pub mu: f64,
    pub r: usize,
    pub n_gap: usize,
    pub delta: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho_sq: f64,
    /// `R`; derived as `⌈1/(rβδ)⌉` when absent.
    #[serde(default)]
    pub big_r: Option<u64>,
    #[serde(default = "default_s")]
    pub s: f64,
    /// Influence threshold `τ`; derived from the other parameters when absent.
    #[serde(default)]
    pub tau: Option<f64>,
}

fn default_s() -> f64 {
    0.5
}

fn in_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} must lie in (0,1)")))
    }
}

impl ReductionParams {
    /// Every field from the ledger formulas (`log` taken as natural log).
    pub fn derived(mu: f64, r: usize, n_gap: usize, delta: f64, s: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 0.5) {
            return Err(Error::invalid(format!("μ = {mu} must lie in (0, 1/2)")));
        }
        if r == 0 || n_gap == 0 {
            return Err(Error::invalid("r and |V_gap| must be positive"));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::invalid(format!("δ = {delta} must lie in (0, 1/2]")));
        }
        in_open_unit("s", s)?;
        let rf = r as f64;
        let beta = mu.powf(4.0 * rf) / (n_gap as f64).powi(4);
        let rho = 1.0 / (4.0 * rf * rf * (1.0 / mu).ln());
        let r_exact = 1.0 / (rf * beta * delta);
        let (big_r, r_rounded) = ceil_flag(r_exact);
        let nu = s / 10f64.powi(r as i32);
        let ln_gamma = -10.0 * r_exact.ceil() * std::f64::consts::LN_2 + 2.0 * nu.ln();
        let eta = (beta * beta / rf).min(nu);
        let ln_tau = 100.0 * rf * rf * (-ln_gamma) / (eta * beta) * (s * mu / rf).ln();
        let mut p = Self::assemble(ParamMode::Derived, mu, r, n_gap, delta, s, beta, rho, rho * rho, r_exact, big_r, r_rounded, nu, ln_gamma, eta, ln_tau);
        if r_rounded {
            p.warnings.push(format!("R = 1/(rβδ) = {r_exact:e} rounded up to an integer"));
        }
        Ok(p)
    }

    pub fn manual(m: &ManualParams) -> Result<Self> {
        if m.r == 0 || m.n_gap == 0 {
            return Err(Error::invalid("r and |V_gap| must be positive"));
        }
        in_open_unit("μ", m.mu)?;
        in_open_unit("β", m.beta)?;
        in_open_unit("δ", m.delta)?;
        in_open_unit("η", m.eta)?;
        in_open_unit("s", m.s)?;
        if !(m.rho_sq > 0.0 && m.rho_sq <= 1.0) {
            return Err(Error::invalid(format!("ρ² = {} must lie in (0,1]", m.rho_sq)));
        }
        let rf = m.r as f64;
        let r_exact = 1.0 / (rf * m.beta * m.delta);
        let (big_r, r_rounded) = match m.big_r {
            Some(0) => return Err(Error::invalid("R must be positive")),
            Some(v) => (v, false),
            None => ceil_flag(r_exact),
        };
        let nu = m.s / 10f64.powi(m.r as i32);
        let ln_gamma = -10.0 * big_r as f64 * std::f64::consts::LN_2 + 2.0 * nu.ln();
        let ln_tau = match m.tau {
            Some(t) => {
                in_open_unit("τ", t)?;
                t.ln()
            }
            None => 100.0 * rf * rf * (-ln_gamma) / (m.eta * m.beta) * (m.s * m.mu / rf).ln(),
        };
        let rho = m.rho_sq.sqrt();
        let mut p = Self::assemble(ParamMode::Manual, m.mu, m.r, m.n_gap, m.delta, m.s, m.beta, rho, m.rho_sq, r_exact, big_r, r_rounded, nu, ln_gamma, m.eta, ln_tau);
        if r_rounded {
            p.warnings.push(format!("R = 1/(rβδ) = {r_exact} rounded up to {big_r}"));
        }
        Ok(p)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        mode: ParamMode,
        mu: f64,
        r: usize,
        n_gap: usize,
        delta: f64,
        s: f64,
        beta: f64,
        rho: f64,
        rho_sq: f64,
        r_exact: f64,
        big_r: u64,
        r_rounded: bool,
        nu: f64,
        ln_gamma: f64,
        eta: f64,
        ln_tau: f64,
    ) -> Self {
        let rf = r as f64;
        let ln_epsilon = 2.0 * beta.ln() + 4.0 * nu.ln() + 4.0 * eta.ln() + 6.0 * ln_tau
            - 24.0 * std::f64::consts::LN_2
            - 4.0 * rf.ln();
        let kappa = beta / (-ln_gamma);
        let mut warnings = Vec::new();
        if big_r > SAMPLING_CAP {
            warnings.push(format!("R = {big_r} exceeds the sampling cap {SAMPLING_CAP}; only the ledger is usable"));
        }
        Self {
            mode,
            mu,
            r,
            n_gap,
            delta,
            s,
            beta,
            rho,
            rho_sq,
            r_exact,
            big_r,
            r_rounded,
            nu,
            ln_gamma,
            eta,
            ln_tau,
            ln_epsilon,
            ln_m: -0.5 * ln_epsilon,
            kappa,
            warnings,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.ln_gamma.exp()
    }

    pub fn tau(&self) -> f64 {
        self.ln_tau.exp()
    }

    pub fn epsilon(&self) -> f64 {
        self.ln_epsilon.exp()
    }

    pub fn m(&self) -> f64 {
        self.ln_m.exp()
    }

    /// `R` as a sampler dimension, or an error past the cap.
    pub fn sampling_r(&self) -> Result<usize> {
        if self.big_r > SAMPLING_CAP {
            Err(Error::TooLarge(format!("R = {} exceeds the sampling cap {SAMPLING_CAP}", self.big_r)))
        } else {
            Ok(self.big_r as usize)
        }
    }
}
