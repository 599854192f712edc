//! Exact expectations by enumeration.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::FunctionTable;

/// Largest support the oracle will enumerate.
pub const ORACLE_CAP: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub enumeration_size: usize,
    pub method: String,
}

/// `E_ω[f(ω)]` under the table's product measure.
pub fn exact_expectation(f: &FunctionTable) -> Result<OracleResult> {
    let n = f.space().domain_size();
    if n > ORACLE_CAP {
        return Err(Error::TooLarge(format!("{n} points exceeds the oracle cap")));
    }
    let value = (0..n).map(|w| f.space().point_probability(w) * f.value(w)).sum();
    Ok(OracleResult { value, enumeration_size: n, method: "table-enumeration".into() })
}

/// `Σ_k w_k v_k` over an explicit weighted support.
pub fn exact_weighted(support: &[(f64, f64)]) -> Result<OracleResult> {
    if support.len() > ORACLE_CAP {
        return Err(Error::TooLarge(format!("{} points exceeds the oracle cap", support.len())));
    }
    Ok(OracleResult {
        value: support.iter().map(|(w, v)| w * v).sum(),
        enumeration_size: support.len(),
        method: "weighted-support".into(),
    })
}

/// A finitely supported distribution, built by pushing forward through random steps.
#[derive(Clone, Debug)]
pub struct FiniteDist<T: Eq + Hash + Clone> {
    atoms: HashMap<T, f64>,
}

impl<T: Eq + Hash + Clone> FiniteDist<T> {
    pub fn point(t: T) -> Self {
        let mut atoms = HashMap::new();
        atoms.insert(t, 1.0);
        Self { atoms }
    }

    pub fn from_weighted(items: impl IntoIterator<Item = (T, f64)>) -> Self {
        let mut atoms = HashMap::new();
        for (t, w) in items {
            if w != 0.0 {
                *atoms.entry(t).or_insert(0.0) += w;
            }
        }
        Self { atoms }
    }

    /// Replaces each atom by the weighted outcomes of `step`.
    pub fn bind<U: Eq + Hash + Clone>(&self, step: impl Fn(&T) -> Vec<(U, f64)>) -> FiniteDist<U> {
        let mut atoms = HashMap::new();
        for (t, w) in &self.atoms {
            for (u, p) in step(t) {
                if p != 0.0 {
                    *atoms.entry(u).or_insert(0.0) += w * p;
                }
            }
        }
        FiniteDist { atoms }
    }

    pub fn map<U: Eq + Hash + Clone>(&self, f: impl Fn(&T) -> U) -> FiniteDist<U> {
        self.bind(|t| vec![(f(t), 1.0)])
    }

    pub fn expect(&self, f: impl Fn(&T) -> f64) -> f64 {
        self.atoms.iter().map(|(t, w)| w * f(t)).sum()
    }

    pub fn total(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&T, f64)> {
        self.atoms.iter().map(|(t, w)| (t, *w))
    }
}
