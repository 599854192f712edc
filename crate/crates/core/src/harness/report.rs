use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Preconditions not met; reported but not asserted.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

/// One bound check. `value` is compared against `bound`; `details` carries
/// check-specific numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub stage: String,
    pub verdict: Verdict,
    pub value: f64,
    pub bound: f64,
    pub stderr: f64,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl CheckReport {
    pub fn new(stage: impl Into<String>, verdict: Verdict, value: f64, bound: f64) -> Self {
        Self {
            stage: stage.into(),
            verdict,
            value,
            bound,
            stderr: 0.0,
            seed: None,
            samples: None,
            details: Value::Null,
        }
    }

    pub fn with_mc(mut self, stderr: f64, seed: u64, samples: u64) -> Self {
        self.stderr = stderr;
        self.seed = Some(seed);
        self.samples = Some(samples);
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// True when no report in the bundle failed.
pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| !r.verdict.is_fail())
}
