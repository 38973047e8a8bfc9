use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metric {
    pub label: String,
    pub n: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub n_values: Vec<usize>,
    pub metrics: Vec<Metric>,
    pub extrapolated: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    /// Order of the `1/n` correction assumed by the extrapolation.
    pub fit_order: Option<u32>,
    pub verdict: Verdict,
    pub engines: Vec<String>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(check: &str, n_values: &[usize], engines: &[&str]) -> Self {
        VerificationReport {
            check: check.to_string(),
            n_values: n_values.to_vec(),
            metrics: Vec::new(),
            extrapolated: None,
            target: None,
            tolerance: None,
            fit_order: None,
            verdict: Verdict::Pass,
            engines: engines.iter().map(|e| e.to_string()).collect(),
            notes: Vec::new(),
        }
    }

    pub fn metric(&mut self, label: impl Into<String>, n: Option<usize>, value: f64) {
        self.metrics.push(Metric {
            label: label.into(),
            n,
            value,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Sets pass or fail; informational reports stay informational.
    pub fn decide(&mut self, ok: bool) {
        if self.verdict != Verdict::Informational {
            self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        }
    }

    pub fn make_informational(&mut self) {
        self.verdict = Verdict::Informational;
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn values(&self, label: &str) -> Vec<f64> {
        self.metrics
            .iter()
            .filter(|m| m.label == label)
            .map(|m| m.value)
            .collect()
    }
}
