//! Structured verdicts shared by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::seqcheck::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    PassHeuristic,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassHeuristic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PassHeuristic => "pass-heuristic",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A concrete index at which a condition was violated or found undecided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: String,
    /// Difference order, absent for single-index conditions.
    pub s: Option<usize>,
    pub k: usize,
    pub value: f64,
    /// Exact value as "num/den" when computed in rational mode.
    pub exact: Option<String>,
    /// Grid point (x, u or y) for conditions checked on a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    pub condition: String,
    /// Largest ratio Σ|terms| / |result| seen.
    pub max_amplification: f64,
    /// Cells whose sign could not be resolved above the noise estimate.
    pub unresolved: usize,
    pub precision_loss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub condition: String,
    pub window: (usize, usize),
    pub last: f64,
    pub threshold: f64,
    /// Least-squares slope of log|r_k| against log k over the window.
    pub slope: Option<f64>,
    /// Slope between the last two points.
    pub tail_slope: Option<f64>,
    pub monotone: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cancellation: Vec<Cancellation>,
    pub trends: Vec<Trend>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub max_depth: usize,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdicts: BTreeMap<String, Verdict>,
    pub witnesses: Vec<Witness>,
    pub diagnostics: Diagnostics,
    pub truncation: Truncation,
}

/// Aggregate status used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    AllPass,
    AnyFail,
    Inconclusive,
}

impl CheckReport {
    pub fn new(max_depth: usize, mode: Mode) -> Self {
        CheckReport {
            verdicts: BTreeMap::new(),
            witnesses: Vec::new(),
            diagnostics: Diagnostics::default(),
            truncation: Truncation { max_depth, mode },
        }
    }

    pub fn verdict(&self, condition: &str) -> Option<Verdict> {
        self.verdicts.get(condition).copied()
    }

    pub fn set(&mut self, condition: &str, verdict: Verdict) {
        self.verdicts.insert(condition.to_string(), verdict);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.diagnostics.metrics.insert(name.to_string(), value);
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.diagnostics.notes.push(text.into());
    }

    pub fn witnesses_for<'a>(&'a self, condition: &'a str) -> impl Iterator<Item = &'a Witness> + 'a {
        self.witnesses.iter().filter(move |w| w.condition == condition)
    }

    /// Folds another report in; truncation keeps the smaller depth.
    pub fn merge(&mut self, other: CheckReport) {
        self.verdicts.extend(other.verdicts);
        self.witnesses.extend(other.witnesses);
        self.diagnostics.cancellation.extend(other.diagnostics.cancellation);
        self.diagnostics.trends.extend(other.diagnostics.trends);
        self.diagnostics.metrics.extend(other.diagnostics.metrics);
        self.diagnostics.notes.extend(other.diagnostics.notes);
        self.truncation.max_depth = self.truncation.max_depth.min(other.truncation.max_depth);
    }

    pub fn outcome(&self) -> Outcome {
        if self.verdicts.values().any(|v| *v == Verdict::Fail) {
            Outcome::AnyFail
        } else if self.verdicts.values().any(|v| *v == Verdict::Inconclusive) {
            Outcome::Inconclusive
        } else {
            Outcome::AllPass
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_priority() {
        let mut r = CheckReport::new(10, Mode::Exact);
        r.set("a", Verdict::Pass);
        r.set("b", Verdict::PassHeuristic);
        assert_eq!(r.outcome(), Outcome::AllPass);
        r.set("c", Verdict::Inconclusive);
        assert_eq!(r.outcome(), Outcome::Inconclusive);
        r.set("d", Verdict::Fail);
        assert_eq!(r.outcome(), Outcome::AnyFail);
    }

    #[test]
    fn verdict_names() {
        let s = serde_json::to_string(&Verdict::PassHeuristic).unwrap();
        assert_eq!(s, "\"pass-heuristic\"");
        assert_eq!(Verdict::Inconclusive.as_str(), "inconclusive");
    }

    #[test]
    fn json_round_trip() {
        let mut r = CheckReport::new(7, Mode::Float);
        r.set("ems.i", Verdict::Fail);
        r.witnesses.push(Witness {
            condition: "ems.i".into(),
            s: Some(2),
            k: 3,
            value: -0.1,
            exact: Some("-1/10".into()),
            at: None,
        });
        r.metric("x", 0.1 + 0.2);
        let back = CheckReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
