use ppt_core::bounds::BoundResult;
use ppt_core::{Estimate, ExtendedReal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spec::ExperimentSpec;

/// One named output of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResult {
    pub name: String,
    #[serde(flatten)]
    pub value: ResultValue,
}

/// The value of a result entry, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResultValue {
    Bound(BoundResult),
    Estimate(Estimate),
    Scalar {
        value: f64,
    },
    Extended {
        value: ExtendedReal,
    },
    /// An assertion of a `verify` scenario.
    Check {
        passed: bool,
        detail: String,
    },
    Data {
        value: Value,
    },
}

/// Output of [`crate::run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec_echo: ExperimentSpec,
    pub results: Vec<NamedResult>,
    /// Wall-clock time, recorded only on request so reports stay
    /// byte-identical across runs.
    pub wall_time_ms: Option<u64>,
    pub library_version: String,
}

impl Report {
    /// Every `check` entry passed. Vacuously true without checks.
    pub fn passed(&self) -> bool {
        self.checks().all(|(_, ok, _)| ok)
    }

    /// `(name, passed, detail)` of every `check` entry.
    pub fn checks(&self) -> impl Iterator<Item = (&str, bool, &str)> {
        self.results.iter().filter_map(|r| match &r.value {
            ResultValue::Check { passed, detail } => Some((r.name.as_str(), *passed, detail.as_str())),
            _ => None,
        })
    }

    /// The results section alone, as compact JSON. Identical specs give
    /// identical bytes.
    pub fn results_json(&self) -> String {
        serde_json::to_string(&self.results).expect("results serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn get(&self, name: &str) -> Option<&ResultValue> {
        self.results.iter().find(|r| r.name == name).map(|r| &r.value)
    }
}

/// Accumulates result entries in order.
#[derive(Debug, Default)]
pub(crate) struct Results(pub Vec<NamedResult>);

impl Results {
    pub fn push(&mut self, name: impl Into<String>, value: ResultValue) {
        self.0.push(NamedResult {
            name: name.into(),
            value,
        });
    }

    pub fn bound(&mut self, name: &str, b: BoundResult) {
        self.push(name, ResultValue::Bound(b));
    }

    pub fn estimate(&mut self, name: &str, e: Estimate) {
        self.push(name, ResultValue::Estimate(e));
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.push(name, ResultValue::Scalar { value });
    }

    pub fn data<T: Serialize>(&mut self, name: &str, value: &T) {
        let value = serde_json::to_value(value).expect("report data serializes");
        self.push(name, ResultValue::Data { value });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.push(
            name,
            ResultValue::Check {
                passed,
                detail: detail.into(),
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_entries_round_trip() {
        let mut r = Results::default();
        r.scalar("x", 0.1);
        r.check("ok", true, "fine");
        r.push(
            "inf",
            ResultValue::Extended {
                value: ExtendedReal::Infinity,
            },
        );
        let json = serde_json::to_string(&r.0).unwrap();
        assert!(json.contains(r#"{"name":"x","type":"scalar","value":0.1}"#), "{json}");
        assert!(json.contains(r#""value":"inf""#));
        let back: Vec<NamedResult> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r.0);
    }
}
