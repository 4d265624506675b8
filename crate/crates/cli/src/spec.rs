//! Experiment specifications and their kind-specific parameters.

use std::fmt;

use ppt_core::concentration::CountRelation;
use ppt_core::simulate::{Mixer, TimeChangeKind};
use ppt_core::transport::Metric;
use ppt_core::{Density, IntensityMeasure, SeedSpec, Window};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::expr::{parse_density_expr, Expr};

/// What an experiment does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Distance,
    Sample,
    Bound,
    Estimate,
    Tail,
    Isoperimetry,
    Verify,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

/// One experiment: a kind, its parameters, and the randomness it may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub seed: SeedSpec,
    #[serde(default = "default_samples")]
    pub n_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

fn default_samples() -> u64 {
    10_000
}

/// Deserializes `value` with the failing field path prefixed by `prefix`.
pub(crate) fn from_value_at<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        CliError::spec(path, e.into_inner().to_string())
    })
}

impl ExperimentSpec {
    /// Parses and validates a JSON spec. Unknown keys anywhere, including
    /// inside `parameters`, are rejected with their path.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::spec(".", e.to_string()))?;
        let spec: ExperimentSpec = from_value_at(value, "")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(CliError::spec("n_samples", "must be a positive integer"));
        }
        self.params().map(|_| ())
    }

    /// The parameters, parsed for this spec's kind.
    pub fn params(&self) -> Result<Params> {
        let v = Value::Object(self.parameters.clone());
        let at = "parameters";
        let p = match self.kind {
            Kind::Distance => Params::Distance(from_value_at(v, at)?),
            Kind::Sample => Params::Sample(from_value_at(v, at)?),
            Kind::Bound => Params::Bound(from_value_at(v, at)?),
            Kind::Estimate => Params::Estimate(from_value_at(v, at)?),
            Kind::Tail => Params::Tail(from_value_at(v, at)?),
            Kind::Isoperimetry => Params::Isoperimetry(from_value_at(v, at)?),
            Kind::Verify => Params::Verify(from_value_at(v, at)?),
        };
        p.check()?;
        Ok(p)
    }
}

/// Parameters of each kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Distance(DistanceParams),
    Sample(SampleParams),
    Bound(BoundParams),
    Estimate(EstimateParams),
    Tail(TailParams),
    Isoperimetry(IsoperimetryParams),
    Verify(VerifyParams),
}

impl Params {
    fn check(&self) -> Result<()> {
        match self {
            Params::Distance(_) | Params::Verify(_) | Params::Tail(_) => Ok(()),
            Params::Sample(p) => {
                p.sigma()?;
                match p.process {
                    Process::Cox if p.mixer.is_none() => Err(missing("mixer", "process cox")),
                    Process::Gibbs if p.potential.is_none() => Err(missing("potential", "process gibbs")),
                    _ => Ok(()),
                }
            }
            Params::Bound(p) => {
                let need = |present: bool, field: &str| {
                    if present {
                        Ok(())
                    } else {
                        Err(missing(field, &format!("family {}", p.family.name())))
                    }
                };
                match p.family {
                    BoundFamily::Poisson => need(p.p.is_some(), "p"),
                    BoundFamily::Cox => need(p.mixer.is_some(), "mixer"),
                    BoundFamily::Gibbs => need(p.potential.is_some(), "potential"),
                    BoundFamily::Halfline => need(p.time_change.is_some(), "time_change"),
                    BoundFamily::Timechange => need(!p.marks.is_empty(), "marks"),
                }?;
                let sigma = p.sigma()?;
                p.density(&sigma).map(|_| ())
            }
            Params::Estimate(p) => {
                let sigma = p.sigma()?;
                p.density(&sigma)?;
                match p.target {
                    Target::Poisson if p.p.is_none() => Err(missing("p", "target poisson")),
                    Target::Gibbs if p.potential.is_none() => Err(missing("potential", "target gibbs")),
                    _ => Ok(()),
                }
            }
            Params::Isoperimetry(p) => p.sigma().map(|_| ()),
        }
    }
}

fn missing(field: &str, context: &str) -> CliError {
    CliError::spec(format!("parameters.{field}"), format!("required for {context}"))
}

/// A window: `[a, b]` for an interval, or `{"lower": [...], "upper": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Interval([f64; 2]),
    Box(Window),
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::Interval([0.0, 1.0])
    }
}

impl WindowSpec {
    pub fn window(&self, path: &str) -> Result<Window> {
        match self {
            WindowSpec::Interval([a, b]) => Window::interval(*a, *b).map_err(|e| CliError::spec(path, e.to_string())),
            WindowSpec::Box(w) => Ok(w.clone()),
        }
    }
}

fn default_intensity() -> String {
    "const:1".into()
}

/// `sigma(dx) = intensity(x) dx` on the window.
pub(crate) fn intensity_of(window: &WindowSpec, intensity: &str) -> Result<IntensityMeasure> {
    let window = window.window("parameters.window")?;
    let invalid = |e: ppt_core::Error| CliError::spec("parameters.intensity", e.to_string());
    // Constants keep the exact mass `c * volume`.
    if let Ok(Expr::Const(c)) = parse_density_expr(intensity) {
        return IntensityMeasure::constant(window, c).map_err(invalid);
    }
    let density = density_at(intensity, &window, "parameters.intensity")?;
    IntensityMeasure::new(window, density).map_err(invalid)
}

pub(crate) fn density_at(text: &str, window: &Window, path: &str) -> Result<Density> {
    let err = |source| CliError::Expr {
        path: path.to_string(),
        source,
    };
    parse_density_expr(text)
        .map_err(err)?
        .to_density(window, text)
        .map_err(err)
}

/// Ground distance between two configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Rho0,
    Rho1,
    Rho2,
    Rho1Normalized,
    Rho2Normalized,
    Rho2Marked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceParams {
    pub metric: DistanceMetric,
    pub omega: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    /// Needed only when both configurations are empty.
    #[serde(default)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Poisson,
    Cox,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleParams {
    pub process: Process,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_intensity")]
    pub intensity: String,
    #[serde(default)]
    pub mixer: Option<Mixer>,
    #[serde(default)]
    pub potential: Option<String>,
    /// Include every drawn configuration in the report.
    #[serde(default)]
    pub include_draws: bool,
    /// Write coordinates of included draws as hexadecimal floats.
    #[serde(default)]
    pub hex: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Poisson,
    Cox,
    Gibbs,
    Halfline,
    Timechange,
}

impl BoundFamily {
    fn name(&self) -> String {
        serde_json::to_value(self)
            .expect("unit variant")
            .as_str()
            .expect("string")
            .to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkSpec {
    pub time_change: TimeChangeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub family: BoundFamily,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_intensity")]
    pub intensity: String,
    /// Density of the second Poisson law against `sigma`.
    #[serde(default)]
    pub p: Option<String>,
    #[serde(default)]
    pub mixer: Option<Mixer>,
    #[serde(default)]
    pub potential: Option<String>,
    #[serde(default)]
    pub time_change: Option<TimeChangeKind>,
    #[serde(default)]
    pub marks: Vec<MarkSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Poisson,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateParams {
    pub target: Target,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_intensity")]
    pub intensity: String,
    #[serde(default)]
    pub p: Option<String>,
    #[serde(default)]
    pub potential: Option<String>,
    /// Configurations per side of the empirical transport problem.
    #[serde(default = "default_side")]
    pub n_side: usize,
}

fn default_metric() -> Metric {
    Metric::Rho1
}

fn default_side() -> usize {
    200
}

pub const DEFAULT_MASSES: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_RS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    #[serde(default = "default_masses")]
    pub masses: Vec<f64>,
    #[serde(default = "default_rs")]
    pub rs: Vec<f64>,
    /// Also write the grid as CSV to this path.
    #[serde(default)]
    pub csv: Option<String>,
}

fn default_masses() -> Vec<f64> {
    DEFAULT_MASSES.to_vec()
}

fn default_rs() -> Vec<f64> {
    DEFAULT_RS.to_vec()
}

/// `{omega(region) <relation> k}`; no region means the whole window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub relation: CountRelation,
    pub k: u64,
    #[serde(default)]
    pub region: Option<WindowSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoperimetryParams {
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_intensity")]
    pub intensity: String,
    pub events: Vec<EventSpec>,
}

/// Named end-to-end checks; see [`crate::scenarios`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AssignmentExactness,
    Rho2Correctness,
    PoissonTightness,
    ExactOracle,
    GibbsBound,
    Halfline,
    GeneralBound,
    TailGrid,
    LaplaceSharpness,
    Stirling,
    PoincareCoarea,
    Isoperimetry,
    Semicontinuity,
}

impl Scenario {
    pub const ALL: [Scenario; 13] = [
        Scenario::AssignmentExactness,
        Scenario::Rho2Correctness,
        Scenario::PoissonTightness,
        Scenario::ExactOracle,
        Scenario::GibbsBound,
        Scenario::Halfline,
        Scenario::GeneralBound,
        Scenario::TailGrid,
        Scenario::LaplaceSharpness,
        Scenario::Stirling,
        Scenario::PoincareCoarea,
        Scenario::Isoperimetry,
        Scenario::Semicontinuity,
    ];

    pub fn name(&self) -> String {
        serde_json::to_value(self)
            .expect("unit variant")
            .as_str()
            .expect("string")
            .to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub scenario: Scenario,
}

macro_rules! with_sigma {
    ($($t:ty),*) => {$(
        impl $t {
            /// The intensity measure given by `window` and `intensity`.
            pub fn sigma(&self) -> Result<IntensityMeasure> {
                intensity_of(&self.window, &self.intensity)
            }
        }
    )*};
}
with_sigma!(SampleParams, BoundParams, EstimateParams, IsoperimetryParams);

macro_rules! with_density {
    ($($t:ty),*) => {$(
        impl $t {
            /// The density `p` against `sigma`, if given.
            pub fn density(&self, sigma: &IntensityMeasure) -> Result<Option<Density>> {
                self.p.as_deref().map(|text| density_at(text, sigma.window(), "parameters.p")).transpose()
            }
        }
    )*};
}
with_density!(BoundParams, EstimateParams);

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<ExperimentSpec> {
        ExperimentSpec::from_json(text)
    }

    #[test]
    fn minimal_bound_spec() {
        let s = spec(r#"{"kind":"bound","parameters":{"family":"poisson","p":"const:2","window":[0,1]}}"#).unwrap();
        assert_eq!(s.kind, Kind::Bound);
        assert_eq!(s.n_samples, 10_000);
        assert!(matches!(s.params().unwrap(), Params::Bound(_)));
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = spec(r#"{"kind":"tail","foo":1}"#).unwrap_err().to_string();
        assert!(e.contains("foo"), "{e}");
        let e = spec(r#"{"kind":"tail","parameters":{"masses":[1],"foo":1}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("foo") && e.contains("parameters"), "{e}");
        let e = spec(
            r#"{"kind":"bound","parameters":{"family":"cox","mixer":{"family":"gamma","shape":1,"scale":1,"foo":2}}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("foo") && e.contains("parameters.mixer"), "{e}");
    }

    #[test]
    fn field_paths_locate_errors() {
        let e = spec(r#"{"kind":"bound","parameters":{"family":"poisson"}}"#).unwrap_err();
        assert!(
            matches!(&e, CliError::Spec { path, .. } if path == "parameters.p"),
            "{e}"
        );
        let e = spec(r#"{"kind":"bound","parameters":{"family":"poisson","p":"const:x"}}"#).unwrap_err();
        assert!(e.to_string().contains("position 6"), "{e}");
        let e = spec(r#"{"kind":"verify","parameters":{"scenario":"nope"}}"#).unwrap_err();
        assert!(
            matches!(&e, CliError::Spec { path, .. } if path == "parameters.scenario"),
            "{e}"
        );
        let e = spec(r#"{"kind":"tail","n_samples":0}"#).unwrap_err();
        assert!(matches!(&e, CliError::Spec { path, .. } if path == "n_samples"), "{e}");
        let e = spec(r#"{"kind":"sample","parameters":{"process":"poisson","window":[1,0]}}"#).unwrap_err();
        assert!(
            matches!(&e, CliError::Spec { path, .. } if path == "parameters.window"),
            "{e}"
        );
    }

    #[test]
    fn round_trip() {
        let texts = [
            r#"{"kind":"bound","parameters":{"family":"poisson","p":"poly:0.1,2.5"},"seed":{"seed":3,"stream_id":1},"n_samples":7,"output_path":"r.json"}"#,
            r#"{"kind":"verify","parameters":{"scenario":"tail-grid"}}"#,
            r#"{"kind":"tail","parameters":{"masses":[0.1,0.30000000000000004]}}"#,
        ];
        for text in texts {
            let s = spec(text).unwrap();
            assert_eq!(spec(&s.to_json()).unwrap(), s);
        }
    }

    #[test]
    fn boxes_and_intervals() {
        let s = spec(r#"{"kind":"sample","parameters":{"process":"poisson","window":{"lower":[0,0],"upper":[1,2]}}}"#)
            .unwrap();
        let Params::Sample(p) = s.params().unwrap() else {
            panic!()
        };
        assert_eq!(p.sigma().unwrap().total_mass(), 2.0);
    }

    #[test]
    fn scenario_names() {
        assert_eq!(Scenario::TailGrid.name(), "tail-grid");
        assert_eq!(Scenario::ALL.len(), 13);
        assert_eq!(Kind::Isoperimetry.to_string(), "isoperimetry");
    }
}
