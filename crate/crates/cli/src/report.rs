//! Report documents printed by the subcommands, with their JSON Schemas.
//!
//! Every report type rejects unknown fields on deserialization, so parsing a
//! command's output back into its type validates it against the published schema.

use schemars::{schema_for, JsonSchema};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GibbsReport {
    /// Canonical form of the parsed potential.
    pub potential: String,
    pub support: [f64; 2],
    pub sd_residual: f64,
    pub sd_test_degree: u32,
    pub el_residual: f64,
    /// Moments of orders 1 through 8.
    pub moments: Vec<f64>,
    pub gibbs_energy: f64,
    pub coefficients: usize,
    pub newton_iterations: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KahlerEinstein {
    pub residual: f64,
    pub constant: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MomentMapReport {
    pub target: String,
    pub source_support: [f64; 2],
    pub working_interval: [f64; 2],
    pub iterations: usize,
    pub residual: f64,
    pub pushforward_residual: f64,
    pub clamp_events: usize,
    pub clamp_active_at_convergence: bool,
    pub target_shift: f64,
    /// `sup |u'(x) - x|` over the source support.
    pub identity_deviation: f64,
    pub max_second_derivative: f64,
    pub kahler_einstein: Option<KahlerEinstein>,
    pub pass: bool,
}

/// Stored moment map: `u'` as a Chebyshev-T series on the working interval.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub kind: String,
    pub working_interval: [f64; 2],
    pub uprime_coeffs: Vec<f64>,
    pub source_support: [f64; 2],
    pub source_coeffs: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub pushforward_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SteinReport {
    pub target: String,
    /// Potential the kernel is built for; absent for the semicircular potential.
    pub wrt: Option<String>,
    pub discrepancy: f64,
    pub source_discrepancy: f64,
    pub w2: f64,
    pub ws_pass: bool,
    pub kernel_min: f64,
    pub kernel_asymmetry: f64,
    /// Stein identity residuals for `f = x^k`, `k = 1..=8`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DistanceReport {
    pub from: String,
    pub to: String,
    pub w2: f64,
    pub max_correlation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ConvolveReport {
    pub operation: String,
    pub support: [f64; 2],
    pub mean: f64,
    pub variance: f64,
    pub m4: f64,
    pub coefficients: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NcEntry {
    pub label: String,
    pub value: String,
}

/// Exact results; rationals are written as `p/q`.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NcReport {
    pub op: String,
    pub arity: usize,
    pub input: Vec<String>,
    pub entries: Vec<NcEntry>,
    pub pass: bool,
}

/// One measured quantity with optional bounds.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CheckItem {
    pub label: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl CheckItem {
    pub fn info(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value, lower: None, upper: None, pass: true }
    }

    pub fn at_most(label: impl Into<String>, value: f64, upper: f64) -> Self {
        Self { label: label.into(), value, lower: None, upper: Some(upper), pass: value <= upper }
    }

    pub fn at_least(label: impl Into<String>, value: f64, lower: f64) -> Self {
        Self { label: label.into(), value, lower: Some(lower), upper: None, pass: value >= lower }
    }

    pub fn within(label: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self { label: label.into(), value, lower: Some(lower), upper: Some(upper), pass: value >= lower && value <= upper }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub check: String,
    pub subject: String,
    /// Exploratory checks report evidence and always pass.
    pub exploratory: bool,
    pub items: Vec<CheckItem>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: &str, subject: impl Into<String>, items: Vec<CheckItem>) -> Self {
        let pass = items.iter().all(|i| i.pass);
        Self { check: check.into(), subject: subject.into(), exploratory: false, items, notes: Vec::new(), pass }
    }

    pub fn item(&self, label: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.label == label)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    /// Byte offset for expression syntax errors.
    pub position: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

/// Names accepted by `freestein schema`.
pub const SCHEMA_NAMES: &[&str] =
    &["gibbs", "moment-map", "map", "stein", "distance", "convolve", "nc", "check", "error", "config"];

pub fn schema(name: &str) -> Option<serde_json::Value> {
    let s = match name {
        "gibbs" => schema_for!(GibbsReport),
        "moment-map" => schema_for!(MomentMapReport),
        "map" => schema_for!(MapDocument),
        "stein" => schema_for!(SteinReport),
        "distance" => schema_for!(DistanceReport),
        "convolve" => schema_for!(ConvolveReport),
        "nc" => schema_for!(NcReport),
        "check" => schema_for!(CheckReport),
        "error" => schema_for!(ErrorReport),
        "config" => schema_for!(crate::RunConfig),
        _ => return None,
    };
    Some(serde_json::to_value(s).expect("schemas serialize"))
}
