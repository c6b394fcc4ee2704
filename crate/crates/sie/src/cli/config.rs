//! Experiment configuration: a strict TOML file with one table per concern.
//! Unknown keys are rejected so typos fail loudly instead of silently
//! changing an experiment. The full grammar is documented in the README.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fredholm: Option<FredholmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbm: Option<GbmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<IsometrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Sie,
    Fredholm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub a: f64,
    pub b: f64,
    /// Coefficient descriptor for f(s, x); required for kind = "sie".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<String>,
    /// Coefficient descriptor for sigma(s, x); required for kind = "sie".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<String>,
    /// Initial-law descriptor; required for kind = "sie".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub m: usize,
    pub n_paths: usize,
    pub seed: u64,
}

fn default_damping() -> f64 {
    1.0
}

fn default_initial_iterate() -> String {
    "h".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    /// "h" (initial condition held constant) or "zero".
    #[serde(default = "default_initial_iterate")]
    pub initial_iterate: String,
}

fn default_heuristic_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Subset of {"schauder", "banach"}.
    pub run: Vec<String>,
    /// Ball radius for the existence checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Allow sampled bounds (verdicts become pass_heuristic at best).
    #[serde(default)]
    pub heuristic_bounds: bool,
    #[serde(default = "default_heuristic_samples")]
    pub heuristic_samples: usize,
}

fn default_fredholm_tol() -> f64 {
    1e-12
}

fn default_fredholm_max_iter() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FredholmSection {
    pub lambda: f64,
    /// Kernel descriptor, e.g. "affine:(poly:0,1):(poly:0,1):0.25".
    pub kernel: String,
    pub n_quad: usize,
    #[serde(default = "default_fredholm_tol")]
    pub tol: f64,
    #[serde(default = "default_fredholm_max_iter")]
    pub max_iter: usize,
    /// Ball radius for the existence check; omit to skip it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

fn default_ladder() -> Vec<usize> {
    vec![16, 32, 64, 128, 256]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmSection {
    /// Step counts of the coupled resolution ladder; each entry must be an
    /// integer multiple (>= 2) of its predecessor.
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
}

fn default_isometry_tolerance() -> f64 {
    0.02
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometrySection {
    /// Subset of {"one", "t", "B"}.
    pub integrands: Vec<String>,
    #[serde(default = "default_isometry_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
