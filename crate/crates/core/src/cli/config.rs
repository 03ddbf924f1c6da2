//! Experiment configuration: a single serializable document accepted as
//! JSON (canonical) or TOML, with defaults filled in and every numeric
//! parameter range-checked before a run starts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{builtin_field, GridField, ScalarField};
use crate::geometry::{LipschitzGraph, RootCube};

fn default_grid_depth() -> u32 {
    10
}
fn default_max_depth() -> u32 {
    8
}
fn default_epsilons() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_k_blue() -> f64 {
    0.5
}
fn default_r_ladder() -> Vec<f64> {
    vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0]
}
fn default_seed() -> u64 {
    7
}
fn default_counting_r() -> f64 {
    1.0
}
fn default_counting_eps() -> f64 {
    0.6
}
fn default_counting_beta() -> f64 {
    0.5
}
fn default_counting_depth() -> u32 {
    8
}
fn default_gl_depth() -> u32 {
    8
}
fn default_gl_lambda() -> f64 {
    1.0
}
fn default_gl_steps() -> usize {
    4
}
fn default_root_side() -> f64 {
    1.0
}

/// Boundary graph selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// One of `flat`, `linear`, `vee`.
    pub kind: String,
    /// Slope magnitude for `linear` and `vee`; ignored for `flat`.
    #[serde(default)]
    pub slope: f64,
    /// Left endpoint of the base window.
    #[serde(default)]
    pub origin: f64,
    /// Side of the base window.
    #[serde(default = "default_root_side")]
    pub side: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            kind: "flat".to_string(),
            slope: 0.0,
            origin: 0.0,
            side: 1.0,
        }
    }
}

impl DomainConfig {
    pub fn graph(&self) -> Result<LipschitzGraph> {
        match self.kind.as_str() {
            "flat" => Ok(LipschitzGraph::flat(1, 0.0)),
            "linear" => Ok(LipschitzGraph::linear(vec![self.slope], 0.0)),
            "vee" => Ok(LipschitzGraph::vee(self.slope)),
            other => Err(LabError::invalid_parameter(
                "domain.kind",
                format!("unknown graph kind {other:?}; expected flat, linear, or vee"),
            )),
        }
    }

    pub fn root(&self) -> Result<RootCube> {
        if !(self.side.is_finite() && self.side > 0.0 && self.origin.is_finite()) {
            return Err(LabError::invalid_parameter(
                "domain.side",
                "base window must have a finite origin and positive side",
            ));
        }
        Ok(RootCube {
            origin: vec![self.origin],
            side: self.side,
        })
    }
}

/// Field selection: a builtin by name or a gridded field from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// Builtin name; ignored when `file` is set.
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Path to a gridded field (`.json` sidecar with binary data, or CSV).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Clip the field to `[-clip, clip]` after construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            name: "harmonic_sinexp".to_string(),
            params: BTreeMap::new(),
            file: None,
            clip: None,
        }
    }
}

impl FieldConfig {
    pub fn build(&self) -> Result<ScalarField> {
        let base = match &self.file {
            Some(path) => {
                let p = Path::new(path);
                let name = format!("file:{path}");
                if p.extension().and_then(|e| e.to_str()) == Some("csv") {
                    GridField::from_csv(p)?.into_field(name)
                } else {
                    // A non-CSV path names the binary data file; its JSON
                    // sidecar sits alongside with a `.json` extension.
                    let sidecar = p.with_extension("json");
                    GridField::from_binary(p, &sidecar)?.into_field(name)
                }
            }
            None => builtin_field(&self.name, &self.params)?,
        };
        match self.clip {
            Some(cap) => {
                if !(cap.is_finite() && cap > 0.0) {
                    return Err(LabError::invalid_parameter(
                        "field.clip",
                        "clip level must be positive and finite",
                    ));
                }
                Ok(base.clipped(cap))
            }
            None => Ok(base),
        }
    }
}

/// Parameters of the oscillation-counting functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    #[serde(default = "default_counting_r")]
    pub r: f64,
    #[serde(default = "default_counting_eps")]
    pub eps: f64,
    #[serde(default = "default_counting_beta")]
    pub beta: f64,
    #[serde(default = "default_counting_depth")]
    pub depth: u32,
}

impl Default for CountingConfig {
    fn default() -> Self {
        CountingConfig {
            r: default_counting_r(),
            eps: default_counting_eps(),
            beta: default_counting_beta(),
            depth: default_counting_depth(),
        }
    }
}

/// Parameters of the exact stopping-family pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodLambdaConfig {
    #[serde(default = "default_gl_depth")]
    pub depth: u32,
    #[serde(default = "default_gl_lambda")]
    pub lambda: f64,
    /// Martingale increment; defaults to `lambda / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<f64>,
    /// Seeds to synthesize; empty means the master seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_gl_steps")]
    pub steps: usize,
}

impl Default for GoodLambdaConfig {
    fn default() -> Self {
        GoodLambdaConfig {
            depth: default_gl_depth(),
            lambda: default_gl_lambda(),
            increment: None,
            seeds: Vec::new(),
            steps: default_gl_steps(),
        }
    }
}

/// The full experiment document. Unknown keys are rejected; omitted keys
/// take the documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default = "default_grid_depth")]
    pub grid_depth: u32,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_k_blue")]
    pub k_blue: f64,
    #[serde(default)]
    pub eta: f64,
    /// Cone aperture; defaults to `0.5 / max(L, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub counting: CountingConfig,
    #[serde(default = "default_r_ladder")]
    pub r_ladder: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub goodlambda: GoodLambdaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainConfig::default(),
            field: FieldConfig::default(),
            grid_depth: default_grid_depth(),
            max_depth: default_max_depth(),
            epsilons: default_epsilons(),
            k_blue: default_k_blue(),
            eta: 0.0,
            alpha: None,
            counting: CountingConfig::default(),
            r_ladder: default_r_ladder(),
            seed: default_seed(),
            goodlambda: GoodLambdaConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Parse from text; a leading `{` selects JSON, anything else TOML.
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| LabError::ConfigParse(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| LabError::ConfigParse(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Effective cone aperture: the configured value or `0.5 / max(L, 1)`.
    pub fn aperture(&self, graph: &LipschitzGraph) -> f64 {
        self.alpha
            .unwrap_or_else(|| 0.5 / graph.lipschitz().max(1.0))
    }

    /// Seeds for the stopping-family pipeline; the master seed when the
    /// list is empty.
    pub fn goodlambda_seeds(&self) -> Vec<u64> {
        if self.goodlambda.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.goodlambda.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let graph = self.domain.graph()?;
        self.domain.root()?;
        if !(1..=16).contains(&self.grid_depth) {
            return Err(LabError::invalid_parameter(
                "grid_depth",
                "grid depth must lie in 1..=16",
            ));
        }
        if self.max_depth == 0 || self.max_depth + 2 > self.grid_depth {
            return Err(LabError::invalid_parameter(
                "max_depth",
                "stopping depth must be at least 1 and leave two generations of grid margin",
            ));
        }
        if self.epsilons.is_empty() {
            return Err(LabError::invalid_parameter(
                "epsilons",
                "need at least one threshold",
            ));
        }
        for &e in &self.epsilons {
            if !(e.is_finite() && e > 0.0) {
                return Err(LabError::invalid_parameter(
                    "epsilons",
                    "thresholds must be positive and finite",
                ));
            }
        }
        if !(self.k_blue.is_finite() && self.k_blue > 0.0) {
            return Err(LabError::invalid_parameter(
                "k_blue",
                "certificate fraction must be positive and finite",
            ));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(LabError::invalid_parameter(
                "eta",
                "ball inflation must lie in [0, 1)",
            ));
        }
        let lip = graph.lipschitz();
        let alpha = self.aperture(&graph);
        if !(alpha.is_finite() && alpha > 0.0) || (lip > 0.0 && alpha >= 1.0 / lip) {
            return Err(LabError::invalid_parameter(
                "alpha",
                "cone aperture must be positive and below 1/L",
            ));
        }
        if !(self.counting.beta > 0.0 && self.counting.beta < 1.0) {
            return Err(LabError::invalid_parameter(
                "beta",
                "decay factor must lie in (0, 1)",
            ));
        }
        if !(self.counting.r.is_finite() && self.counting.r > 0.0) {
            return Err(LabError::invalid_parameter(
                "counting.r",
                "counting radius must be positive",
            ));
        }
        if !(self.counting.eps.is_finite() && self.counting.eps >= 0.0) {
            return Err(LabError::invalid_parameter(
                "counting.eps",
                "counting oscillation must be nonnegative",
            ));
        }
        if self.r_ladder.is_empty() {
            return Err(LabError::invalid_parameter(
                "r_ladder",
                "need at least one radius",
            ));
        }
        let mut prev = 0.0;
        for &r in &self.r_ladder {
            if !(r.is_finite() && r > prev) {
                return Err(LabError::invalid_parameter(
                    "r_ladder",
                    "radii must be positive, finite, and strictly increasing",
                ));
            }
            prev = r;
        }
        if self.goodlambda.depth > 20 {
            return Err(LabError::invalid_parameter(
                "goodlambda.depth",
                "depth exceeds the cell budget (20)",
            ));
        }
        if !(self.goodlambda.lambda.is_finite() && self.goodlambda.lambda > 0.0) {
            return Err(LabError::invalid_parameter(
                "goodlambda.lambda",
                "level must be positive and finite",
            ));
        }
        if self.goodlambda.steps == 0 || self.goodlambda.steps > 20 {
            return Err(LabError::invalid_parameter(
                "goodlambda.steps",
                "step count must lie in 1..=20",
            ));
        }
        Ok(())
    }
}
