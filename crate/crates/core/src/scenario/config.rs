use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::group::{LieOptions, TorusOptions};
use crate::maps::Functional;
use crate::renorm::EntireOptions;
use crate::tube::ClassifyOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Renormalize,
    Normality,
    TubeClassify,
    MapAnalysis,
    Torus,
    Lie,
}

impl ScenarioKind {
    pub fn table(&self) -> &'static str {
        match self {
            ScenarioKind::Renormalize => "renormalize",
            ScenarioKind::Normality => "normality",
            ScenarioKind::TubeClassify => "tube_classify",
            ScenarioKind::MapAnalysis => "map_analysis",
            ScenarioKind::Torus => "torus",
            ScenarioKind::Lie => "lie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<RenormalizeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normality: Option<NormalitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tube_classify: Option<TubeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_analysis: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus: Option<TorusSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie: Option<LieSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub name: String,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            name: "report".into(),
            csv: true,
        }
    }
}

fn two() -> usize {
    2
}

fn dilation() -> f64 {
    2.0
}

fn steps() -> usize {
    24
}

fn grid_points() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormalizeSpec {
    pub expr: String,
    #[serde(default = "two")]
    pub dim: usize,
    pub point: Vec<f64>,
    #[serde(default)]
    pub options: EntireOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormalityTest {
    Marty {
        #[serde(default = "m_big")]
        m_big: f64,
    },
    Levelset {
        a: f64,
        m_k: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
}

fn m_big() -> f64 {
    crate::normality::DEFAULT_M_BIG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalitySpec {
    pub members: Vec<String>,
    #[serde(default = "two")]
    pub dim: usize,
    pub domain: BoxSpec,
    pub compact: BoxSpec,
    #[serde(default = "grid_points")]
    pub points: usize,
    pub test: NormalityTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default)]
    pub options: ClassifyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub f: String,
    pub g: String,
    pub grid: BoxSpec,
    #[serde(default = "grid_points")]
    pub points: usize,
    #[serde(default)]
    pub jacobian_points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    pub components: Vec<String>,
    #[serde(default = "two")]
    pub dim: usize,
    pub point: Vec<f64>,
    #[serde(default = "dilation")]
    pub dilation: f64,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default)]
    pub options: TorusOptions,
}

/// Complex matrix rows with entries written as `[re, im]`.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieSpec {
    /// Row-major entries in the holomorphic grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MatrixRows>,
    #[serde(default, rename = "X", skip_serializing_if = "Option::is_none")]
    pub x: Option<MatrixRows>,
    pub point: [f64; 2],
    #[serde(default = "dilation")]
    pub dilation: f64,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default)]
    pub options: LieOptions,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Exactly the table named by `kind` must be present.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let present = [
            ("renormalize", self.renormalize.is_some()),
            ("normality", self.normality.is_some()),
            ("tube_classify", self.tube_classify.is_some()),
            ("map_analysis", self.map_analysis.is_some()),
            ("torus", self.torus.is_some()),
            ("lie", self.lie.is_some()),
        ];
        let want = self.kind.table();
        for (name, here) in present {
            if name == want && !here {
                return Err(ScenarioError::Parse(format!("missing table [{want}]")));
            }
            if name != want && here {
                return Err(ScenarioError::Parse(format!("table [{name}] does not match kind = \"{want}\"")));
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(ScenarioError::Parse(format!("invalid output name {:?}", self.output.name)));
        }
        Ok(())
    }
}
