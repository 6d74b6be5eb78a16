//! JSON experiment configuration. Unknown keys are rejected; every
//! referenced model precondition is validated before any computation
//! starts; command-line flags override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use arcsine_core::chain::ChainModel;
use arcsine_core::engine::{EnsembleSpec, InitialMeasure, Model};
use arcsine_core::error::Error as CoreError;
use arcsine_core::maps::{InitialDensity, MapModel};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// simulate | sample-gas | wandering | fit | verify:<name>
    pub experiment: String,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub n_traj: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Boole,
    Cubic3 {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Chain {
        p: Vec<f64>,
    },
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    UniformSym2,
    Uniform01,
    BetaLike { a: f64, b: f64 },
    ChainOrigin,
    ChainSite { ray: usize, height: u64 },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CoreError::Config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn expect_kind(&self, kind: &str) -> anyhow::Result<()> {
        if self.experiment == kind {
            Ok(())
        } else {
            Err(CoreError::Config(format!(
                "config declares experiment '{}', but the '{kind}' subcommand was invoked",
                self.experiment
            ))
            .into())
        }
    }

    pub fn to_ensemble_spec(&self) -> anyhow::Result<EnsembleSpec> {
        let model = match self.model.as_ref().ok_or_else(missing("model"))? {
            ModelConfig::Boole => Model::Map(MapModel::boole()),
            ModelConfig::Cubic3 { epsilon } => Model::Map(MapModel::cubic3(*epsilon)?),
            ModelConfig::Chain { p } => Model::Chain(ChainModel::new(p.clone())?),
        };
        let measure = match self.measure.as_ref().ok_or_else(missing("measure"))? {
            MeasureConfig::UniformSym2 => InitialMeasure::Density(InitialDensity::UniformSym2),
            MeasureConfig::Uniform01 => InitialMeasure::Density(InitialDensity::Uniform01),
            MeasureConfig::BetaLike { a, b } => {
                InitialMeasure::Density(InitialDensity::BetaLike { a: *a, b: *b })
            }
            MeasureConfig::ChainOrigin => InitialMeasure::ChainOrigin,
            MeasureConfig::ChainSite { ray, height } => {
                InitialMeasure::ChainSite { ray: *ray, height: *height }
            }
        };
        let spec = EnsembleSpec {
            model,
            measure,
            checkpoints: self.checkpoints.clone().ok_or_else(missing("checkpoints"))?,
            n_traj: self.n_traj.ok_or_else(missing("n_traj"))?,
            seed: self.seed.ok_or_else(missing("seed"))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn missing(field: &'static str) -> impl Fn() -> anyhow::Error {
    move || CoreError::Config(format!("missing required field '{field}'")).into()
}
