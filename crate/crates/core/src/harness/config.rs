//! Experiment configuration (TOML).
//!
//! ```toml
//! name = "sphere-biased"
//! scene = "scenes/sphere.toml"      # or an inline [scene] table
//! variants = ["ours", "no_gradient", "open_loop_b5", "heuristic_b1"]
//! trials = 100
//! seed = 0
//!
//! [perturbation]
//! offset_bias = -0.008
//!
//! [closing]
//! gradient_budget = 1
//! ```
//!
//! Every field but `scene` has a default. Relative paths resolve against the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact::SolverOptions;
use crate::grasp_eval::{CONE_EDGES, FRICTION_COEFFICIENT, TORSION_RADIUS};
use crate::kinematics::{HandArmModel, ModelDescription};
use crate::preshape::PreshapeParams;
use crate::sdf::{EstimatedSdf, SceneDescription, SdfScene};
use crate::tactile::{ClosingParams, Variant};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    File(PathBuf),
    Inline(SceneDescription),
}

/// How the planner's estimate departs from the true object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Added to the true SDF; negative puts the believed surface outside the real one.
    pub offset_bias: f64,
    pub noise_amplitude: f64,
    pub smoothness_scale: f64,
    /// The noise field of trial `t` is seeded with `noise_seed + seed + t`.
    pub noise_seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            offset_bias: 0.0,
            noise_amplitude: 0.0,
            smoothness_scale: 0.03,
            noise_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub friction: f64,
    pub cone_edges: usize,
    pub torsion_radius: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            friction: FRICTION_COEFFICIENT,
            cone_edges: CONE_EDGES,
            torsion_radius: TORSION_RADIUS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub scene: SceneSource,
    /// Hand-arm model file; the bundled model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Trial `t` uses seed `seed + t` for preshape sampling and estimate noise.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_preshape_samples")]
    pub preshape_samples: usize,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub preshape: PreshapeParams,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub closing: ClosingParams,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Output directory for `batch`.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn default_trials() -> usize {
    10
}

fn default_preshape_samples() -> usize {
    32
}

fn default_out() -> PathBuf {
    "vtgrasp-out".into()
}

impl ExperimentConfig {
    /// A config with every default around `scene`.
    pub fn new(scene: SceneSource) -> Self {
        ExperimentConfig {
            name: default_name(),
            scene,
            model: None,
            variants: default_variants(),
            trials: default_trials(),
            seed: 0,
            preshape_samples: default_preshape_samples(),
            perturbation: PerturbationConfig::default(),
            preshape: PreshapeParams::default(),
            solver: SolverOptions::default(),
            closing: ClosingParams::default(),
            eval: EvalConfig::default(),
            out: default_out(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(message) => Error::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if self.preshape_samples == 0 {
            return Err(Error::Config("preshape_samples must be at least 1".into()));
        }
        let p = &self.perturbation;
        if !p.offset_bias.is_finite() || !(p.noise_amplitude >= 0.0 && p.noise_amplitude.is_finite()) {
            return Err(Error::Config("offset_bias must be finite and noise_amplitude non-negative".into()));
        }
        if p.noise_amplitude > 0.0 && !(p.smoothness_scale > 0.0 && p.smoothness_scale.is_finite()) {
            return Err(Error::Config("smoothness_scale must be positive".into()));
        }
        let e = &self.eval;
        if !(e.friction >= 0.0 && e.friction.is_finite()) || e.cone_edges < 3 || !(e.torsion_radius >= 0.0) {
            return Err(Error::Config("eval needs friction >= 0, cone_edges >= 3, torsion_radius >= 0".into()));
        }
        self.closing.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }
}

/// A validated config with its model and true scene loaded.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: HandArmModel,
    pub scene: SdfScene,
}

impl Experiment {
    /// Resolves relative paths in `config` against `base_dir`.
    pub fn new(config: ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let resolve = |p: &Path| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        };
        let scene = match &config.scene {
            SceneSource::File(path) => SdfScene::load(resolve(path))?,
            SceneSource::Inline(desc) => desc.build(base_dir)?,
        };
        let model = match &config.model {
            Some(path) => ModelDescription::load(resolve(path))?.build()?,
            None => HandArmModel::default_model(),
        };
        Ok(Experiment { config, model, scene })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let config = ExperimentConfig::load(path)?;
        Experiment::new(config, path.parent())
    }

    /// The planner's estimate for `trial`.
    pub fn estimate(&self, trial: usize) -> Result<EstimatedSdf> {
        let p = &self.config.perturbation;
        EstimatedSdf::new(
            self.scene.clone(),
            p.offset_bias,
            p.noise_amplitude,
            p.noise_seed.wrapping_add(self.config.trial_seed(trial)),
            p.smoothness_scale,
        )
    }
}
