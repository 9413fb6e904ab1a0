//! TOML experiment configuration.
//!
//! A config fully determines an experiment: the scene, the sensed pose and
//! true offset, the prior, the candidate action families, the sensing
//! discretization, and the planner variants to compare. Unknown keys are
//! rejected so typos fail loudly instead of silently running defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::actions::{ActionCounts, GenParams};
use crate::geometry::{
    door_like, drill_like, normalize_angle, MeshError, Pose, Scene, SensorRig, TriangleMesh,
};
use crate::metrics::Objective;
use crate::policy::{ResampleParams, Strategy, Termination};
use crate::sensing::WeightingModel;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scene kind \"obj\" requires a path")]
    MissingScenePath,
    #[error("scene path is only valid with kind \"obj\"")]
    UnexpectedScenePath,
    #[error("exactly one of budget, mass_target, entropy_target must be set")]
    TerminationChoice,
    #[error("seeds must be non-empty")]
    NoSeeds,
    #[error("particles must be positive")]
    NoParticles,
    #[error("metrics must be non-empty and free of duplicates")]
    BadMetrics,
    #[error("the human baseline needs 1..=3 scripted probes (got {0})")]
    BadHumanCount(usize),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Planner variant compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Hypothesis pruning: lazy greedy on expected mass reduction, binary
    /// time window.
    Hp,
    /// Weighted hypothesis pruning: lazy greedy on expected mass reduction,
    /// Gaussian window.
    Whp,
    /// Information gain: naive greedy on expected entropy reduction.
    Ig,
    /// Uniform random probe order.
    Random,
    /// Scripted axis-aligned probes.
    Human,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Hp => "hp",
            Metric::Whp => "whp",
            Metric::Ig => "ig",
            Metric::Random => "random",
            Metric::Human => "human",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    DrillLike,
    DoorLike,
    Obj,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneKind,
    /// OBJ file, required iff `kind = "obj"`.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    /// Pose reported by the coarse exteroceptive estimate; the prior is
    /// centered here and actions are planned against it.
    pub sensed_pose: Pose,
    /// True pose minus sensed pose, componentwise.
    pub truth_offset: Pose,
    /// Prior variances for (x, y, z, theta).
    pub prior_variances: [f64; 4],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsConfig {
    pub human: usize,
    pub sphere: usize,
    pub normal: usize,
    pub table: usize,
    pub speed: Option<f64>,
    pub fixed_time: Option<f64>,
    pub sphere_radius: Option<f64>,
    pub max_inplane: Option<f64>,
    pub retract_margin: Option<f64>,
    pub table_scatter: Option<f64>,
    pub table_height: Option<f64>,
    pub approach_distance: Option<f64>,
}

fn default_d_t() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    0.5
}
fn default_obs_spacing() -> f64 {
    0.5
}
fn default_k_nocontact() -> usize {
    1
}
fn default_noise_sigma() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingConfig {
    /// Binary window half-width (seconds).
    #[serde(default = "default_d_t")]
    pub d_t: f64,
    /// Gaussian window width (seconds).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Observation grid spacing (seconds).
    #[serde(default = "default_obs_spacing")]
    pub obs_spacing: f64,
    /// NoContact bucket multiplicity.
    #[serde(default = "default_k_nocontact")]
    pub k_nocontact: usize,
    /// Std of simulated contact-time noise (seconds); 0 disables.
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Square the time error in the information-gain likelihood instead of
    /// the default absolute-value form.
    #[serde(default)]
    pub ig_squared: bool,
}

fn default_regularizer() -> f64 {
    1e-12
}
fn default_jitter_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub metrics: Vec<Metric>,
    pub budget: Option<usize>,
    pub mass_target: Option<f64>,
    pub entropy_target: Option<f64>,
    /// Covariance regularizer for entropies.
    #[serde(default = "default_regularizer")]
    pub regularizer: f64,
    /// Resample jitter std as a fraction of the prior std, per axis.
    #[serde(default = "default_jitter_scale")]
    pub jitter_scale: f64,
    /// Enable geometry-track resampling below this ESS fraction; omit to
    /// keep the belief support fixed (the default).
    pub resample_ess_fraction: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub particles: usize,
    pub scene: SceneConfig,
    pub object: ObjectConfig,
    pub actions: ActionsConfig,
    pub sensing: SensingConfig,
    pub planner: PlannerConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match (self.scene.kind, &self.scene.path) {
            (SceneKind::Obj, None) => return Err(ConfigError::MissingScenePath),
            (SceneKind::DrillLike | SceneKind::DoorLike, Some(_)) => {
                return Err(ConfigError::UnexpectedScenePath)
            }
            _ => {}
        }
        let set = [
            self.planner.budget.is_some(),
            self.planner.mass_target.is_some(),
            self.planner.entropy_target.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if set != 1 {
            return Err(ConfigError::TerminationChoice);
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::NoSeeds);
        }
        if self.particles == 0 {
            return Err(ConfigError::NoParticles);
        }
        if self.planner.metrics.is_empty() {
            return Err(ConfigError::BadMetrics);
        }
        for (i, m) in self.planner.metrics.iter().enumerate() {
            if self.planner.metrics[..i].contains(m) {
                return Err(ConfigError::BadMetrics);
            }
        }
        if self.planner.metrics.contains(&Metric::Human)
            && !(1..=3).contains(&self.actions.human)
        {
            return Err(ConfigError::BadHumanCount(self.actions.human));
        }
        if self.sensing.d_t <= 0.0 {
            return Err(ConfigError::NonPositive("d_t"));
        }
        if self.sensing.sigma <= 0.0 {
            return Err(ConfigError::NonPositive("sigma"));
        }
        if self.sensing.obs_spacing <= 0.0 {
            return Err(ConfigError::NonPositive("obs_spacing"));
        }
        if self.sensing.k_nocontact == 0 {
            return Err(ConfigError::NonPositive("k_nocontact"));
        }
        Ok(())
    }

    pub fn build_scene(&self) -> Result<Scene, MeshError> {
        let mesh = match self.scene.kind {
            SceneKind::DrillLike => drill_like(),
            SceneKind::DoorLike => door_like(),
            SceneKind::Obj => {
                TriangleMesh::from_obj_file(self.scene.path.as_ref().expect("validated"))?
            }
        };
        Ok(Scene::new(mesh, SensorRig::single_point()))
    }

    /// True object pose: sensed pose plus componentwise offset.
    pub fn truth_pose(&self) -> Pose {
        let s = &self.object.sensed_pose;
        let o = &self.object.truth_offset;
        Pose::new(
            s.x + o.x,
            s.y + o.y,
            s.z + o.z,
            normalize_angle(s.theta + o.theta),
        )
    }

    pub fn action_counts(&self) -> ActionCounts {
        ActionCounts {
            human: self.actions.human,
            sphere: self.actions.sphere,
            normal: self.actions.normal,
            table: self.actions.table,
        }
    }

    pub fn gen_params(&self) -> GenParams {
        let mut p = GenParams::default();
        let a = &self.actions;
        if let Some(v) = a.speed {
            p.speed = v;
        }
        if let Some(v) = a.fixed_time {
            p.fixed_time = v;
        }
        if let Some(v) = a.sphere_radius {
            p.sphere_radius = v;
        }
        if let Some(v) = a.max_inplane {
            p.max_inplane = v;
        }
        if let Some(v) = a.retract_margin {
            p.retract_margin = v;
        }
        if let Some(v) = a.table_scatter {
            p.table_scatter = v;
        }
        if let Some(v) = a.table_height {
            p.table_height = v;
        }
        if let Some(v) = a.approach_distance {
            p.approach_distance = v;
        }
        p
    }

    pub fn termination(&self) -> Termination {
        if let Some(b) = self.planner.budget {
            Termination::Budget(b)
        } else if let Some(t) = self.planner.mass_target {
            Termination::MassTarget(t)
        } else {
            Termination::EntropyTarget(self.planner.entropy_target.expect("validated"))
        }
    }

    /// Kernel the belief update uses for a metric. The unguided baselines
    /// still have to update their belief somehow; they use the Gaussian
    /// window so their covariance trajectories are comparable to the
    /// weighted planner's.
    pub fn model_for(&self, metric: Metric) -> WeightingModel {
        match metric {
            Metric::Hp => WeightingModel::Hp {
                d_t: self.sensing.d_t,
            },
            Metric::Whp | Metric::Random | Metric::Human => WeightingModel::Whp {
                sigma: self.sensing.sigma,
            },
            Metric::Ig => WeightingModel::Ig {
                sigma: self.sensing.sigma,
                squared: self.sensing.ig_squared,
            },
        }
    }

    pub fn objective_for(&self, metric: Metric) -> Objective {
        match metric {
            Metric::Ig => Objective::InformationGain,
            _ => Objective::MassReduction,
        }
    }

    pub fn strategy_for(&self, metric: Metric) -> Strategy {
        match metric {
            Metric::Hp | Metric::Whp => Strategy::LazyGreedy,
            Metric::Ig => Strategy::Greedy,
            Metric::Random => Strategy::Random,
            Metric::Human => Strategy::Fixed((0..self.actions.human as u32).collect()),
        }
    }

    pub fn resample_params(&self) -> Option<ResampleParams> {
        self.planner.resample_ess_fraction.map(|frac| {
            let stds = self.object.prior_variances.map(f64::sqrt);
            ResampleParams {
                ess_fraction: frac,
                jitter_std: stds.map(|s| s * self.planner.jitter_scale),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) const MINIMAL: &str = r#"
        out_dir = "runs/test"
        seeds = [0, 1]
        particles = 100

        [scene]
        kind = "drill-like"

        [object]
        sensed_pose = { x = 0.6, y = 0.0, z = 0.75, theta = 0.0 }
        truth_offset = { x = 0.015, y = -0.015, z = -0.01, theta = 0.05 }
        prior_variances = [0.03, 0.03, 0.03, 0.1]

        [actions]
        human = 3
        sphere = 10
        normal = 10
        table = 5

        [sensing]

        [planner]
        metrics = ["hp", "whp", "ig", "random", "human"]
        budget = 5
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_relative_eq!(c.sensing.d_t, 1.0);
        assert_relative_eq!(c.sensing.sigma, 0.5);
        assert_relative_eq!(c.sensing.obs_spacing, 0.5);
        assert_eq!(c.sensing.k_nocontact, 1);
        assert!(!c.sensing.ig_squared);
        assert_relative_eq!(c.planner.regularizer, 1e-12);
        assert!(c.resample_params().is_none());
        assert_eq!(c.termination(), Termination::Budget(5));
        let truth = c.truth_pose();
        assert_relative_eq!(truth.x, 0.615);
        assert_relative_eq!(truth.theta, 0.05);
        assert_eq!(c.strategy_for(Metric::Human), Strategy::Fixed(vec![0, 1, 2]));
        assert_eq!(c.strategy_for(Metric::Hp), Strategy::LazyGreedy);
        assert_eq!(c.strategy_for(Metric::Ig), Strategy::Greedy);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("budget = 5", "budget = 5\nbudgets = 7");
        assert!(matches!(
            Config::from_toml_str(&bad),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn termination_must_be_exactly_one_choice() {
        let none = MINIMAL.replace("budget = 5", "");
        assert!(matches!(
            Config::from_toml_str(&none),
            Err(ConfigError::TerminationChoice)
        ));
        let both = MINIMAL.replace("budget = 5", "budget = 5\nmass_target = 0.1");
        assert!(matches!(
            Config::from_toml_str(&both),
            Err(ConfigError::TerminationChoice)
        ));
    }

    #[test]
    fn obj_scene_requires_a_path() {
        let bad = MINIMAL.replace("kind = \"drill-like\"", "kind = \"obj\"");
        assert!(matches!(
            Config::from_toml_str(&bad),
            Err(ConfigError::MissingScenePath)
        ));
        let also_bad =
            MINIMAL.replace("kind = \"drill-like\"", "kind = \"door-like\"\npath = \"x.obj\"");
        assert!(matches!(
            Config::from_toml_str(&also_bad),
            Err(ConfigError::UnexpectedScenePath)
        ));
    }

    #[test]
    fn baseline_updates_use_the_gaussian_window() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!(
            c.model_for(Metric::Random),
            WeightingModel::Whp { sigma: 0.5 }
        );
        assert_eq!(
            c.model_for(Metric::Ig),
            WeightingModel::Ig {
                sigma: 0.5,
                squared: false
            }
        );
    }
}
