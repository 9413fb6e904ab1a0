//! Particle belief over object poses, with multiplicative weight updates.
//!
//! The object's unknown pose is represented by a fixed set of hypotheses
//! (particles) carrying non-negative weights. Each executed action multiplies
//! every particle's weight by the sensing kernel's agreement between the
//! observed and the particle's predicted contact time; weights are never
//! renormalized, so the remaining total mass directly measures how much prior
//! probability is still consistent with the history. Uncertainty reduction is
//! tracked as `1 - mass`, and spatial uncertainty via the weighted pose
//! covariance.
//!
//! Resampling (for long episodes) redraws particles in proportion to weight
//! and hands each an equal share of the pre-resample mass, so the total is
//! preserved and later mass-reduction gains remain comparable with earlier
//! ones.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::actions::{Action, ActionSet};
use crate::geometry::{normalize_angle, Pose, Scene};
use crate::sensing::{predicted_observation, weight, Observation, WeightingModel};

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("belief must contain at least one particle")]
    Empty,
    #[error("action {id} already appears in the history")]
    ActionRepeated { id: u32 },
    #[error("belief mass is zero; no hypothesis is consistent with the history")]
    Annihilated,
}

/// One pose hypothesis and its unnormalized weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose,
    pub weight: f64,
}

/// Weighted particle set. Weights start as prior probabilities (summing to
/// one for a fresh belief) and only ever shrink multiplicatively.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief {
    particles: Vec<Particle>,
}

impl ParticleBelief {
    pub fn new(particles: Vec<Particle>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        Ok(ParticleBelief { particles })
    }

    /// Equal-weight particles at explicit poses (weights sum to one).
    pub fn from_poses(poses: Vec<Pose>) -> Result<Self, BeliefError> {
        if poses.is_empty() {
            return Err(BeliefError::Empty);
        }
        let w = 1.0 / poses.len() as f64;
        Ok(ParticleBelief {
            particles: poses
                .into_iter()
                .map(|pose| Particle { pose, weight: w })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose> {
        self.particles.iter().map(|p| &p.pose)
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Whether every hypothesis has been ruled out.
    pub fn annihilated(&self) -> bool {
        !(self.total_mass() > 0.0)
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2`: how many equally
    /// weighted particles the current weights are worth. Zero for an
    /// annihilated belief.
    pub fn effective_sample_size(&self) -> f64 {
        let sum: f64 = self.particles.iter().map(|p| p.weight).sum();
        let sum_sq: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        if sum_sq > 0.0 {
            sum * sum / sum_sq
        } else {
            0.0
        }
    }

    /// Multiply each particle's weight by the kernel agreement between the
    /// observation and that particle's precomputed predicted observation.
    /// `predicted` must align index-for-index with the particles.
    pub fn apply_row(
        &mut self,
        predicted: &[Observation],
        obs: Observation,
        model: &WeightingModel,
    ) {
        assert_eq!(predicted.len(), self.particles.len());
        for (particle, &pred) in self.particles.iter_mut().zip(predicted) {
            particle.weight *= weight(model, obs, pred);
        }
    }

    /// Convenience: predict per-particle contacts for `action` and apply the
    /// observation in one shot.
    pub fn apply_observation(
        &mut self,
        action: &Action,
        obs: Observation,
        model: &WeightingModel,
        scene: &Scene,
    ) {
        let predicted: Vec<Observation> = self
            .particles
            .iter()
            .map(|p| predicted_observation(action, &p.pose, scene))
            .collect();
        self.apply_row(&predicted, obs, model);
    }

    /// Mass-weighted mean pose vector (x, y, z, theta). Theta is averaged
    /// linearly; priors here are tight enough that hypotheses never straddle
    /// the angle wrap.
    pub fn weighted_mean(&self) -> Result<Vector4<f64>, BeliefError> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(BeliefError::Annihilated);
        }
        let mut mean = Vector4::zeros();
        for p in &self.particles {
            mean += p.weight * p.pose.to_vector();
        }
        Ok(mean / mass)
    }

    /// Mass-weighted population covariance of (x, y, z, theta).
    pub fn weighted_covariance(&self) -> Result<Matrix4<f64>, BeliefError> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(BeliefError::Annihilated);
        }
        let mean = self.weighted_mean()?;
        let mut cov = Matrix4::zeros();
        for p in &self.particles {
            let d = p.pose.to_vector() - mean;
            cov += (p.weight / mass) * (d * d.transpose());
        }
        Ok(cov)
    }

    /// Redraw `self.len()` particles via systematic resampling and give every
    /// survivor an equal share of the pre-resample mass (so `total_mass` is
    /// preserved exactly up to rounding). Each redrawn pose is jittered by a
    /// zero-mean Gaussian with per-axis deviation `jitter_std`; theta is
    /// renormalized into (-pi, pi].
    pub fn systematic_resample<R: Rng>(
        &mut self,
        jitter_std: &[f64; 4],
        rng: &mut R,
    ) -> Result<(), BeliefError> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(BeliefError::Annihilated);
        }
        let n = self.particles.len();
        let step = mass / n as f64;
        let start = rng.gen::<f64>() * step;
        let mut cumulative = self.particles[0].weight;
        let mut idx = 0usize;
        let jitter = |std: f64, rng: &mut R| -> f64 {
            if std > 0.0 {
                Normal::new(0.0, std).expect("valid std").sample(rng)
            } else {
                0.0
            }
        };
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let position = start + i as f64 * step;
            while cumulative < position && idx + 1 < n {
                idx += 1;
                cumulative += self.particles[idx].weight;
            }
            let src = self.particles[idx].pose;
            let pose = Pose::new(
                src.x + jitter(jitter_std[0], rng),
                src.y + jitter(jitter_std[1], rng),
                src.z + jitter(jitter_std[2], rng),
                normalize_angle(src.theta + jitter(jitter_std[3], rng)),
            );
            next.push(Particle { pose, weight: step });
        }
        self.particles = next;
        Ok(())
    }
}

/// Draw an initial belief: `n` equal-weight particles sampled from an
/// axis-aligned Gaussian around the sensed pose with the given per-axis
/// *variances* (x, y, z in meters^2, theta in radians^2).
pub fn init_belief<R: Rng>(
    sensed: &Pose,
    prior_variances: &[f64; 4],
    n: usize,
    rng: &mut R,
) -> Result<ParticleBelief, BeliefError> {
    if n == 0 {
        return Err(BeliefError::Empty);
    }
    let stds = prior_variances.map(f64::sqrt);
    let draw = |mean: f64, std: f64, rng: &mut R| -> f64 {
        if std > 0.0 {
            mean + Normal::new(0.0, std).expect("valid std").sample(rng)
        } else {
            mean
        }
    };
    let mut poses = Vec::with_capacity(n);
    for _ in 0..n {
        poses.push(Pose::new(
            draw(sensed.x, stds[0], rng),
            draw(sensed.y, stds[1], rng),
            draw(sensed.z, stds[2], rng),
            normalize_angle(draw(sensed.theta, stds[3], rng)),
        ));
    }
    ParticleBelief::from_poses(poses)
}

/// Differential entropy of a Gaussian fitted to the belief covariance:
/// `0.5 * ln((2*pi*e)^4 * det(cov + reg*I))`. The regularizer keeps the
/// determinant positive once some dimensions collapse.
pub fn gaussian_entropy(cov: &Matrix4<f64>, regularizer: f64) -> f64 {
    let regularized = cov + Matrix4::identity() * regularizer;
    let det = regularized.determinant().max(f64::MIN_POSITIVE);
    0.5 * ((2.0 * std::f64::consts::PI * std::f64::consts::E).powi(4) * det).ln()
}

/// One executed step: which action ran and what it observed (already snapped
/// to the action's observation grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryStep {
    pub action_id: u32,
    pub observation: Observation,
}

/// Ordered record of executed actions and their outcomes. Guarded moves are
/// never repeated, so pushing a duplicate action id is an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    steps: Vec<HistoryStep>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, action_id: u32, observation: Observation) -> Result<(), BeliefError> {
        if self.steps.iter().any(|s| s.action_id == action_id) {
            return Err(BeliefError::ActionRepeated { id: action_id });
        }
        self.steps.push(HistoryStep {
            action_id,
            observation,
        });
        Ok(())
    }

    pub fn steps(&self) -> &[HistoryStep] {
        &self.steps
    }

    pub fn contains(&self, action_id: u32) -> bool {
        self.steps.iter().any(|s| s.action_id == action_id)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Recompute the belief mass from scratch for a history: each initial
/// particle's weight times the product of kernel agreements along the whole
/// history. Incremental updates must match this replay — the consistency
/// check behind the self-certifying property tests.
pub fn replay_mass(
    initial: &ParticleBelief,
    history: &History,
    actions: &ActionSet,
    model: &WeightingModel,
    scene: &Scene,
) -> f64 {
    initial
        .particles()
        .iter()
        .map(|p| {
            let mut w = p.weight;
            for step in history.steps() {
                let action = actions.get(step.action_id);
                let predicted = predicted_observation(action, &p.pose, scene);
                w *= weight(model, step.observation, predicted);
            }
            w
        })
        .sum()
}
