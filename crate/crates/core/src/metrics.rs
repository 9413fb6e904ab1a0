//! Action scoring: expected uncertainty reduction per unit execution cost.
//!
//! Every candidate action is scored against the current belief using one of
//! two objectives:
//!
//! * **Mass reduction** — the expected drop in total hypothesis mass. With
//!   outcome masses `m_o = sum_i w_i * k(o, pred_i)` and normalizer
//!   `Z = sum_o m_o` (NoContact counted with its multiplicity), the gain is
//!   `sum_o (m_o / Z) * (M - m_o)`. Under the binary or Gaussian kernels this
//!   expected reduction is adaptive submodular, which the greedy policies
//!   rely on.
//! * **Information gain** — the expected drop in differential entropy of a
//!   Gaussian fitted to the reweighted particle set, the classical baseline.
//!
//! Scores divide the gain by the action's execution cost. Predicted contact
//! times for all (action, particle) pairs are cached in a [`ContactTable`],
//! filled either eagerly (for naive greedy) or row-by-row on demand (for
//! lazy greedy, which typically touches only a few rows per round).

use rayon::prelude::*;
use thiserror::Error;

use crate::actions::{Action, ActionSet};
use crate::belief::{gaussian_entropy, Particle};
use crate::geometry::{Pose, Scene};
use crate::sensing::{
    predicted_observation, weight, Observation, ObservationSet, WeightingModel,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("action {action_id} is uninformative under the observation discretization (every outcome has zero mass)")]
    Uninformative { action_id: u32 },
    #[error("belief mass is zero while scoring action {action_id}")]
    Annihilated { action_id: u32 },
}

/// What an action's gain measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MassReduction,
    InformationGain,
}

/// Outcome masses for one action: per grid time, plus the NoContact bucket.
/// The normalizer counts the NoContact bucket once per multiplicity slot.
fn outcome_masses(
    row: &[Observation],
    weights: &[f64],
    obsset: &ObservationSet,
    model: &WeightingModel,
) -> (Vec<f64>, f64, f64) {
    let mut grid = vec![0.0; obsset.times.len()];
    let mut nc = 0.0;
    for (i, &pred) in row.iter().enumerate() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        match pred {
            Observation::NoContact => nc += w,
            Observation::Contact(_) => {
                for (j, &t) in obsset.times.iter().enumerate() {
                    grid[j] += w * weight(model, Observation::Contact(t), pred);
                }
            }
        }
    }
    let z = grid.iter().sum::<f64>() + obsset.nocontact_multiplicity as f64 * nc;
    (grid, nc, z)
}

/// Probability of each distinct observation outcome (grid times in order,
/// then NoContact aggregated over its multiplicity slots). Probabilities sum
/// to one; zero-probability outcomes are kept so rows align with
/// `obsset.distinct()`.
pub fn observation_probabilities(
    action_id: u32,
    row: &[Observation],
    weights: &[f64],
    obsset: &ObservationSet,
    model: &WeightingModel,
) -> Result<Vec<(Observation, f64)>, MetricsError> {
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) {
        return Err(MetricsError::Annihilated { action_id });
    }
    let (grid, nc, z) = outcome_masses(row, weights, obsset, model);
    if !(z > 0.0) {
        return Err(MetricsError::Uninformative { action_id });
    }
    let mut probs: Vec<(Observation, f64)> = obsset
        .times
        .iter()
        .zip(&grid)
        .map(|(&t, &m)| (Observation::Contact(t), m / z))
        .collect();
    probs.push((
        Observation::NoContact,
        obsset.nocontact_multiplicity as f64 * nc / z,
    ));
    Ok(probs)
}

/// Expected hypothesis-mass reduction of one action:
/// `sum_o p(o) * (M - m_o)` with `p(o) = m_o / Z`.
pub fn mass_reduction_gain(
    action_id: u32,
    row: &[Observation],
    weights: &[f64],
    obsset: &ObservationSet,
    model: &WeightingModel,
) -> Result<f64, MetricsError> {
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) {
        return Err(MetricsError::Annihilated { action_id });
    }
    let (grid, nc, z) = outcome_masses(row, weights, obsset, model);
    if !(z > 0.0) {
        return Err(MetricsError::Uninformative { action_id });
    }
    let mut gain = 0.0;
    for &m in &grid {
        gain += (m / z) * (mass - m);
    }
    gain += obsset.nocontact_multiplicity as f64 * (nc / z) * (mass - nc);
    Ok(gain)
}

/// Mean and covariance of particles under per-particle extra factors `k_i`
/// (the kernel agreement for one hypothetical outcome). Returns `None` when
/// the reweighted mass vanishes.
fn reweighted_covariance(
    particles: &[Particle],
    factor: impl Fn(usize) -> f64,
) -> Option<nalgebra::Matrix4<f64>> {
    let mut mass = 0.0;
    let mut mean = nalgebra::Vector4::zeros();
    for (i, p) in particles.iter().enumerate() {
        let w = p.weight * factor(i);
        mass += w;
        mean += w * p.pose.to_vector();
    }
    if !(mass > 0.0) {
        return None;
    }
    mean /= mass;
    let mut cov = nalgebra::Matrix4::zeros();
    for (i, p) in particles.iter().enumerate() {
        let w = p.weight * factor(i);
        if w == 0.0 {
            continue;
        }
        let d = p.pose.to_vector() - mean;
        cov += (w / mass) * (d * d.transpose());
    }
    Some(cov)
}

/// Expected entropy reduction of one action: current Gaussian entropy minus
/// the outcome-probability-weighted entropies of the reweighted beliefs.
/// Outcomes with zero mass contribute nothing.
pub fn information_gain(
    action_id: u32,
    row: &[Observation],
    particles: &[Particle],
    obsset: &ObservationSet,
    model: &WeightingModel,
    regularizer: f64,
) -> Result<f64, MetricsError> {
    let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let (grid, nc, z) = outcome_masses(row, &weights, obsset, model);
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(MetricsError::Annihilated { action_id });
    }
    if !(z > 0.0) {
        return Err(MetricsError::Uninformative { action_id });
    }
    let current = reweighted_covariance(particles, |_| 1.0)
        .expect("positive mass checked above");
    let h_now = gaussian_entropy(&current, regularizer);
    let mut expected = 0.0;
    for (j, &m) in grid.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let o = Observation::Contact(obsset.times[j]);
        let cov = reweighted_covariance(particles, |i| weight(model, o, row[i]))
            .expect("outcome mass is positive");
        expected += (m / z) * gaussian_entropy(&cov, regularizer);
    }
    if nc > 0.0 && obsset.nocontact_multiplicity > 0 {
        let cov = reweighted_covariance(particles, |i| {
            weight(model, Observation::NoContact, row[i])
        })
        .expect("nocontact mass is positive");
        expected += obsset.nocontact_multiplicity as f64 * (nc / z)
            * gaussian_entropy(&cov, regularizer);
    }
    Ok(h_now - expected)
}

/// Score of one action against the current belief.
#[derive(Debug, Clone)]
pub struct GainReport {
    pub action_id: u32,
    /// Expected objective improvement (mass removed, or entropy bits in nats).
    pub delta: f64,
    /// Execution cost in seconds.
    pub cost: f64,
    /// Benefit per cost: `delta / cost` — the greedy selection key.
    pub score: f64,
    /// Distinct outcomes and their probabilities (NoContact aggregated).
    pub probs: Vec<(Observation, f64)>,
}

/// Evaluate one action under the chosen objective.
pub fn evaluate_action(
    action: &Action,
    row: &[Observation],
    particles: &[Particle],
    obsset: &ObservationSet,
    model: &WeightingModel,
    objective: Objective,
    regularizer: f64,
) -> Result<GainReport, MetricsError> {
    let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let delta = match objective {
        Objective::MassReduction => {
            mass_reduction_gain(action.id, row, &weights, obsset, model)?
        }
        Objective::InformationGain => {
            information_gain(action.id, row, particles, obsset, model, regularizer)?
        }
    };
    let probs = observation_probabilities(action.id, row, &weights, obsset, model)?;
    let cost = action.cost();
    Ok(GainReport {
        action_id: action.id,
        delta,
        cost,
        score: delta / cost,
        probs,
    })
}

/// Cache of predicted observations, one row per action, one column per
/// particle. Rows are computed on demand (lazy greedy touches few) or all at
/// once in parallel (naive greedy needs every row anyway). The table is tied
/// to one particle set; rebuild it after resampling.
#[derive(Debug, Clone)]
pub struct ContactTable {
    rows: Vec<Option<Vec<Observation>>>,
}

impl ContactTable {
    pub fn new(n_actions: usize) -> Self {
        ContactTable {
            rows: vec![None; n_actions],
        }
    }

    pub fn row(&self, action_id: u32) -> Option<&[Observation]> {
        self.rows[action_id as usize].as_deref()
    }

    /// Number of rows computed so far.
    pub fn rows_computed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    fn compute_row(action: &Action, poses: &[Pose], scene: &Scene) -> Vec<Observation> {
        poses
            .par_iter()
            .map(|pose| predicted_observation(action, pose, scene))
            .collect()
    }

    /// Compute (if needed) and return the row for one action.
    pub fn ensure_row(
        &mut self,
        action: &Action,
        poses: &[Pose],
        scene: &Scene,
    ) -> &[Observation] {
        let slot = &mut self.rows[action.id as usize];
        if slot.is_none() {
            *slot = Some(Self::compute_row(action, poses, scene));
        }
        slot.as_deref().unwrap()
    }

    /// Compute every row, parallelizing across actions.
    pub fn fill_all(&mut self, actions: &ActionSet, poses: &[Pose], scene: &Scene) {
        let computed: Vec<Vec<Observation>> = actions
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|action| {
                poses
                    .iter()
                    .map(|pose| predicted_observation(action, pose, scene))
                    .collect()
            })
            .collect();
        for (i, row) in computed.into_iter().enumerate() {
            self.rows[i] = Some(row);
        }
    }
}
