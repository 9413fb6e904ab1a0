//! Sensing model: observations, likelihood kernels, and discretization.
//!
//! Executing a guarded move yields one observation: the time along the
//! trajectory at which contact was detected, or NoContact when the move
//! completed at full length. For planning, each action's continuous contact
//! time is discretized onto a fixed grid of times plus a NoContact bucket
//! (optionally with multiplicity, see [`ObservationSet`]).
//!
//! Three kernels weight a hypothesis's predicted contact time against an
//! observation: a hard acceptance window (binary), a Gaussian window
//! (smooth), and the information-gain likelihood (exponential in the
//! absolute — optionally squared — time difference).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::actions::Action;
use crate::geometry::{Pose, Scene};

/// Outcome of executing (or simulating) a guarded move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Contact detected this many seconds into the trajectory.
    Contact(f64),
    /// The move ran its full length without touching anything.
    NoContact,
}

impl Observation {
    /// Stable label used in CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            Observation::Contact(_) => "contact",
            Observation::NoContact => "nocontact",
        }
    }

    /// Time column for CSV output; NaN marks NoContact.
    pub fn time_or_nan(&self) -> f64 {
        match self {
            Observation::Contact(t) => *t,
            Observation::NoContact => f64::NAN,
        }
    }
}

/// The discrete outcome space of one action: a grid of contact times plus a
/// NoContact bucket. The bucket can carry a multiplicity K, in which case it
/// stands for K formally distinct outcomes that all weight hypotheses the
/// same way; probability mass assigned to NoContact is then split evenly
/// across the K slots (and reported in aggregate).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub nocontact_multiplicity: usize,
}

impl ObservationSet {
    /// Total number of formal outcomes (grid times plus NoContact slots).
    pub fn outcome_count(&self) -> usize {
        self.times.len() + self.nocontact_multiplicity
    }

    /// Iterate the distinct observation values (NoContact once, regardless of
    /// multiplicity).
    pub fn distinct(&self) -> impl Iterator<Item = Observation> + '_ {
        self.times
            .iter()
            .map(|&t| Observation::Contact(t))
            .chain(std::iter::once(Observation::NoContact))
    }

    /// Snap a continuous observation onto this set: nearest grid time (ties
    /// to the earlier time), NoContact maps to NoContact.
    pub fn snap(&self, obs: Observation) -> Observation {
        match obs {
            Observation::NoContact => Observation::NoContact,
            Observation::Contact(t) => {
                let mut best = self.times[0];
                let mut best_d = (t - best).abs();
                for &g in &self.times[1..] {
                    let d = (t - g).abs();
                    if d < best_d {
                        best = g;
                        best_d = d;
                    }
                }
                Observation::Contact(best)
            }
        }
    }
}

/// Likelihood kernel weighting an observation `o` against a hypothesis's
/// predicted contact time for the same action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightingModel {
    /// Binary acceptance window: weight 1 iff |o - predicted| <= d_t.
    Hp { d_t: f64 },
    /// Gaussian window: exp(-(o - predicted)^2 / (2 sigma^2)).
    Whp { sigma: f64 },
    /// Information-gain likelihood: exp(-|o - predicted| / (2 sigma^2)); with
    /// `squared` it becomes the Gaussian window instead.
    Ig { sigma: f64, squared: bool },
}

/// Weight of observing `obs` when the hypothesis predicts `predicted`.
///
/// NoContact conventions apply to every kernel: two NoContacts agree fully
/// (weight 1); a NoContact against a finite prediction, or vice versa,
/// disagrees fully (weight 0).
pub fn weight(model: &WeightingModel, obs: Observation, predicted: Observation) -> f64 {
    let (o, p) = match (obs, predicted) {
        (Observation::NoContact, Observation::NoContact) => return 1.0,
        (Observation::NoContact, _) | (_, Observation::NoContact) => return 0.0,
        (Observation::Contact(o), Observation::Contact(p)) => (o, p),
    };
    let diff = o - p;
    match *model {
        WeightingModel::Hp { d_t } => {
            if diff.abs() <= d_t {
                1.0
            } else {
                0.0
            }
        }
        WeightingModel::Whp { sigma } => (-(diff * diff) / (2.0 * sigma * sigma)).exp(),
        WeightingModel::Ig { sigma, squared } => {
            let numerator = if squared { diff * diff } else { diff.abs() };
            (-numerator / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// Discretize an action's trajectory into contact times `0, spacing,
/// 2*spacing, ...` up to and including its duration (within a small slack so
/// a duration that is an exact multiple of the spacing keeps its last
/// sample), plus a NoContact bucket of multiplicity `k`.
pub fn discretize_observations(action: &Action, spacing: f64, k: usize) -> ObservationSet {
    assert!(spacing > 0.0, "observation spacing must be positive");
    let duration = action.duration();
    let mut times = Vec::new();
    let mut i = 0usize;
    loop {
        let t = i as f64 * spacing;
        if t > duration + 1e-9 {
            break;
        }
        times.push(t);
        i += 1;
    }
    if times.is_empty() {
        times.push(0.0);
    }
    ObservationSet {
        times,
        nocontact_multiplicity: k,
    }
}

/// The observation `action` would produce, noise-free, if the object sat
/// exactly at `pose` — the predicted contact time a hypothesis is scored on.
pub fn predicted_observation(action: &Action, pose: &Pose, scene: &Scene) -> Observation {
    match crate::actions::contact_time(action, pose, scene) {
        Some(t) => Observation::Contact(t),
        None => Observation::NoContact,
    }
}

/// Simulate executing `action` with the object at `truth`: the exact contact
/// time perturbed by Gaussian noise (clamped to the trajectory), or NoContact
/// when the move misses. `noise_sigma <= 0` disables noise.
pub fn simulate_observation<R: Rng>(
    action: &Action,
    truth: &Pose,
    scene: &Scene,
    noise_sigma: f64,
    rng: &mut R,
) -> Observation {
    match crate::actions::contact_time(action, truth, scene) {
        None => Observation::NoContact,
        Some(t) => {
            let noisy = if noise_sigma > 0.0 {
                let normal = Normal::new(0.0, noise_sigma).expect("valid noise sigma");
                (t + normal.sample(rng)).clamp(0.0, action.duration())
            } else {
                t
            };
            Observation::Contact(noisy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{unit_cube, SensorRig};
    use approx::assert_relative_eq;
    use nalgebra::{Point3, Vector3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn action_with_duration(duration: f64) -> Action {
        Action {
            id: 0,
            start: Pose::identity(),
            direction: Vector3::new(1.0, 0.0, 0.0),
            length: duration, // speed 1 => duration == length
            speed: 1.0,
            fixed_time: 0.0,
        }
    }

    #[test]
    fn hard_window_includes_its_edge() {
        // 0.25 is exactly representable, so the edge case is bit-exact.
        let m = WeightingModel::Hp { d_t: 0.25 };
        let w = |o, p| weight(&m, Observation::Contact(o), Observation::Contact(p));
        assert_eq!(w(1.0, 1.25), 1.0);
        assert_eq!(w(1.0, 1.250000001), 0.0);
        assert_eq!(w(2.0, 2.0), 1.0);
    }

    #[test]
    fn gaussian_window_halves_at_sigma_sqrt_2ln2() {
        let sigma = 0.5;
        let m = WeightingModel::Whp { sigma };
        let half_width = sigma * (2.0 * 2.0f64.ln()).sqrt();
        let w = weight(
            &m,
            Observation::Contact(0.0),
            Observation::Contact(half_width),
        );
        assert_relative_eq!(w, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ig_kernel_uses_absolute_difference_unless_squared() {
        let sigma = 0.5;
        let abs_m = WeightingModel::Ig {
            sigma,
            squared: false,
        };
        let sq_m = WeightingModel::Ig {
            sigma,
            squared: true,
        };
        let o = Observation::Contact(0.0);
        let p = Observation::Contact(2.0);
        assert_relative_eq!(weight(&abs_m, o, p), (-2.0 / 0.5f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(weight(&sq_m, o, p), (-4.0 / 0.5f64).exp(), epsilon = 1e-12);
        // The squared variant coincides with the Gaussian window.
        assert_relative_eq!(
            weight(&sq_m, o, p),
            weight(&WeightingModel::Whp { sigma }, o, p),
            epsilon = 1e-15
        );
    }

    #[test]
    fn nocontact_agreement_rules_hold_for_every_kernel() {
        for m in [
            WeightingModel::Hp { d_t: 1.0 },
            WeightingModel::Whp { sigma: 0.5 },
            WeightingModel::Ig {
                sigma: 0.5,
                squared: false,
            },
        ] {
            assert_eq!(weight(&m, Observation::NoContact, Observation::NoContact), 1.0);
            assert_eq!(weight(&m, Observation::NoContact, Observation::Contact(1.0)), 0.0);
            assert_eq!(weight(&m, Observation::Contact(1.0), Observation::NoContact), 0.0);
        }
    }

    #[test]
    fn discretization_includes_zero_and_the_duration_multiple() {
        let set = discretize_observations(&action_with_duration(10.0), 1.0, 1);
        assert_eq!(set.times.len(), 11);
        assert_eq!(set.times[0], 0.0);
        assert_eq!(set.times[10], 10.0);
        assert_eq!(set.nocontact_multiplicity, 1);
        assert_eq!(set.outcome_count(), 12);
    }

    #[test]
    fn spacing_larger_than_duration_still_yields_time_zero() {
        let set = discretize_observations(&action_with_duration(0.4), 1.0, 3);
        assert_eq!(set.times, vec![0.0]);
        assert_eq!(set.outcome_count(), 4);
    }

    #[test]
    fn snap_picks_the_nearest_grid_time() {
        let set = discretize_observations(&action_with_duration(3.0), 1.0, 1);
        assert_eq!(set.snap(Observation::Contact(1.4)), Observation::Contact(1.0));
        assert_eq!(set.snap(Observation::Contact(1.6)), Observation::Contact(2.0));
        assert_eq!(set.snap(Observation::NoContact), Observation::NoContact);
    }

    #[test]
    fn simulated_noise_is_centered_and_clamped() {
        let scene = Scene::new(
            unit_cube(Point3::new(2.0, 0.0, 0.0)),
            SensorRig::single_point(),
        );
        let action = Action {
            id: 0,
            start: Pose::identity(),
            direction: Vector3::new(1.0, 0.0, 0.0),
            length: 3.0,
            speed: 1.0,
            fixed_time: 0.0,
        }; // exact contact at t = 1.5
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            match simulate_observation(&action, &Pose::identity(), &scene, 0.1, &mut rng) {
                Observation::Contact(t) => {
                    assert!((0.0..=3.0).contains(&t));
                    sum += t;
                }
                Observation::NoContact => panic!("cube should always be hit"),
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.5).abs() < 0.01, "noisy mean {mean}");
    }

    #[test]
    fn miss_yields_nocontact_and_zero_noise_is_exact() {
        let scene = Scene::new(
            unit_cube(Point3::new(2.0, 0.0, 0.0)),
            SensorRig::single_point(),
        );
        let short = Action {
            id: 0,
            start: Pose::identity(),
            direction: Vector3::new(1.0, 0.0, 0.0),
            length: 1.0,
            speed: 1.0,
            fixed_time: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            simulate_observation(&short, &Pose::identity(), &scene, 0.1, &mut rng),
            Observation::NoContact
        );
        let long = Action { length: 3.0, ..short };
        assert_eq!(
            simulate_observation(&long, &Pose::identity(), &scene, 0.0, &mut rng),
            Observation::Contact(1.5)
        );
    }
}
