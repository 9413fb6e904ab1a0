//! Definitional checks of the two structural properties behind the greedy
//! guarantee, evaluated with the production gain formulas.
//!
//! *Diminishing returns under refinement* (adaptive submodularity): for any
//! pair of consistent histories where one extends the other, the expected
//! one-step mass-reduction gain of any remaining action cannot grow with
//! the longer history.
//!
//! *Strong monotonicity*: no observation can leave more surviving weighted
//! mass than was there before it, for any history, action, and outcome —
//! this is exactly "kernel weights never exceed one" summed over the belief.
//!
//! Both are checked literally: sample random consistent histories on random
//! tiny instances, compute both sides with the same code paths the planner
//! uses, and report the worst violation found.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::metrics::mass_reduction_gain;
use crate::sensing::{weight, Observation};

use super::instance::TinyInstance;

/// Worst violation found over a batch of randomized trials. Values at or
/// below numerical noise mean the property held.
#[derive(Debug, Clone, Copy)]
pub struct ViolationReport {
    pub trials: usize,
    pub max_violation: f64,
}

impl ViolationReport {
    fn record(&mut self, violation: f64) {
        self.trials += 1;
        if violation > self.max_violation {
            self.max_violation = violation;
        }
    }
}

/// Draw an observation for one action: usually the truth hypothesis's
/// response, sometimes an arbitrary grid time or NoContact, so histories mix
/// sharp and contradictory evidence.
fn sample_observation<R: Rng>(
    instance: &TinyInstance,
    action: usize,
    truth: usize,
    rng: &mut R,
) -> Observation {
    if rng.gen_bool(0.7) {
        instance.responses[truth][action]
    } else if rng.gen_bool(0.2) {
        Observation::NoContact
    } else {
        let times = &instance.actions[action].obsset.times;
        Observation::Contact(times[rng.gen_range(0..times.len())])
    }
}

fn posterior_weights(instance: &TinyInstance, history: &[(usize, Observation)]) -> Vec<f64> {
    (0..instance.n_hypotheses())
        .map(|h| {
            let mut w = instance.priors[h];
            for &(a, obs) in history {
                w *= weight(&instance.model, obs, instance.responses[h][a]);
            }
            w
        })
        .collect()
}

/// Check `gain(a | longer history) <= gain(a | its prefix)` on randomly
/// nested consistent histories. Positive `max_violation` above numerical
/// noise disproves the property.
pub fn check_adaptive_submodularity<R: Rng>(
    instance: &TinyInstance,
    trials: usize,
    rng: &mut R,
) -> ViolationReport {
    let n_a = instance.n_actions();
    let mut report = ViolationReport {
        trials: 0,
        max_violation: f64::NEG_INFINITY,
    };
    let mut order: Vec<usize> = (0..n_a).collect();

    while report.trials < trials {
        let mut found = None;
        for _ in 0..30 {
            order.shuffle(rng);
            let target = order[0];
            let y_len = rng.gen_range(0..n_a); // actions available after the target
            let x_len = rng.gen_range(0..=y_len);
            let truth = rng.gen_range(0..instance.n_hypotheses());
            let history_y: Vec<(usize, Observation)> = order[1..1 + y_len]
                .iter()
                .map(|&a| (a, sample_observation(instance, a, truth, rng)))
                .collect();
            let weights_y = posterior_weights(instance, &history_y);
            if weights_y.iter().sum::<f64>() > 0.0 {
                found = Some((target, history_y, x_len));
                break;
            }
        }
        let Some((target, history_y, x_len)) = found else {
            // Degenerate instance; record a non-violation and move on.
            report.record(f64::NEG_INFINITY);
            continue;
        };
        let history_x = &history_y[..x_len];

        let row = instance.row(target);
        let obsset = &instance.actions[target].obsset;
        let gain_x = mass_reduction_gain(
            target as u32,
            &row,
            &posterior_weights(instance, history_x),
            obsset,
            &instance.model,
        )
        .expect("surviving mass keeps the gain defined");
        let gain_y = mass_reduction_gain(
            target as u32,
            &row,
            &posterior_weights(instance, &history_y),
            obsset,
            &instance.model,
        )
        .expect("surviving mass keeps the gain defined");
        report.record(gain_y - gain_x);
    }
    report
}

/// Check that no single observation can increase surviving weighted mass:
/// `sum_h w_h * kernel(o, response_h) <= sum_h w_h` for random histories,
/// actions, and outcomes (NoContact included).
pub fn check_strong_monotonicity<R: Rng>(
    instance: &TinyInstance,
    trials: usize,
    rng: &mut R,
) -> ViolationReport {
    let n_a = instance.n_actions();
    let mut report = ViolationReport {
        trials: 0,
        max_violation: f64::NEG_INFINITY,
    };
    let mut order: Vec<usize> = (0..n_a).collect();

    while report.trials < trials {
        order.shuffle(rng);
        let target = order[0];
        let len = rng.gen_range(0..n_a);
        let truth = rng.gen_range(0..instance.n_hypotheses());
        let history: Vec<(usize, Observation)> = order[1..1 + len]
            .iter()
            .map(|&a| (a, sample_observation(instance, a, truth, rng)))
            .collect();
        let weights = posterior_weights(instance, &history);
        let total: f64 = weights.iter().sum();

        let obsset = &instance.actions[target].obsset;
        let outcome = {
            let n_t = obsset.times.len();
            let pick = rng.gen_range(0..=n_t);
            if pick == n_t {
                Observation::NoContact
            } else {
                Observation::Contact(obsset.times[pick])
            }
        };
        let after: f64 = weights
            .iter()
            .enumerate()
            .map(|(h, w)| w * weight(&instance.model, outcome, instance.responses[h][target]))
            .sum();
        report.record(after - total);
    }
    report
}
