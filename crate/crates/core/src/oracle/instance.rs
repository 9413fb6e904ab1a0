//! Small abstract localization instances for exhaustive verification.
//!
//! A tiny instance strips away all geometry: a handful of hypotheses with
//! explicit priors, a few actions with explicit costs, and a fixed response
//! (grid contact time or NoContact) for every (hypothesis, action) pair.
//! Everything the selection theory depends on — kernels, outcome grids,
//! NoContact multiplicity — is preserved, so brute-force enumeration over
//! these instances exercises exactly the quantities the production code
//! computes on meshes.
//!
//! Responses sit exactly on grid times, and generators keep them at least a
//! margin away from the grid edges. That gives every response the same local
//! candidate pattern, making the per-action kernel sum over candidates
//! constant across hypotheses (`kappa_constant`), which is what ties the
//! copy-space observation probabilities to the closed-form ones. Instances
//! built with free response placement (or NoContact under the Gaussian
//! kernel) lose that property but still satisfy objective equivalence.

use rand::Rng;

use crate::sensing::{Observation, ObservationSet, WeightingModel};

/// Weights below this are treated as impossible when enumerating noisy-copy
/// candidates.
pub const CANDIDATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TinyAction {
    pub cost: f64,
    pub obsset: ObservationSet,
}

#[derive(Debug, Clone)]
pub struct TinyInstance {
    /// Hypothesis priors; positive, summing to one.
    pub priors: Vec<f64>,
    /// `responses[h][a]`: the observation hypothesis `h` produces for action
    /// `a`, noise-free. Contact times coincide with grid times.
    pub responses: Vec<Vec<Observation>>,
    pub actions: Vec<TinyAction>,
    pub model: WeightingModel,
    /// Whether the construction guarantees the kernel sum over candidates is
    /// the same for every hypothesis of each action (see module docs).
    pub kappa_constant: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("priors must be positive and sum to one (sum = {sum})")]
    BadPriors { sum: f64 },
    #[error("hypothesis {hyp} has {got} responses, expected {expected}")]
    ResponseShape {
        hyp: usize,
        got: usize,
        expected: usize,
    },
    #[error("hypothesis {hyp}, action {action}: contact response {time} is not a grid time")]
    OffGridResponse {
        hyp: usize,
        action: usize,
        time: f64,
    },
    #[error(
        "instance too large for exhaustive checking: {hypotheses} hypotheses, \
         {actions} actions, {copies} noisy copies (caps: 8 / 5 / 100000)"
    )]
    TooLarge {
        hypotheses: usize,
        actions: usize,
        copies: usize,
    },
}

impl TinyInstance {
    pub fn n_hypotheses(&self) -> usize {
        self.priors.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Responses of every hypothesis to one action — the analogue of a
    /// contact-table row, ordered by hypothesis index.
    pub fn row(&self, action: usize) -> Vec<Observation> {
        self.responses.iter().map(|r| r[action]).collect()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let sum: f64 = self.priors.iter().sum();
        if self.priors.iter().any(|&p| !(p > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(InstanceError::BadPriors { sum });
        }
        for (h, resp) in self.responses.iter().enumerate() {
            if resp.len() != self.actions.len() {
                return Err(InstanceError::ResponseShape {
                    hyp: h,
                    got: resp.len(),
                    expected: self.actions.len(),
                });
            }
            for (a, obs) in resp.iter().enumerate() {
                if let Observation::Contact(t) = obs {
                    if !self.actions[a].obsset.times.iter().any(|&g| g == *t) {
                        return Err(InstanceError::OffGridResponse {
                            hyp: h,
                            action: a,
                            time: *t,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Random positive priors summing to one, each at least `min_prior`.
fn random_priors<R: Rng>(n: usize, min_prior: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let priors: Vec<f64> = raw.iter().map(|r| r / sum).collect();
        if priors.iter().all(|&p| p >= min_prior) {
            return priors;
        }
    }
}

/// Knobs for the random instance generators.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub max_hypotheses: usize,
    pub max_actions: usize,
    /// Probability that a response is NoContact (where the family allows it).
    pub nocontact_prob: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            max_hypotheses: 6,
            max_actions: 4,
            nocontact_prob: 0.25,
        }
    }
}

/// Random instance under the binary window kernel. The window spans `margin`
/// grid steps on each side (`d_t = margin + 0.49` at unit spacing), so every
/// contact response has exactly `2 * margin + 1` candidate observations; the
/// NoContact bucket multiplicity matches, keeping the kernel sums constant.
pub fn gen_hp_instance<R: Rng>(params: &GeneratorParams, rng: &mut R) -> TinyInstance {
    let n_h = rng.gen_range(2..=params.max_hypotheses);
    let n_a = rng.gen_range(2..=params.max_actions);
    let margin: usize = if rng.gen_bool(0.5) { 0 } else { 1 };
    let k = 2 * margin + 1;
    let mut actions = Vec::with_capacity(n_a);
    for _ in 0..n_a {
        let interior = rng.gen_range(2..=4); // distinct response slots
        let g = interior + 2 * margin;
        actions.push(TinyAction {
            cost: rng.gen_range(0.5..3.0),
            obsset: ObservationSet {
                times: (0..g).map(|i| i as f64).collect(),
                nocontact_multiplicity: k,
            },
        });
    }
    let responses = random_responses(n_h, &actions, margin, params.nocontact_prob, rng);
    TinyInstance {
        priors: random_priors(n_h, 0.02, rng),
        responses,
        actions,
        model: WeightingModel::Hp {
            d_t: margin as f64 + 0.49,
        },
        kappa_constant: true,
    }
}

/// Random instance under the Gaussian window kernel. With `sigma = 0.15` at
/// unit spacing, candidate weights fall below [`CANDIDATE_EPS`] beyond one
/// grid step, so each contact response has exactly 3 candidates. All-contact
/// responses keep the kernel sums constant; allowing NoContact (whose slot
/// weights are exactly 1) breaks that but preserves objective equivalence.
///
/// The candidate cutoff truncates the Gaussian tail, so the copy space only
/// approximates the untruncated kernel the planner computes with. The
/// dropped tail is `exp(-2/sigma^2)` per observation, while surviving mass
/// can shrink by `exp(-1/(2 sigma^2))` per observation, so the relative
/// error of a probability check after `j` observations is of order
/// `exp((j/2 - 2)/sigma^2)`. The three-candidate family therefore keeps at
/// most three actions (error ~1e-18 at `sigma = 0.15`); the one-candidate
/// family is safe at any depth because survivors always observe their own
/// response exactly.
pub fn gen_whp_instance<R: Rng>(
    params: &GeneratorParams,
    allow_nocontact: bool,
    rng: &mut R,
) -> TinyInstance {
    let n_h = rng.gen_range(2..=params.max_hypotheses);
    let (sigma, margin) = if rng.gen_bool(0.5) {
        (0.15, 1usize) // K = 3
    } else {
        (0.1, 0usize) // K = 1
    };
    let n_a = rng.gen_range(2..=params.max_actions.min(if margin == 1 { 3 } else { 5 }));
    let k = 2 * margin + 1;
    let mut actions = Vec::with_capacity(n_a);
    for _ in 0..n_a {
        let interior = rng.gen_range(2..=4);
        let g = interior + 2 * margin;
        actions.push(TinyAction {
            cost: rng.gen_range(0.5..3.0),
            obsset: ObservationSet {
                times: (0..g).map(|i| i as f64).collect(),
                nocontact_multiplicity: k,
            },
        });
    }
    let nc_prob = if allow_nocontact {
        params.nocontact_prob
    } else {
        0.0
    };
    let responses = random_responses(n_h, &actions, margin, nc_prob, rng);
    TinyInstance {
        priors: random_priors(n_h, 0.02, rng),
        responses,
        actions,
        model: WeightingModel::Whp { sigma },
        kappa_constant: !allow_nocontact,
    }
}

fn random_responses<R: Rng>(
    n_h: usize,
    actions: &[TinyAction],
    margin: usize,
    nocontact_prob: f64,
    rng: &mut R,
) -> Vec<Vec<Observation>> {
    (0..n_h)
        .map(|_| {
            actions
                .iter()
                .map(|a| {
                    if nocontact_prob > 0.0 && rng.gen_bool(nocontact_prob) {
                        Observation::NoContact
                    } else {
                        let g = a.obsset.times.len();
                        let slot = rng.gen_range(margin..g - margin);
                        Observation::Contact(a.obsset.times[slot])
                    }
                })
                .collect()
        })
        .collect()
}

/// A mixed stream of instances from all families, for property suites.
pub fn gen_mixed_instance<R: Rng>(params: &GeneratorParams, rng: &mut R) -> TinyInstance {
    match rng.gen_range(0..3) {
        0 => gen_hp_instance(params, rng),
        1 => gen_whp_instance(params, false, rng),
        _ => gen_whp_instance(params, true, rng),
    }
}
