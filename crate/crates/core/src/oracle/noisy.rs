//! Explicit noisy-copy construction and equivalence with the efficient form.
//!
//! Noisy sensing breaks the one-observation-per-realization assumption the
//! greedy guarantees are built on. The fix: replace each hypothesis by a set
//! of deterministic *copies*, one per combination of candidate observations
//! (per action: every grid time whose kernel weight against the hypothesis's
//! response exceeds a negligible epsilon, or K formally distinct NoContact
//! slots). A copy's probability is the hypothesis prior times the normalized
//! kernel weights of its assigned observations.
//!
//! The objective over copies rescales each hypothesis by, per executed
//! action, the ratio of its prior to the highest-probability single-action
//! copy. Because the kernel weight of a hypothesis's own response is exactly
//! one, that rescaling cancels the per-action normalizers, and the explicit
//! objective collapses to the efficient closed form `1 - sum_h p(h) * prod
//! w` for any kernel. Observation probabilities additionally match the
//! closed form when the kernel sum over candidates is constant per action
//! (`kappa_constant` instances).
//!
//! This module computes everything literally from the copies — survivor
//! filtering, rescaling factors from single-action copy maxima — so it
//! serves as an independent oracle against the production formulas.

use std::collections::BTreeSet;

use crate::metrics::observation_probabilities;
use crate::sensing::{weight, Observation};

use super::instance::{InstanceError, TinyInstance, CANDIDATE_EPS};

/// A copy's assigned observation for one action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// Index into the action's grid times.
    Grid(u16),
    /// One of the K formally distinct NoContact slots.
    NcSlot(u16),
}

impl Outcome {
    /// The observation this outcome stands for on the efficient side.
    pub fn to_observation(self, instance: &TinyInstance, action: usize) -> Observation {
        match self {
            Outcome::Grid(i) => {
                Observation::Contact(instance.actions[action].obsset.times[i as usize])
            }
            Outcome::NcSlot(_) => Observation::NoContact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoisyCopy {
    /// Hypothesis this copy was split from.
    pub origin: usize,
    /// Assigned observation per action.
    pub outcomes: Vec<Outcome>,
    pub prob: f64,
}

#[derive(Debug, Clone)]
pub struct NoisyProblem {
    pub instance: TinyInstance,
    pub copies: Vec<NoisyCopy>,
    /// `factors[a][h]`: the objective's rescaling `p(h) / max p(copies of h
    /// under action a alone)`, computed literally from single-action copies.
    pub factors: Vec<Vec<f64>>,
    /// `candidates[a][h]`: each candidate outcome with its kernel weight.
    pub candidates: Vec<Vec<Vec<(Outcome, f64)>>>,
}

/// Enumerate the candidate outcomes of one (action, hypothesis) pair.
fn candidate_outcomes(
    instance: &TinyInstance,
    action: usize,
    hyp: usize,
) -> Vec<(Outcome, f64)> {
    let response = instance.responses[hyp][action];
    let obsset = &instance.actions[action].obsset;
    match response {
        Observation::NoContact => (0..obsset.nocontact_multiplicity)
            .map(|j| (Outcome::NcSlot(j as u16), 1.0))
            .collect(),
        Observation::Contact(_) => obsset
            .times
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| {
                let w = weight(&instance.model, Observation::Contact(t), response);
                (w > CANDIDATE_EPS).then_some((Outcome::Grid(i as u16), w))
            })
            .collect(),
    }
}

/// Build the full copy space. Errors when the instance exceeds the
/// exhaustive-checking caps.
pub fn build_noisy_problem(instance: &TinyInstance) -> Result<NoisyProblem, InstanceError> {
    instance.validate()?;
    let n_h = instance.n_hypotheses();
    let n_a = instance.n_actions();
    if n_h > 8 || n_a > 5 {
        return Err(InstanceError::TooLarge {
            hypotheses: n_h,
            actions: n_a,
            copies: 0,
        });
    }

    let candidates: Vec<Vec<Vec<(Outcome, f64)>>> = (0..n_a)
        .map(|a| (0..n_h).map(|h| candidate_outcomes(instance, a, h)).collect())
        .collect();

    let mut total_copies: usize = 0;
    for h in 0..n_h {
        let per_hyp: usize = (0..n_a).map(|a| candidates[a][h].len()).product();
        total_copies += per_hyp;
    }
    if total_copies > 100_000 {
        return Err(InstanceError::TooLarge {
            hypotheses: n_h,
            actions: n_a,
            copies: total_copies,
        });
    }

    // The objective's rescaling factor comes from the single-action split:
    // p(copy) = p(h) * w / S, so the max over copies is p(h) * max(w) / S and
    // the factor is S / max(w).
    let factors: Vec<Vec<f64>> = (0..n_a)
        .map(|a| {
            (0..n_h)
                .map(|h| {
                    let s: f64 = candidates[a][h].iter().map(|(_, w)| w).sum();
                    let max_p = candidates[a][h]
                        .iter()
                        .map(|(_, w)| instance.priors[h] * w / s)
                        .fold(f64::NEG_INFINITY, f64::max);
                    instance.priors[h] / max_p
                })
                .collect()
        })
        .collect();

    // Cartesian product of candidates across actions, depth-first so copies
    // of one hypothesis are contiguous.
    let mut copies = Vec::with_capacity(total_copies);
    for h in 0..n_h {
        let norms: Vec<f64> = (0..n_a)
            .map(|a| candidates[a][h].iter().map(|(_, w)| w).sum())
            .collect();
        let mut stack: Vec<(Vec<Outcome>, f64)> = vec![(Vec::new(), instance.priors[h])];
        for a in 0..n_a {
            let mut next = Vec::with_capacity(stack.len() * candidates[a][h].len());
            for (outcomes, prob) in &stack {
                for (outcome, w) in &candidates[a][h] {
                    let mut o = outcomes.clone();
                    o.push(*outcome);
                    next.push((o, prob * w / norms[a]));
                }
            }
            stack = next;
        }
        for (outcomes, prob) in stack {
            copies.push(NoisyCopy {
                origin: h,
                outcomes,
                prob,
            });
        }
    }

    Ok(NoisyProblem {
        instance: instance.clone(),
        copies,
        factors,
        candidates,
    })
}

impl NoisyProblem {
    pub fn n_copies(&self) -> usize {
        self.copies.len()
    }

    /// Smallest copy probability — the worst-case bound's delta.
    pub fn min_copy_prob(&self) -> f64 {
        self.copies
            .iter()
            .map(|c| c.prob)
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy indices consistent with a history of (action, outcome) pairs.
    pub fn survivors(&self, history: &[(usize, Outcome)]) -> Vec<u32> {
        self.copies
            .iter()
            .enumerate()
            .filter(|(_, c)| history.iter().all(|&(a, o)| c.outcomes[a] == o))
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Restrict a survivor set by one more (action, outcome) observation.
    pub fn restrict(&self, survivors: &[u32], action: usize, outcome: Outcome) -> Vec<u32> {
        survivors
            .iter()
            .copied()
            .filter(|&i| self.copies[i as usize].outcomes[action] == outcome)
            .collect()
    }

    /// The explicit objective: one minus the rescaled surviving copy mass,
    /// computed literally (per-hypothesis rescaling factors for every
    /// executed action, times that hypothesis's surviving copy probability).
    pub fn explicit_objective(&self, executed: &[usize], survivors: &[u32]) -> f64 {
        let n_h = self.instance.n_hypotheses();
        let mut per_origin = vec![0.0; n_h];
        for &i in survivors {
            let c = &self.copies[i as usize];
            per_origin[c.origin] += c.prob;
        }
        let mut kept = 0.0;
        for (h, &mass) in per_origin.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut scale = 1.0;
            for &a in executed {
                scale *= self.factors[a][h];
            }
            kept += scale * mass;
        }
        1.0 - kept
    }

    /// Copy-space probability of each outcome of `action` among the
    /// survivors (their posterior). NoContact slots appear individually.
    pub fn outcome_probabilities(
        &self,
        survivors: &[u32],
        action: usize,
    ) -> Vec<(Outcome, f64)> {
        let mut totals: std::collections::BTreeMap<Outcome, f64> = Default::default();
        let mut mass = 0.0;
        for &i in survivors {
            let c = &self.copies[i as usize];
            mass += c.prob;
            *totals.entry(c.outcomes[action]).or_insert(0.0) += c.prob;
        }
        totals
            .into_iter()
            .map(|(o, m)| (o, m / mass))
            .collect()
    }

    /// Distinct outcomes of `action` among survivors, NoContact collapsed to
    /// its first slot (slots are interchangeable by construction).
    pub fn distinct_outcomes(&self, survivors: &[u32], action: usize) -> Vec<Outcome> {
        let mut set: BTreeSet<Outcome> = BTreeSet::new();
        for &i in survivors {
            let o = self.copies[i as usize].outcomes[action];
            set.insert(match o {
                Outcome::NcSlot(_) => Outcome::NcSlot(0),
                g => g,
            });
        }
        set.into_iter().collect()
    }

    /// Efficient-side weights for a history: prior times kernel agreement of
    /// each executed observation with the hypothesis response.
    pub fn efficient_weights(&self, history: &[(usize, Outcome)]) -> Vec<f64> {
        let inst = &self.instance;
        (0..inst.n_hypotheses())
            .map(|h| {
                let mut w = inst.priors[h];
                for &(a, o) in history {
                    w *= weight(
                        &inst.model,
                        o.to_observation(inst, a),
                        inst.responses[h][a],
                    );
                }
                w
            })
            .collect()
    }
}

/// Largest disagreements between the explicit copy-space computation and the
/// efficient closed forms, over every reachable history of an instance.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub states_checked: usize,
    /// Max |f_explicit - (1 - mass)| over all histories.
    pub max_f_gap: f64,
    /// Max observation-probability disagreement; only meaningful (Some) for
    /// kappa-constant instances.
    pub max_prob_gap: Option<f64>,
}

/// Exhaustively compare explicit and efficient computations over every
/// reachable history (all action subsets, all consistent observation
/// combinations; NoContact slots collapsed to a representative).
pub fn check_equivalence(instance: &TinyInstance) -> Result<EquivalenceReport, InstanceError> {
    let problem = build_noisy_problem(instance)?;
    let mut report = EquivalenceReport {
        states_checked: 0,
        max_f_gap: 0.0,
        max_prob_gap: instance.kappa_constant.then_some(0.0),
    };
    let all: Vec<u32> = (0..problem.n_copies() as u32).collect();
    let mut history: Vec<(usize, Outcome)> = Vec::new();
    explore(&problem, &mut history, &all, 0, &mut report);
    Ok(report)
}

fn explore(
    problem: &NoisyProblem,
    history: &mut Vec<(usize, Outcome)>,
    survivors: &[u32],
    next_action_min: usize,
    report: &mut EquivalenceReport,
) {
    let inst = &problem.instance;
    report.states_checked += 1;

    let executed: Vec<usize> = history.iter().map(|&(a, _)| a).collect();
    let f_explicit = problem.explicit_objective(&executed, survivors);
    let weights = problem.efficient_weights(history);
    let f_efficient = 1.0 - weights.iter().sum::<f64>();
    report.max_f_gap = report.max_f_gap.max((f_explicit - f_efficient).abs());

    if let Some(gap) = report.max_prob_gap.as_mut() {
        for a in 0..inst.n_actions() {
            if executed.contains(&a) {
                continue;
            }
            let explicit = problem.outcome_probabilities(survivors, a);
            // Aggregate NoContact slots; map grid outcomes to times.
            let mut explicit_by_obs: Vec<(Observation, f64)> = Vec::new();
            let mut nc_total = 0.0;
            for (o, p) in &explicit {
                match o {
                    Outcome::NcSlot(_) => nc_total += p,
                    Outcome::Grid(i) => explicit_by_obs.push((
                        Observation::Contact(inst.actions[a].obsset.times[*i as usize]),
                        *p,
                    )),
                }
            }
            explicit_by_obs.push((Observation::NoContact, nc_total));
            let row = inst.row(a);
            let efficient =
                observation_probabilities(a as u32, &row, &weights, &inst.actions[a].obsset, &inst.model)
                    .expect("consistent history keeps positive mass");
            for (obs, p_eff) in &efficient {
                let p_exp = explicit_by_obs
                    .iter()
                    .find(|(o, _)| o == obs)
                    .map_or(0.0, |(_, p)| *p);
                *gap = gap.max((p_exp - p_eff).abs());
            }
        }
    }

    for a in next_action_min..inst.n_actions() {
        for outcome in problem.distinct_outcomes(survivors, a) {
            let child = problem.restrict(survivors, a, outcome);
            if child.is_empty() {
                continue;
            }
            history.push((a, outcome));
            explore(problem, history, &child, a + 1, report);
            history.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::instance::{
        gen_hp_instance, gen_mixed_instance, gen_whp_instance, GeneratorParams, TinyAction,
    };
    use crate::rng::rng_for;
    use crate::sensing::{ObservationSet, WeightingModel};
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Two equally likely hypotheses, one action telling them apart exactly
    /// (margin 0: one candidate each).
    fn two_hyp_one_action() -> TinyInstance {
        TinyInstance {
            priors: vec![0.5, 0.5],
            responses: vec![
                vec![Observation::Contact(1.0)],
                vec![Observation::Contact(2.0)],
            ],
            actions: vec![TinyAction {
                cost: 1.0,
                obsset: ObservationSet {
                    times: vec![0.0, 1.0, 2.0, 3.0],
                    nocontact_multiplicity: 1,
                },
            }],
            model: WeightingModel::Hp { d_t: 0.49 },
            kappa_constant: true,
        }
    }

    #[test]
    fn margin_zero_copies_are_the_hypotheses_themselves() {
        let problem = build_noisy_problem(&two_hyp_one_action()).unwrap();
        assert_eq!(problem.n_copies(), 2);
        for c in &problem.copies {
            assert_relative_eq!(c.prob, 0.5, epsilon = 1e-15);
        }
        assert_relative_eq!(problem.min_copy_prob(), 0.5, epsilon = 1e-15);
        // Observing hypothesis 0's response removes exactly hypothesis 1.
        let all: Vec<u32> = vec![0, 1];
        let surv = problem.restrict(&all, 0, Outcome::Grid(1));
        assert_eq!(surv.len(), 1);
        let f = problem.explicit_objective(&[0], &surv);
        assert_relative_eq!(f, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn window_margin_spawns_one_copy_per_candidate() {
        // margin 1 window: response at grid time 1 of grid {0,1,2} has three
        // candidates; probabilities split at prior/3 each.
        let inst = TinyInstance {
            priors: vec![0.6, 0.4],
            responses: vec![
                vec![Observation::Contact(1.0)],
                vec![Observation::NoContact],
            ],
            actions: vec![TinyAction {
                cost: 2.0,
                obsset: ObservationSet {
                    times: vec![0.0, 1.0, 2.0],
                    nocontact_multiplicity: 3,
                },
            }],
            model: WeightingModel::Hp { d_t: 1.49 },
            kappa_constant: true,
        };
        let problem = build_noisy_problem(&inst).unwrap();
        assert_eq!(problem.n_copies(), 6);
        let h0_mass: f64 = problem
            .copies
            .iter()
            .filter(|c| c.origin == 0)
            .map(|c| c.prob)
            .sum();
        assert_relative_eq!(h0_mass, 0.6, epsilon = 1e-12);
        for c in problem.copies.iter().filter(|c| c.origin == 1) {
            assert!(matches!(c.outcomes[0], Outcome::NcSlot(_)));
            assert_relative_eq!(c.prob, 0.4 / 3.0, epsilon = 1e-12);
        }
        // The rescaling factor equals the candidate count for the binary
        // window (every candidate weight is one).
        assert_relative_eq!(problem.factors[0][0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(problem.factors[0][1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn copy_mass_per_hypothesis_always_sums_to_its_prior() {
        let params = GeneratorParams::default();
        let mut rng = rng_for(11, "oracle/noisy-test");
        for _ in 0..30 {
            let inst = gen_mixed_instance(&params, &mut rng);
            let problem = build_noisy_problem(&inst).unwrap();
            for h in 0..inst.n_hypotheses() {
                let mass: f64 = problem
                    .copies
                    .iter()
                    .filter(|c| c.origin == h)
                    .map(|c| c.prob)
                    .sum();
                assert_relative_eq!(mass, inst.priors[h], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kappa_constant_instances_have_equal_candidate_counts_per_action() {
        let params = GeneratorParams::default();
        let mut rng = rng_for(12, "oracle/noisy-test");
        for _ in 0..30 {
            let inst = if rng.gen_bool(0.5) {
                gen_hp_instance(&params, &mut rng)
            } else {
                gen_whp_instance(&params, false, &mut rng)
            };
            assert!(inst.kappa_constant);
            let problem = build_noisy_problem(&inst).unwrap();
            for a in 0..inst.n_actions() {
                let counts: Vec<usize> =
                    problem.candidates[a].iter().map(|c| c.len()).collect();
                assert!(
                    counts.windows(2).all(|w| w[0] == w[1]),
                    "action {a} candidate counts {counts:?}"
                );
            }
        }
    }

    #[test]
    fn explicit_objective_matches_efficient_form_everywhere() {
        let params = GeneratorParams::default();
        let mut rng = rng_for(13, "oracle/noisy-test");
        for i in 0..20 {
            let inst = gen_mixed_instance(&params, &mut rng);
            let report = check_equivalence(&inst).unwrap();
            assert!(
                report.max_f_gap <= 1e-9,
                "instance {i}: objective gap {}",
                report.max_f_gap
            );
            if let Some(gap) = report.max_prob_gap {
                assert!(gap <= 1e-9, "instance {i}: probability gap {gap}");
            }
            assert!(report.states_checked > 1);
        }
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let mut inst = two_hyp_one_action();
        inst.priors = vec![1.0 / 9.0; 9];
        inst.responses = vec![vec![Observation::Contact(1.0)]; 9];
        assert!(matches!(
            build_noisy_problem(&inst),
            Err(InstanceError::TooLarge { hypotheses: 9, .. })
        ));
    }
}

