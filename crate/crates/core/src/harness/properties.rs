//! Self-check bundle: the oracle suites packaged as named pass/fail checks
//! for the command line. Each check reports the worst violation it found and
//! the threshold it was held to, so a failure is immediately quantifiable.

use crate::belief::replay_mass;
use crate::harness::config::{Config, Metric};
use crate::harness::experiment::{build_seed_inputs, episode_setup};
use crate::oracle::{
    certify_random_instance, check_adaptive_submodularity, check_equivalence,
    check_strong_monotonicity, gen_mixed_instance, GeneratorParams,
};
use crate::policy::run_episode;
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// What was exercised, for the human reading the report.
    pub detail: String,
    /// Worst violation observed (negative or zero means the property held
    /// with margin).
    pub worst: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, detail: String, worst: f64, threshold: f64) -> Self {
        CheckOutcome {
            name,
            detail,
            worst,
            threshold,
            pass: worst <= threshold,
        }
    }
}

fn check_diminishing_returns(seed: u64) -> CheckOutcome {
    let params = GeneratorParams::default();
    let mut rng = rng_for(seed, "check/diminishing-returns");
    let instances = 60;
    let trials = 40;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let inst = gen_mixed_instance(&params, &mut rng);
        worst = worst.max(check_adaptive_submodularity(&inst, trials, &mut rng).max_violation);
    }
    CheckOutcome::new(
        "diminishing-returns",
        format!("{instances} instances x {trials} nested-history trials"),
        worst,
        1e-12,
    )
}

fn check_mass_monotonicity(seed: u64) -> CheckOutcome {
    let params = GeneratorParams::default();
    let mut rng = rng_for(seed, "check/mass-monotonicity");
    let instances = 60;
    let trials = 150;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let inst = gen_mixed_instance(&params, &mut rng);
        worst = worst.max(check_strong_monotonicity(&inst, trials, &mut rng).max_violation);
    }
    CheckOutcome::new(
        "mass-monotonicity",
        format!("{instances} instances x {trials} observation trials"),
        worst,
        1e-12,
    )
}

fn check_copy_equivalence(seed: u64) -> CheckOutcome {
    let params = GeneratorParams::default();
    let mut rng = rng_for(seed, "check/copy-equivalence");
    let instances = 25;
    let mut worst = f64::NEG_INFINITY;
    let mut states = 0usize;
    for _ in 0..instances {
        let inst = gen_mixed_instance(&params, &mut rng);
        let report = check_equivalence(&inst).expect("generated instances fit the caps");
        states += report.states_checked;
        worst = worst.max(report.max_f_gap);
        if let Some(gap) = report.max_prob_gap {
            worst = worst.max(gap);
        }
    }
    CheckOutcome::new(
        "copy-equivalence",
        format!("{instances} instances, {states} reachable histories"),
        worst,
        1e-9,
    )
}

fn check_cover_certificates(seed: u64) -> CheckOutcome {
    let params = GeneratorParams::default();
    let mut rng = rng_for(seed, "check/cover-certificates");
    let wanted = 15;
    let mut done = 0;
    let mut drawn = 0;
    let mut worst = f64::NEG_INFINITY;
    while done < wanted && drawn < 600 {
        drawn += 1;
        if let Some((_, cert)) =
            certify_random_instance(&params, &mut rng).expect("tiny instances certify")
        {
            // How far past its bound each policy ran (negative = margin).
            worst = worst.max(cert.greedy_avg - cert.avg_bound);
            worst = worst.max(cert.greedy_wc - cert.wc_bound);
            worst = worst.max(cert.optimal_avg - cert.greedy_avg);
            worst = worst.max(cert.optimal_wc - cert.greedy_wc);
            done += 1;
        }
    }
    CheckOutcome::new(
        "cover-certificates",
        format!("{done} certified instances (of {drawn} drawn)"),
        if done == wanted { worst } else { f64::INFINITY },
        1e-9,
    )
}

fn check_replay_consistency(seed: u64) -> CheckOutcome {
    let text = r#"
        out_dir = "unused"
        seeds = [0]
        particles = 40

        [scene]
        kind = "drill-like"

        [object]
        sensed_pose = { x = 0.6, y = 0.0, z = 0.75, theta = 0.0 }
        truth_offset = { x = 0.015, y = -0.015, z = -0.01, theta = 0.05 }
        prior_variances = [0.03, 0.03, 0.03, 0.1]

        [actions]
        human = 3
        sphere = 6
        normal = 6
        table = 2

        [sensing]

        [planner]
        metrics = ["hp", "whp"]
        budget = 3
        resample_ess_fraction = 0.5
    "#;
    let config = Config::from_toml_str(text).expect("built-in config is valid");
    let scene = config.build_scene().expect("built-in scene");
    let truth = config.truth_pose();

    let mut worst = f64::NEG_INFINITY;
    let mut episodes = 0;
    for s in seed..seed + 3 {
        let inputs = build_seed_inputs(&config, &scene, s).expect("inputs build");
        for metric in [Metric::Hp, Metric::Whp] {
            let setup = episode_setup(&config, &scene, &inputs, &truth, metric);
            let first = run_episode(&setup);
            let second = run_episode(&setup);
            episodes += 1;

            // Identical trajectories on identical inputs.
            let mut diff: f64 = if first.steps.len() == second.steps.len() {
                0.0
            } else {
                f64::INFINITY
            };
            for (a, b) in first.steps.iter().zip(&second.steps) {
                if a.action_id != b.action_id || a.observation != b.observation {
                    diff = f64::INFINITY;
                }
                diff = diff.max((a.mass_remaining - b.mass_remaining).abs());
                diff = diff.max((a.f_psi - b.f_psi).abs());
            }
            worst = worst.max(diff);

            // Replaying the recorded history over the initial belief lands
            // on the recorded final mass.
            if let Some(last) = first.steps.last() {
                let replayed = replay_mass(
                    &inputs.initial,
                    &first.history,
                    &inputs.actions,
                    &setup.model,
                    &scene,
                );
                worst = worst.max((replayed - last.mass_remaining).abs());
            }
        }
    }
    CheckOutcome::new(
        "replay-consistency",
        format!("{episodes} episodes run twice and replayed"),
        worst,
        1e-12,
    )
}

/// Run every check. All pass on a correct build; the seed only moves the
/// randomized suites around.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_diminishing_returns(seed),
        check_mass_monotonicity(seed),
        check_copy_equivalence(seed),
        check_cover_certificates(seed),
        check_replay_consistency(seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_check_passes() {
        let outcomes = run_checks(7);
        assert_eq!(outcomes.len(), 5);
        for o in &outcomes {
            assert!(
                o.pass,
                "{} failed: worst {} vs threshold {} ({})",
                o.name, o.worst, o.threshold, o.detail
            );
        }
    }
}
