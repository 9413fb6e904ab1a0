//! Acceptance suite: one test per guaranteed behavior, each printing a single
//! `ACCEPTANCE <n> <name>: PASS/FAIL` line with its scale and runtime.
//!
//! Run serially with visible output:
//!
//! ```text
//! cargo test -p touchloc --test acceptance -- --test-threads=1 --nocapture
//! ```
//!
//! A process-wide mutex serializes the bodies even under the default parallel
//! harness so the measured runtimes stay honest.

use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use touchloc::harness::{
    build_seed_inputs, episode_setup, run_bench, run_experiment, Config, Metric, RunOptions,
};
use touchloc::oracle::{
    certify_random_instance, check_adaptive_submodularity, check_equivalence,
    check_strong_monotonicity, gen_hp_instance, gen_whp_instance, GeneratorParams,
};
use touchloc::policy::{run_episode, Strategy};
use touchloc::rng::rng_for;

static GATE: Mutex<()> = Mutex::new(());

fn locked() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    println!(
        "ACCEPTANCE {n} {name}: {} ({detail}, {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

/// Drill-on-a-desk experiment at comparison scale: 300 particles, 60 probes,
/// 5 probes per episode, 10 seeds, every planner variant.
const DESK_CONFIG: &str = r#"
    out_dir = "runs/acceptance"
    seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
    particles = 300

    [scene]
    kind = "drill-like"

    [object]
    sensed_pose = { x = 0.6, y = 0.0, z = 0.75, theta = 0.0 }
    truth_offset = { x = 0.015, y = -0.015, z = -0.01, theta = 0.05 }
    prior_variances = [0.03, 0.03, 0.03, 0.1]

    [actions]
    human = 3
    sphere = 20
    normal = 30
    table = 7

    [sensing]

    [planner]
    metrics = ["hp", "whp", "ig", "random", "human"]
    budget = 5
    resample_ess_fraction = 0.5
"#;

/// Large action set (203 probes) for the lazy-evaluation and timing checks.
/// No resampling: a resample would discard the lazy planner's cached queue,
/// and these checks measure its steady-state behavior.
const LARGE_ACTION_CONFIG: &str = r#"
    out_dir = "runs/acceptance"
    seeds = [0, 1, 2]
    particles = 300

    [scene]
    kind = "drill-like"

    [object]
    sensed_pose = { x = 0.6, y = 0.0, z = 0.75, theta = 0.0 }
    truth_offset = { x = 0.015, y = -0.015, z = -0.01, theta = 0.05 }
    prior_variances = [0.03, 0.03, 0.03, 0.1]

    [actions]
    human = 3
    sphere = 30
    normal = 160
    table = 10

    [sensing]

    [planner]
    metrics = ["hp", "whp", "ig"]
    budget = 12
"#;

#[test]
fn acceptance_1_diminishing_returns_under_refinement() {
    let _guard = locked();
    let start = Instant::now();
    let params = GeneratorParams {
        max_hypotheses: 8,
        max_actions: 5,
        nocontact_prob: 0.25,
    };
    let mut rng = rng_for(1, "acceptance/diminishing-returns");
    let mut worst = f64::NEG_INFINITY;
    let mut instances = 0;
    for i in 0..200 {
        let instance = if i % 2 == 0 {
            gen_hp_instance(&params, &mut rng)
        } else {
            gen_whp_instance(&params, i % 4 == 1, &mut rng)
        };
        worst = worst.max(check_adaptive_submodularity(&instance, 40, &mut rng).max_violation);
        instances += 1;
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(30);
    report(
        1,
        "diminishing-returns-under-refinement",
        pass,
        &format!("{instances} instances, worst violation {worst:.2e}"),
        elapsed,
    );
    assert!(
        worst <= 1e-9,
        "expected gains must not grow as histories refine: worst violation {worst:.3e}"
    );
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
}

#[test]
fn acceptance_2_observations_never_grow_mass() {
    let _guard = locked();
    let start = Instant::now();
    let params = GeneratorParams {
        max_hypotheses: 8,
        max_actions: 5,
        nocontact_prob: 0.25,
    };
    let mut rng = rng_for(2, "acceptance/mass-monotonicity");
    let mut worst = f64::NEG_INFINITY;
    let mut triples = 0usize;
    for i in 0..100 {
        let instance = if i % 2 == 0 {
            gen_hp_instance(&params, &mut rng)
        } else {
            gen_whp_instance(&params, i % 4 == 1, &mut rng)
        };
        let outcome = check_strong_monotonicity(&instance, 100, &mut rng);
        triples += outcome.trials;
        worst = worst.max(outcome.max_violation);
    }
    let elapsed = start.elapsed();
    let pass = triples >= 10_000 && worst <= 1e-12 && elapsed < Duration::from_secs(30);
    report(
        2,
        "observations-never-grow-mass",
        pass,
        &format!("{triples} triples, worst violation {worst:.2e}"),
        elapsed,
    );
    assert!(triples >= 10_000, "only {triples} triples sampled");
    assert!(
        worst <= 1e-12,
        "an observation increased surviving mass by {worst:.3e}"
    );
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
}

#[test]
fn acceptance_3_noisy_copy_objective_equivalence() {
    let _guard = locked();
    let start = Instant::now();
    let params = GeneratorParams::default(); // <= 6 hypotheses, <= 4 actions, K <= 3
    let mut rng = rng_for(3, "acceptance/copy-equivalence");
    let mut worst_f = 0.0f64;
    let mut worst_prob = 0.0f64;
    let mut states = 0usize;
    let mut prob_checked = 0usize;
    for i in 0..50 {
        let instance = match i % 3 {
            0 => gen_hp_instance(&params, &mut rng),
            1 => gen_whp_instance(&params, false, &mut rng),
            _ => gen_whp_instance(&params, true, &mut rng),
        };
        let outcome = check_equivalence(&instance).expect("tiny instances stay within caps");
        states += outcome.states_checked;
        worst_f = worst_f.max(outcome.max_f_gap);
        if let Some(gap) = outcome.max_prob_gap {
            prob_checked += 1;
            worst_prob = worst_prob.max(gap);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_f <= 1e-9
        && worst_prob <= 1e-9
        && prob_checked > 0
        && elapsed < Duration::from_secs(120);
    report(
        3,
        "noisy-copy-objective-equivalence",
        pass,
        &format!(
            "50 instances, {states} histories, f gap {worst_f:.2e}, \
             probability gap {worst_prob:.2e} on {prob_checked} constant-weight instances"
        ),
        elapsed,
    );
    assert!(
        worst_f <= 1e-9,
        "explicit copy objective diverged from the efficient form by {worst_f:.3e}"
    );
    assert!(
        worst_prob <= 1e-9,
        "copy-model observation probabilities diverged by {worst_prob:.3e}"
    );
    assert!(prob_checked > 0, "no constant-weight instances sampled");
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
}

#[test]
fn acceptance_4_greedy_cost_certificates() {
    let _guard = locked();
    let start = Instant::now();
    let params = GeneratorParams::default();
    let mut rng = rng_for(4, "acceptance/cost-certificates");
    let mut certified = 0usize;
    let mut draws = 0usize;
    let mut failures = 0usize;
    while certified < 50 {
        draws += 1;
        assert!(draws < 2000, "generator kept producing degenerate instances");
        match certify_random_instance(&params, &mut rng) {
            Ok(None) => continue,
            Ok(Some((_, cert))) => {
                certified += 1;
                if !cert.ok() {
                    failures += 1;
                }
            }
            Err(err) => panic!("certification error after {certified} certificates: {err}"),
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed < Duration::from_secs(300);
    report(
        4,
        "greedy-cost-certificates",
        pass,
        &format!("{certified} certificates vs exhaustive optimum, {failures} violations"),
        elapsed,
    );
    assert_eq!(failures, 0, "{failures} certificates violated a cost bound");
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
}

#[test]
fn acceptance_5_lazy_greedy_matches_naive() {
    let _guard = locked();
    let start = Instant::now();
    let config = Config::from_toml_str(LARGE_ACTION_CONFIG).unwrap();
    let scene = config.build_scene().unwrap();
    let truth = config.truth_pose();
    let mut episodes = 0usize;
    let mut lazy_evals = 0usize;
    let mut naive_evals = 0usize;
    let mut n_actions = 0usize;
    for metric in [Metric::Hp, Metric::Whp] {
        for seed in 0..10u64 {
            let inputs = build_seed_inputs(&config, &scene, seed).unwrap();
            n_actions = inputs.actions.len();
            let mut setup = episode_setup(&config, &scene, &inputs, &truth, metric);
            setup.strategy = Strategy::LazyGreedy;
            let lazy = run_episode(&setup);
            setup.strategy = Strategy::Greedy;
            let naive = run_episode(&setup);
            let lazy_ids: Vec<u32> = lazy.history.steps().iter().map(|s| s.action_id).collect();
            let naive_ids: Vec<u32> = naive.history.steps().iter().map(|s| s.action_id).collect();
            assert_eq!(
                lazy_ids, naive_ids,
                "lazy selection diverged from naive greedy ({metric} seed {seed})"
            );
            episodes += 1;
            for (l, n) in lazy.steps.iter().zip(naive.steps.iter()).skip(1) {
                lazy_evals += l.evaluations;
                naive_evals += n.evaluations;
            }
        }
    }
    let savings = 1.0 - lazy_evals as f64 / naive_evals as f64;
    let elapsed = start.elapsed();
    let pass = episodes == 20 && savings >= 0.30 && elapsed < Duration::from_secs(300);
    report(
        5,
        "lazy-greedy-matches-naive",
        pass,
        &format!(
            "{episodes} episodes at {n_actions} actions: sequences identical, \
             rounds-2+ evaluations {lazy_evals} lazy vs {naive_evals} naive ({:.1}% saved)",
            100.0 * savings
        ),
        elapsed,
    );
    assert!(n_actions >= 100, "action set too small: {n_actions}");
    assert_eq!(episodes, 20);
    assert!(
        savings >= 0.30,
        "lazy evaluation saved only {:.1}% of round-2+ evaluations",
        100.0 * savings
    );
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
}

#[test]
fn acceptance_6_planned_probes_beat_random() {
    let _guard = locked();
    let start = Instant::now();
    let config = Config::from_toml_str(DESK_CONFIG).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        seeds: None,
        timing: false,
    };
    let outcome = run_experiment(&config, &opts).unwrap();

    let step5 = |metric: Metric| -> f64 {
        let summary = outcome.summary_for(metric).expect("metric was run");
        let row = summary.rows.last().expect("episodes produced steps");
        assert_eq!(row.step, 5, "{metric} episodes ended before the 5th probe");
        row.mean_cov_eig_sum
    };
    let initial = outcome
        .summary_for(Metric::Hp)
        .unwrap()
        .rows
        .first()
        .unwrap()
        .mean_cov_eig_sum;
    let (hp, whp, ig, random) = (
        step5(Metric::Hp),
        step5(Metric::Whp),
        step5(Metric::Ig),
        step5(Metric::Random),
    );
    let elapsed = start.elapsed();
    let tight = hp <= 0.2 * initial && whp <= 0.2 * initial && ig <= 0.2 * initial;
    let ranked = random > hp && random > whp && random > ig;
    let pass = tight && ranked && elapsed < Duration::from_secs(600);
    report(
        6,
        "planned-probes-beat-random",
        pass,
        &format!(
            "mean step-5 covariance-eigenvalue sum / initial {initial:.4}: \
             hp {hp:.4}, whp {whp:.4}, ig {ig:.4}, random {random:.4}"
        ),
        elapsed,
    );
    assert!(
        tight,
        "a planner kept more than 20% of the initial uncertainty: \
         hp {hp:.4} whp {whp:.4} ig {ig:.4} vs initial {initial:.4}"
    );
    assert!(
        ranked,
        "random selection (step-5 mean {random:.4}) was not strictly worse than \
         hp {hp:.4} / whp {whp:.4} / ig {ig:.4}"
    );
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
}

#[test]
fn acceptance_7_selection_time_ordering() {
    let _guard = locked();
    let start = Instant::now();
    let mut config = Config::from_toml_str(LARGE_ACTION_CONFIG).unwrap();
    // Timing comparison at the documented benchmark shape.
    config.actions.sphere = 30;
    config.actions.normal = 60;
    config.actions.table = 10;
    config.planner.budget = Some(5);
    let outcome = run_bench(&config).unwrap();
    let ms = |metric: Metric| outcome.mean_ms(metric).expect("metric was benchmarked");
    let (hp, whp, ig) = (ms(Metric::Hp), ms(Metric::Whp), ms(Metric::Ig));
    let n_actions = config.actions.human + config.actions.sphere + config.actions.normal
        + config.actions.table;
    let elapsed = start.elapsed();
    let ordered = outcome.ordering_ok() == Some(true);
    let pass = ordered && elapsed < Duration::from_secs(300);
    report(
        7,
        "selection-time-ordering",
        pass,
        &format!(
            "{n_actions} actions x {} particles: hp {hp:.3} ms < whp {whp:.3} ms < ig {ig:.3} ms",
            config.particles
        ),
        elapsed,
    );
    assert!(n_actions >= 100 && config.particles >= 300);
    assert!(
        ordered,
        "selection times out of order: hp {hp:.3} ms, whp {whp:.3} ms, ig {ig:.3} ms \
         (expected hp < whp < ig with hp <= 0.5 * ig)"
    );
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
}

fn collect_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn acceptance_8_rerun_determinism() {
    let _guard = locked();
    let start = Instant::now();
    let config = Config::from_toml_str(DESK_CONFIG).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            seeds: None,
            timing: false,
        };
        run_experiment(&config, &opts).unwrap();
    }
    let files_a = collect_files(dir_a.path());
    let files_b = collect_files(dir_b.path());
    let elapsed = start.elapsed();
    let identical = files_a == files_b;
    let pass = identical && !files_a.is_empty() && elapsed < Duration::from_secs(600);
    report(
        8,
        "rerun-determinism",
        pass,
        &format!("{} files byte-compared across two runs", files_a.len()),
        elapsed,
    );
    assert!(!files_a.is_empty());
    assert_eq!(
        files_a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        files_b.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "reruns produced different file sets"
    );
    for ((name, a), (_, b)) in files_a.iter().zip(files_b.iter()) {
        assert_eq!(a, b, "rerun changed the bytes of {name}");
    }
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
}
