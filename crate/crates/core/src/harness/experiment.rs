//! Experiment driver: shared per-seed inputs, episode execution, CSV output.
//!
//! Fairness across planner variants is structural: for each seed the action
//! set and the initial particle belief are built once and every variant runs
//! on exactly those inputs (a content hash of both is recorded per seed so
//! runs can be audited). All randomness flows through per-purpose seeded
//! streams, so a rerun of the same config produces byte-identical CSV files.
//! Selection timings are recorded as 0.0 unless explicitly requested, since
//! wall-clock times are the one non-deterministic column.

use std::fs;
use std::path::{Path, PathBuf};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::actions::{generate_action_set, ActionError, ActionSet};
use crate::belief::{init_belief, BeliefError, ParticleBelief};
use crate::geometry::{MeshError, Scene};
use crate::policy::{run_episode, EpisodeResult, EpisodeSetup};
use crate::rng::{rng_for, ContentHash, Hasher};

use super::config::{Config, Metric};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Command-line overrides for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    /// Record real selection times instead of zeros (breaks byte-identical
    /// reruns, so it is opt-in).
    pub timing: bool,
}

/// The inputs every planner variant shares for one seed.
pub struct SeedInputs {
    pub seed: u64,
    pub actions: ActionSet,
    pub initial: ParticleBelief,
    pub input_hash: ContentHash,
}

/// Build the per-seed action set and prior belief (identical across planner
/// variants by construction).
pub fn build_seed_inputs(
    config: &Config,
    scene: &Scene,
    seed: u64,
) -> Result<SeedInputs, ExperimentError> {
    let sensed = &config.object.sensed_pose;
    let mut prior_rng = rng_for(seed, "experiment/prior");
    let initial = init_belief(
        sensed,
        &config.object.prior_variances,
        config.particles,
        &mut prior_rng,
    )?;
    let hypotheses: Vec<_> = initial.poses().copied().collect();
    let mut action_rng = rng_for(seed, "experiment/actions");
    let actions = generate_action_set(
        config.action_counts(),
        sensed,
        &hypotheses,
        scene,
        &config.gen_params(),
        &mut action_rng,
    )?;

    let mut hasher = Hasher::new();
    for a in actions.iter() {
        hasher.write_u64(a.id as u64);
        for v in [
            a.start.x,
            a.start.y,
            a.start.z,
            a.start.theta,
            a.direction.x,
            a.direction.y,
            a.direction.z,
            a.length,
            a.speed,
            a.fixed_time,
        ] {
            hasher.write_f64(v);
        }
    }
    for p in initial.particles() {
        hasher.write_f64(p.pose.x);
        hasher.write_f64(p.pose.y);
        hasher.write_f64(p.pose.z);
        hasher.write_f64(p.pose.theta);
        hasher.write_f64(p.weight);
    }

    Ok(SeedInputs {
        seed,
        actions,
        initial,
        input_hash: hasher.finish(),
    })
}

/// Assemble the episode description for one planner variant on shared inputs.
pub fn episode_setup<'a>(
    config: &Config,
    scene: &'a Scene,
    inputs: &'a SeedInputs,
    truth: &'a crate::geometry::Pose,
    metric: Metric,
) -> EpisodeSetup<'a> {
    EpisodeSetup {
        scene,
        actions: &inputs.actions,
        truth,
        initial: &inputs.initial,
        model: config.model_for(metric),
        objective: config.objective_for(metric),
        strategy: config.strategy_for(metric),
        termination: config.termination(),
        obs_spacing: config.sensing.obs_spacing,
        k_nocontact: config.sensing.k_nocontact,
        noise_sigma: config.sensing.noise_sigma,
        regularizer: config.planner.regularizer,
        resample: config.resample_params(),
        prefill_table: false,
        seed: inputs.seed,
    }
}

fn episode_csv(result: &EpisodeResult, timing: bool) -> String {
    let mut out = String::from(
        "step,action_id,obs_kind,obs_time_s,mass_remaining,f_psi,entropy,cov_eig_sum,selection_ms,cumulative_cost_s\n",
    );
    for s in &result.steps {
        let ms = if timing { s.selection_ms } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.step,
            s.action_id,
            s.observation.kind(),
            s.observation.time_or_nan(),
            s.mass_remaining,
            s.f_psi,
            s.entropy,
            s.cov_eig_sum,
            ms,
            s.cumulative_cost_s,
        ));
    }
    out
}

/// Mean and symmetric 95% confidence half-width via Student's t. Non-finite
/// samples (annihilated-belief steps) are excluded.
fn mean_ci(values: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return (mean, 0.0);
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    (mean, t * sd / (n as f64).sqrt())
}

/// One row of the cross-seed summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub step: usize,
    pub mean_cov_eig_sum: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub mean_selection_ms: f64,
    pub ci95_ms: f64,
}

#[derive(Debug, Clone)]
pub struct MetricSummary {
    pub metric: Metric,
    pub rows: Vec<SummaryRow>,
    /// Mean selection time over all steps and seeds (for benchmarks).
    pub mean_selection_ms: f64,
    /// Total gain evaluations over all steps and seeds.
    pub evaluations: usize,
}

fn summarize(metric: Metric, episodes: &[&EpisodeResult], timing: bool) -> MetricSummary {
    let max_steps = episodes.iter().map(|e| e.steps.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(max_steps + 1);
    for step in 0..=max_steps {
        let (cov, ms): (Vec<f64>, Vec<f64>) = if step == 0 {
            (
                episodes.iter().map(|e| e.initial_cov_eig_sum).collect(),
                episodes.iter().map(|_| 0.0).collect(),
            )
        } else {
            let at: Vec<&_> = episodes
                .iter()
                .filter_map(|e| e.steps.get(step - 1))
                .collect();
            (
                at.iter().map(|s| s.cov_eig_sum).collect(),
                at.iter()
                    .map(|s| if timing { s.selection_ms } else { 0.0 })
                    .collect(),
            )
        };
        let (mean_cov, ci_cov) = mean_ci(&cov);
        let (mean_ms, ci_ms) = mean_ci(&ms);
        rows.push(SummaryRow {
            step,
            mean_cov_eig_sum: mean_cov,
            ci95_lo: mean_cov - ci_cov,
            ci95_hi: mean_cov + ci_cov,
            mean_selection_ms: mean_ms,
            ci95_ms: ci_ms,
        });
    }
    let all_ms: Vec<f64> = episodes
        .iter()
        .flat_map(|e| e.steps.iter().map(|s| s.selection_ms))
        .collect();
    let evaluations = episodes
        .iter()
        .flat_map(|e| e.steps.iter().map(|s| s.evaluations))
        .sum();
    MetricSummary {
        metric,
        rows,
        mean_selection_ms: if all_ms.is_empty() {
            0.0
        } else {
            all_ms.iter().sum::<f64>() / all_ms.len() as f64
        },
        evaluations,
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub summaries: Vec<MetricSummary>,
}

impl RunReport {
    pub fn summary_for(&self, metric: Metric) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }
}

/// Run the full experiment: every seed x planner variant, with CSVs written
/// under the output directory.
pub fn run_experiment(config: &Config, opts: &RunOptions) -> Result<RunReport, ExperimentError> {
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| config.out_dir.clone());
    let episodes_dir = out_dir.join("episodes");
    fs::create_dir_all(&episodes_dir).map_err(|source| ExperimentError::Io {
        path: episodes_dir.clone(),
        source,
    })?;

    let scene = config.build_scene()?;
    let truth = config.truth_pose();
    let seeds: Vec<u64> = opts.seeds.clone().unwrap_or_else(|| config.seeds.clone());

    let mut inputs_csv = String::from("seed,input_hash\n");
    let mut results: Vec<Vec<EpisodeResult>> =
        config.planner.metrics.iter().map(|_| Vec::new()).collect();
    let mut episode_count = 0;

    for &seed in &seeds {
        let inputs = build_seed_inputs(config, &scene, seed)?;
        inputs_csv.push_str(&format!("{},{:016x}\n", seed, inputs.input_hash.0));
        inputs
            .actions
            .write_csv_file(&out_dir.join(format!("actions_seed{seed}.csv")))?;

        for (mi, &metric) in config.planner.metrics.iter().enumerate() {
            let setup = episode_setup(config, &scene, &inputs, &truth, metric);
            let result = run_episode(&setup);
            let path = episodes_dir.join(format!("{metric}_seed{seed}.csv"));
            write_file(&path, &episode_csv(&result, opts.timing))?;
            results[mi].push(result);
            episode_count += 1;
        }
    }

    write_file(&out_dir.join("inputs.csv"), &inputs_csv)?;

    let summaries: Vec<MetricSummary> = config
        .planner
        .metrics
        .iter()
        .zip(&results)
        .map(|(&metric, episodes)| {
            let refs: Vec<&EpisodeResult> = episodes.iter().collect();
            summarize(metric, &refs, opts.timing)
        })
        .collect();

    let mut summary_csv = String::from(
        "metric,step,mean_cov_eig_sum,ci95_lo,ci95_hi,mean_selection_ms,ci95_ms\n",
    );
    for s in &summaries {
        for r in &s.rows {
            summary_csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.metric, r.step, r.mean_cov_eig_sum, r.ci95_lo, r.ci95_hi, r.mean_selection_ms, r.ci95_ms,
            ));
        }
    }
    write_file(&out_dir.join("summary.csv"), &summary_csv)?;

    Ok(RunReport {
        out_dir,
        seeds,
        episodes: episode_count,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TerminationReason;

    fn tiny_config(out: &Path) -> Config {
        let text = format!(
            r#"
            out_dir = "{}"
            seeds = [3, 4]
            particles = 40

            [scene]
            kind = "drill-like"

            [object]
            sensed_pose = {{ x = 0.6, y = 0.0, z = 0.75, theta = 0.0 }}
            truth_offset = {{ x = 0.015, y = -0.015, z = -0.01, theta = 0.05 }}
            prior_variances = [0.03, 0.03, 0.03, 0.1]

            [actions]
            human = 3
            sphere = 6
            normal = 8
            table = 3

            [sensing]

            [planner]
            metrics = ["hp", "ig", "human"]
            budget = 3
            resample_ess_fraction = 0.5
            "#,
            out.display()
        );
        Config::from_toml_str(&text).unwrap()
    }

    #[test]
    fn inputs_are_shared_and_deterministic_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let scene = config.build_scene().unwrap();
        let a = build_seed_inputs(&config, &scene, 3).unwrap();
        let b = build_seed_inputs(&config, &scene, 3).unwrap();
        assert_eq!(a.input_hash, b.input_hash);
        let c = build_seed_inputs(&config, &scene, 4).unwrap();
        assert_ne!(a.input_hash, c.input_hash);
        assert_eq!(a.actions.len(), 3 + 6 + 8 + 3);
    }

    #[test]
    fn run_writes_expected_files_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(&dir.path().join("unused"));
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let report = run_experiment(
            &config,
            &RunOptions {
                out_dir: Some(out_a.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.episodes, 2 * 3);
        assert_eq!(report.summaries.len(), 3);

        run_experiment(
            &config,
            &RunOptions {
                out_dir: Some(out_b.clone()),
                ..Default::default()
            },
        )
        .unwrap();

        for name in [
            "inputs.csv",
            "summary.csv",
            "actions_seed3.csv",
            "actions_seed4.csv",
            "episodes/hp_seed3.csv",
            "episodes/ig_seed3.csv",
            "episodes/human_seed4.csv",
        ] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "file {name} differs between identical runs");
        }
    }

    #[test]
    fn summary_has_step_zero_and_budget_rows() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let report = run_experiment(
            &config,
            &RunOptions {
                out_dir: Some(dir.path().join("out")),
                ..Default::default()
            },
        )
        .unwrap();
        let hp = report.summary_for(Metric::Hp).unwrap();
        assert_eq!(hp.rows.len(), 4); // step 0 + budget 3
        assert_eq!(hp.rows[0].step, 0);
        assert!(hp.rows[0].mean_cov_eig_sum.is_finite());
        // Selection times are zeroed without --timing.
        assert_eq!(hp.rows[2].mean_selection_ms, 0.0);
        // Belief should have tightened by the last step on average.
        assert!(
            hp.rows[3].mean_cov_eig_sum < hp.rows[0].mean_cov_eig_sum,
            "no tightening: {:?}",
            hp.rows
        );
    }

    #[test]
    fn human_script_runs_its_probes_then_stops() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let scene = config.build_scene().unwrap();
        let truth = config.truth_pose();
        let inputs = build_seed_inputs(&config, &scene, 3).unwrap();
        let setup = episode_setup(&config, &scene, &inputs, &truth, Metric::Human);
        let result = run_episode(&setup);
        let ids: Vec<u32> = result.steps.iter().map(|s| s.action_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(result.reason, TerminationReason::BudgetExhausted);
    }
}
