//! Selection-cost benchmark across planner variants.
//!
//! Runs the configured experiment without writing files, always measuring
//! real selection times, and reports per-variant means. The interesting
//! comparison: lazy mass-reduction selection touches one contact-table row
//! per evaluation and skips most re-evaluations, while information gain
//! must rebuild a covariance per candidate outcome for every action each
//! round — so the pruning planners should select strictly faster.

use crate::geometry::Scene;
use crate::policy::run_episode;

use super::config::{Config, Metric};
use super::experiment::{build_seed_inputs, episode_setup, ExperimentError};

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub metric: Metric,
    pub episodes: usize,
    pub steps: usize,
    /// Mean wall-clock selection time per step (ms).
    pub mean_selection_ms: f64,
    /// Total gain evaluations across all selections.
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn mean_ms(&self, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric)
            .map(|r| r.mean_selection_ms)
    }

    /// True when every pair of present planners keeps the expected cost
    /// order: hp <= whp <= ig, with hp at most half of ig.
    pub fn ordering_ok(&self) -> Option<bool> {
        let hp = self.mean_ms(Metric::Hp)?;
        let whp = self.mean_ms(Metric::Whp)?;
        let ig = self.mean_ms(Metric::Ig)?;
        Some(hp < whp && whp < ig && hp <= 0.5 * ig)
    }
}

fn bench_metric(
    config: &Config,
    scene: &Scene,
    metric: Metric,
    seeds: &[u64],
) -> Result<BenchRow, ExperimentError> {
    let truth = config.truth_pose();
    let mut steps = 0;
    let mut total_ms = 0.0;
    let mut evaluations = 0;
    let mut episodes = 0;
    for &seed in seeds {
        let inputs = build_seed_inputs(config, scene, seed)?;
        let mut setup = episode_setup(config, scene, &inputs, &truth, metric);
        // Contact times depend only on (actions, particles), which are shared
        // across planners; fill them untimed so selection_ms reflects the
        // planner's own work.
        setup.prefill_table = true;
        let result = run_episode(&setup);
        episodes += 1;
        for s in &result.steps {
            steps += 1;
            total_ms += s.selection_ms;
            evaluations += s.evaluations;
        }
    }
    Ok(BenchRow {
        metric,
        episodes,
        steps,
        mean_selection_ms: if steps == 0 {
            0.0
        } else {
            total_ms / steps as f64
        },
        evaluations,
    })
}

/// Benchmark every configured planner variant on the configured seeds.
pub fn run_bench(config: &Config) -> Result<BenchReport, ExperimentError> {
    let scene = config.build_scene()?;
    let rows = config
        .planner
        .metrics
        .iter()
        .map(|&m| bench_metric(config, &scene, m, &config.seeds))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchReport { rows })
}
