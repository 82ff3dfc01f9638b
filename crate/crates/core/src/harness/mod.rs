//! Episodes, metrics, benchmark suites, reports and trajectory rendering.

mod episode;
mod render;
pub mod report;
mod suite;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::grid::{Cell, Point};
use crate::scene::Pose;
use crate::valuemaps::SelectorMode;

pub use episode::run_episode;
pub use render::render_svg;
pub use report::{aggregate, summary_path, ModeAggregate, SuiteReport, SuiteSummary};
pub use suite::{episode_seed, oracle_factory, run_suite, OracleFactory, SuiteSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// Ran out of steps.
    Timeout,
    /// Stopped without satisfying the success predicate.
    FalseStop,
    /// Internal error; counted as a failure.
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scene_id: String,
    /// Index of the episode within its scene.
    pub episode: u32,
    pub mode: SelectorMode,
    pub seed: u64,
    pub goal_category: String,
    pub success: bool,
    pub outcome: Outcome,
    /// Actions taken, stop included.
    pub steps: u32,
    /// Executed path length in meters.
    pub path_length_m: f64,
    /// Ground-truth shortest distance from the start to the success region.
    pub shortest_m: f64,
    /// Step at which the goal was first sighted.
    pub goal_seen_step: Option<u32>,
    /// Oracle queries that produced no usable answer.
    pub abstentions: u32,
    /// Steps whose votes failed and fell back to distance scores only.
    pub oracle_errors: u32,
    /// Forward moves that hit an obstacle.
    pub collisions: u32,
    pub error: Option<String>,
    /// Start pose followed by the pose after every action.
    pub trajectory: Vec<Pose>,
    pub final_frontiers: Vec<Cell>,
    pub final_islands: Vec<Point>,
}

impl EpisodeResult {
    /// `scene:mode:episode`, unique within a suite.
    pub fn id(&self) -> String {
        format!("{}:{}:{}", self.scene_id, self.mode, self.episode)
    }
}

/// Success weighted by path length, in percent. An episode whose shortest
/// distance is zero contributes 1 when successful.
pub fn compute_spl(results: &[EpisodeResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(contract("SPL of an empty result list"));
    }
    let sum: f64 = results.iter().map(spl_term).sum();
    Ok(100.0 * sum / results.len() as f64)
}

fn spl_term(r: &EpisodeResult) -> f64 {
    if !r.success {
        return 0.0;
    }
    if r.shortest_m <= 0.0 {
        return 1.0;
    }
    r.shortest_m / r.shortest_m.max(r.path_length_m)
}

pub fn success_pct(results: &[EpisodeResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(contract("success rate of an empty result list"));
    }
    Ok(100.0 * results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}

pub fn avg_steps(results: &[EpisodeResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(contract("average steps of an empty result list"));
    }
    Ok(results.iter().map(|r| r.steps as f64).sum::<f64>() / results.len() as f64)
}

#[cfg(test)]
pub(crate) fn stub_result(success: bool, path: f64, shortest: f64) -> EpisodeResult {
    EpisodeResult {
        scene_id: "s".into(),
        episode: 0,
        mode: SelectorMode::Dwfe,
        seed: 0,
        goal_category: "tv".into(),
        success,
        outcome: if success { Outcome::Success } else { Outcome::Timeout },
        steps: 10,
        path_length_m: path,
        shortest_m: shortest,
        goal_seen_step: None,
        abstentions: 0,
        oracle_errors: 0,
        collisions: 0,
        error: None,
        trajectory: vec![Pose::new(0.5, 0.5, Default::default())],
        final_frontiers: vec![],
        final_islands: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spl_worked_examples() {
        assert_eq!(compute_spl(&[stub_result(true, 3.0, 3.0)]).unwrap(), 100.0);
        assert_eq!(compute_spl(&[stub_result(false, 3.0, 3.0)]).unwrap(), 0.0);
        let two = [stub_result(true, 6.0, 3.0), stub_result(false, 1.0, 3.0)];
        assert_eq!(compute_spl(&two).unwrap(), 25.0);
        assert!(compute_spl(&[]).is_err());
    }

    #[test]
    fn degenerate_shortest_counts_one() {
        assert_eq!(compute_spl(&[stub_result(true, 0.0, 0.0)]).unwrap(), 100.0);
        assert_eq!(compute_spl(&[stub_result(true, 0.4, 0.0)]).unwrap(), 100.0);
    }
}
