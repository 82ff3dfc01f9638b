//! Running many episodes over a scene set on a worker pool.

use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{run_episode, EpisodeResult, SuiteReport};
use crate::config::{Config, OracleKind};
use crate::error::{contract, Error, Result};
use crate::language::{CooccurrenceOracle, LlmClient, OracleError, RandomOracle, VoteOracle};
use crate::scene::{sample_episode, vocab::default_cooccurrence, Scene};
use crate::valuemaps::SelectorMode;

/// Builds the vote oracle for one episode from `(scene, episode seed)`.
pub type OracleFactory = Arc<dyn Fn(&Scene, u64) -> Result<Box<dyn VoteOracle>, OracleError> + Send + Sync>;

/// Oracle factory for the configured [`OracleKind`].
pub fn oracle_factory(cfg: &Config) -> OracleFactory {
    match cfg.shf.oracle {
        OracleKind::Cooccurrence => {
            let oracle = Arc::new(CooccurrenceOracle::new(default_cooccurrence()));
            Arc::new(move |_, _| Ok(Box::new(Arc::clone(&oracle)) as Box<dyn VoteOracle>))
        }
        OracleKind::Random => Arc::new(|_, seed| Ok(Box::new(RandomOracle::new(seed)) as Box<dyn VoteOracle>)),
        OracleKind::Llm => {
            let llm = cfg.llm.clone();
            Arc::new(move |scene, seed| {
                let mut client = LlmClient::from_env(llm.clone())?;
                if let Some(dir) = &llm.transcript_dir {
                    client = client.with_transcript(&dir.join(format!("{}-{seed}.jsonl", scene.id)))?;
                }
                Ok(Box::new(client) as Box<dyn VoteOracle>)
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteSpec {
    pub modes: Vec<SelectorMode>,
    pub episodes_per_scene: u32,
    pub seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

/// Seed of one episode, independent of mode and of every other episode.
pub fn episode_seed(base: u64, scene_id: &str, episode: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"objnav-episode");
    h.update(base.to_le_bytes());
    h.update((scene_id.len() as u64).to_le_bytes());
    h.update(scene_id.as_bytes());
    h.update(episode.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Runs every (scene, episode, mode) combination. Episode 0 of a scene
/// uses its stored start pose; later episodes resample the start.
pub fn run_suite(scenes: &[Scene], spec: &SuiteSpec, cfg: &Config, oracles: &OracleFactory) -> Result<SuiteReport> {
    cfg.validate()?;
    if spec.modes.is_empty() {
        return Err(contract("suite needs at least one mode"));
    }
    if spec.modes.contains(&SelectorMode::GoalDirected) {
        return Err(Error::Config("goal_directed is not an exploration mode".into()));
    }
    if scenes.is_empty() || spec.episodes_per_scene == 0 {
        return Err(Error::Config("suite has no episodes".into()));
    }
    if spec.modes.contains(&SelectorMode::Shf) {
        // Surface credential and setup problems before any work starts.
        oracles(&scenes[0], spec.seed)?;
    }

    let mut ids: Vec<&str> = scenes.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate scene id {}", w[0])));
    }

    let mut episodes = Vec::new();
    for (si, scene) in scenes.iter().enumerate() {
        for e in 0..spec.episodes_per_scene {
            let seed = episode_seed(spec.seed, &scene.id, e);
            episodes.push((si, e, seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut rows: Vec<EpisodeResult> = pool.install(|| {
        episodes
            .par_iter()
            .flat_map_iter(|&(si, e, seed)| {
                let base = &scenes[si];
                let scene = if e == 0 {
                    Ok(base.clone())
                } else {
                    sample_episode(base, seed, cfg.scenes.min_start_goal_m)
                };
                spec.modes
                    .iter()
                    .map(|&mode| run_one(scene.as_ref(), base, mode, e, seed, cfg, oracles))
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        (a.scene_id.as_str(), a.mode, a.episode, a.seed).cmp(&(b.scene_id.as_str(), b.mode, b.episode, b.seed))
    });
    SuiteReport::from_rows(rows, cfg, spec)
}

fn run_one(
    scene: std::result::Result<&Scene, &Error>,
    base: &Scene,
    mode: SelectorMode,
    episode: u32,
    seed: u64,
    cfg: &Config,
    oracles: &OracleFactory,
) -> EpisodeResult {
    let scene = match scene {
        Ok(s) => s,
        Err(e) => return aborted(base, mode, episode, seed, e.to_string()),
    };
    let oracle = if mode == SelectorMode::Shf {
        match oracles(scene, seed) {
            Ok(o) => Some(o),
            Err(e) => return aborted(scene, mode, episode, seed, e.to_string()),
        }
    } else {
        None
    };
    let mut r = run_episode(scene, mode, oracle.as_deref(), seed, cfg);
    r.episode = episode;
    log::debug!("{} {:?} in {} steps", r.id(), r.outcome, r.steps);
    r
}

fn aborted(scene: &Scene, mode: SelectorMode, episode: u32, seed: u64, error: String) -> EpisodeResult {
    EpisodeResult {
        scene_id: scene.id.clone(),
        episode,
        mode,
        seed,
        goal_category: scene.goal_category.clone(),
        success: false,
        outcome: super::Outcome::Aborted,
        steps: 0,
        path_length_m: 0.0,
        shortest_m: 0.0,
        goal_seen_step: None,
        abstentions: 0,
        oracle_errors: 0,
        collisions: 0,
        error: Some(error),
        trajectory: vec![scene.start_pose],
        final_frontiers: vec![],
        final_islands: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn episode_seeds_are_distinct_and_stable() {
        let a = episode_seed(1, "s0", 0);
        assert_eq!(a, episode_seed(1, "s0", 0));
        assert_ne!(a, episode_seed(1, "s0", 1));
        assert_ne!(a, episode_seed(1, "s1", 0));
        assert_ne!(a, episode_seed(2, "s0", 0));
    }
}
