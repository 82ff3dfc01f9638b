//! Follow/avoid prompting over frontier islands and vote tallying.
//!
//! An oracle sees a rendered prompt plus the island ids behind its option
//! labels and answers with one of those ids, or abstains.

mod llm;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{contract, Result};
use crate::islands::FrontierIsland;
use crate::scene::vocab::CooccurrenceTable;

pub use llm::{parse_choice, LlmClient, LlmConfig, API_KEY_ENV};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("credential missing: set {0}")]
    MissingCredential(&'static str),
    #[error("endpoint rejected the credential (HTTP {0})")]
    Auth(u16),
    #[error("transport failure after {attempts} attempts: {reason}")]
    Transport { attempts: u32, reason: String },
    #[error("malformed completion response: {0}")]
    Response(String),
    #[error("transcript: {0}")]
    Transcript(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Follow,
    Avoid,
}

/// A rendered-on-demand follow or avoid question.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PromptText {
    pub kind: PromptKind,
    pub goal: String,
    /// `(label, names)` in island order.
    pub clusters: Vec<(String, Vec<String>)>,
}

impl PromptText {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.clusters.iter().map(|(l, _)| l.as_str())
    }
}

impl fmt::Display for PromptText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PromptKind::Follow => writeln!(f, "Which cluster should a robot follow to find a {}?", self.goal)?,
            PromptKind::Avoid => writeln!(
                f,
                "A robot is looking for a {}. Which cluster should it avoid?",
                self.goal
            )?,
        }
        for (label, names) in &self.clusters {
            if names.is_empty() {
                writeln!(f, "{label}) (nothing seen)")?;
            } else {
                writeln!(f, "{label}) {}", names.join(", "))?;
            }
        }
        write!(f, "Answer with the letter of one option.")
    }
}

/// Option label for the `i`-th island: A..Z, then AA, AB, ...
pub fn label(i: usize) -> String {
    let mut n = i + 1;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

pub fn build_prompt(kind: PromptKind, goal: &str, islands: &[FrontierIsland]) -> Result<PromptText> {
    if islands.is_empty() {
        return Err(contract("cannot build a prompt without islands"));
    }
    Ok(PromptText {
        kind,
        goal: goal.to_string(),
        clusters: islands
            .iter()
            .enumerate()
            .map(|(i, f)| (label(i), f.names.clone()))
            .collect(),
    })
}

/// Answers follow/avoid questions. `options[i]` is the island id behind
/// the `i`-th label of the prompt. `Ok(None)` is an abstention.
pub trait VoteOracle: Send + Sync {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError>;
}

impl<T: VoteOracle + ?Sized> VoteOracle for Box<T> {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        (**self).answer(prompt, options)
    }
}

impl<T: VoteOracle + ?Sized> VoteOracle for std::sync::Arc<T> {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        (**self).answer(prompt, options)
    }
}

impl<T: VoteOracle + ?Sized> VoteOracle for &T {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        (**self).answer(prompt, options)
    }
}

/// Offline stand-in: follow picks the cluster whose best name co-occurs
/// most strongly with the goal, avoid picks the weakest. Ties go to the
/// earliest label; unknown names weigh 0.
#[derive(Clone, Debug)]
pub struct CooccurrenceOracle {
    table: CooccurrenceTable,
}

impl CooccurrenceOracle {
    pub fn new(table: CooccurrenceTable) -> Self {
        Self { table }
    }

    fn score(&self, goal: &str, names: &[String]) -> f64 {
        names.iter().map(|n| self.table.weight(goal, n)).fold(0.0, f64::max)
    }
}

impl VoteOracle for CooccurrenceOracle {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, names)) in prompt.clusters.iter().enumerate().take(options.len()) {
            let s = self.score(&prompt.goal, names);
            let better = match (best, prompt.kind) {
                (None, _) => true,
                (Some((_, b)), PromptKind::Follow) => s > b,
                (Some((_, b)), PromptKind::Avoid) => s < b,
            };
            if better {
                best = Some((i, s));
            }
        }
        Ok(best.map(|(i, _)| options[i]))
    }
}

/// Always answers the same option positions.
#[derive(Clone, Copy, Debug)]
pub struct ConstantOracle {
    pub follow: usize,
    pub avoid: usize,
}

impl VoteOracle for ConstantOracle {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        let pos = match prompt.kind {
            PromptKind::Follow => self.follow,
            PromptKind::Avoid => self.avoid,
        };
        Ok(options.get(pos).copied())
    }
}

/// Uniform random answers from a seeded stream.
#[derive(Debug)]
pub struct RandomOracle {
    rng: Mutex<ChaCha8Rng>,
}

impl RandomOracle {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl VoteOracle for RandomOracle {
    fn answer(&self, _prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        if options.is_empty() {
            return Ok(None);
        }
        let mut rng = self.rng.lock().unwrap_or_else(|e| e.into_inner());
        Ok(Some(options[rng.gen_range(0..options.len())]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IslandVotes {
    pub island: usize,
    pub n_plus: u32,
    pub n_minus: u32,
}

impl IslandVotes {
    pub fn h(&self) -> i32 {
        self.n_plus as i32 - self.n_minus as i32
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub k: u32,
    /// One entry per island, in island order.
    pub votes: Vec<IslandVotes>,
    /// Queries that produced no usable answer.
    pub abstentions: u32,
}

impl VoteTally {
    pub fn h(&self) -> BTreeMap<usize, i32> {
        self.votes.iter().map(|v| (v.island, v.h())).collect()
    }

    pub fn get(&self, island: usize) -> Option<&IslandVotes> {
        self.votes.iter().find(|v| v.island == island)
    }
}

/// Issues `k` follow and `k` avoid queries and counts the answers.
pub fn tally_votes(
    oracle: &dyn VoteOracle,
    goal: &str,
    islands: &[FrontierIsland],
    k: u32,
) -> Result<VoteTally, crate::Error> {
    if k == 0 {
        return Err(contract("k must be at least 1"));
    }
    let options: Vec<usize> = islands.iter().map(|f| f.id).collect();
    let mut tally = VoteTally {
        k,
        votes: islands
            .iter()
            .map(|f| IslandVotes { island: f.id, n_plus: 0, n_minus: 0 })
            .collect(),
        abstentions: 0,
    };
    for kind in [PromptKind::Follow, PromptKind::Avoid] {
        let prompt = build_prompt(kind, goal, islands)?;
        for _ in 0..k {
            let answer = oracle.answer(&prompt, &options)?;
            match answer.and_then(|id| tally.votes.iter_mut().find(|v| v.island == id)) {
                Some(v) if kind == PromptKind::Follow => v.n_plus += 1,
                Some(v) => v.n_minus += 1,
                None => tally.abstentions += 1,
            }
        }
    }
    Ok(tally)
}

/// Per-episode memo of tallies keyed on the goal and the islands' name
/// lists, so repeated identical questions are asked once.
#[derive(Debug, Default)]
pub struct TallyCache {
    entries: HashMap<(String, Vec<Vec<String>>), VoteTally>,
    pub hits: u32,
}

impl TallyCache {
    pub fn tally(
        &mut self,
        oracle: &dyn VoteOracle,
        goal: &str,
        islands: &[FrontierIsland],
        k: u32,
    ) -> Result<VoteTally, crate::Error> {
        let key = (goal.to_string(), islands.iter().map(|f| f.names.clone()).collect::<Vec<_>>());
        if let Some(t) = self.entries.get(&key) {
            if t.k == k {
                self.hits += 1;
                // Cached counts are positional; rebind to this step's ids.
                let mut t = t.clone();
                for (v, f) in t.votes.iter_mut().zip(islands) {
                    v.island = f.id;
                }
                return Ok(t);
            }
        }
        let t = tally_votes(oracle, goal, islands, k)?;
        self.entries.insert(key, t.clone());
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, Point};

    fn island(id: usize, names: &[&str]) -> FrontierIsland {
        FrontierIsland {
            id,
            cells: vec![Cell::new(id as i32 * 30, 0)],
            centroid: Point::default(),
            names: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn prompt_template() {
        let isl = [island(0, &["chair", "table"]), island(1, &["bed"]), island(2, &[])];
        let p = build_prompt(PromptKind::Follow, "sofa", &isl).unwrap().to_string();
        assert!(p.starts_with("Which cluster should a robot follow to find a sofa?"));
        assert!(p.contains("A) chair, table\n"));
        assert!(p.contains("B) bed\n"));
        assert!(p.contains("C) (nothing seen)"));
        let a = build_prompt(PromptKind::Avoid, "sofa", &isl).unwrap().to_string();
        assert!(a.contains("Which cluster should it avoid?"));
        assert!(a.contains("A) chair, table\n"));
        let one = build_prompt(PromptKind::Follow, "sofa", &isl[..1]).unwrap().to_string();
        assert!(one.contains("A)") && !one.contains("B)"));
        assert!(build_prompt(PromptKind::Follow, "sofa", &[]).is_err());
    }

    #[test]
    fn labels_past_z() {
        assert_eq!(label(0), "A");
        assert_eq!(label(25), "Z");
        assert_eq!(label(26), "AA");
        assert_eq!(label(27), "AB");
        assert_eq!(label(26 * 27), "AAA");
    }

    #[test]
    fn constant_oracle_tally() {
        let isl = [island(0, &[]), island(1, &[])];
        let t = tally_votes(&ConstantOracle { follow: 0, avoid: 1 }, "tv", &isl, 5).unwrap();
        assert_eq!(t.h(), BTreeMap::from([(0, 5), (1, -5)]));
        assert_eq!(t.abstentions, 0);
    }

    #[test]
    fn cooccurrence_prefers_related_names() {
        let mut table = CooccurrenceTable::new();
        table.insert("microwave", "sink", 0.9);
        table.insert("microwave", "sofa", 0.1);
        let o = CooccurrenceOracle::new(table);
        let isl = [island(0, &["sofa"]), island(1, &["sink"])];
        let t = tally_votes(&o, "microwave", &isl, 5).unwrap();
        assert_eq!(t.get(1).unwrap().h(), 5);
        assert_eq!(t.get(0).unwrap().h(), -5);

        let tie = [island(0, &["x"]), island(1, &["y"])];
        let p = build_prompt(PromptKind::Follow, "microwave", &tie).unwrap();
        assert_eq!(o.answer(&p, &[0, 1]).unwrap(), Some(0));
    }

    #[test]
    fn random_oracle_is_seeded() {
        let isl: Vec<_> = (0..4).map(|i| island(i, &[])).collect();
        let a = tally_votes(&RandomOracle::new(9), "bed", &isl, 5).unwrap();
        let b = tally_votes(&RandomOracle::new(9), "bed", &isl, 5).unwrap();
        assert_eq!(a, b);
        let plus: u32 = a.votes.iter().map(|v| v.n_plus).sum();
        assert_eq!(plus, 5);
    }

    #[test]
    fn cache_reuses_tallies_and_rebinds_ids() {
        let o = ConstantOracle { follow: 0, avoid: 1 };
        let mut cache = TallyCache::default();
        let first = [island(0, &["a"]), island(1, &["b"])];
        cache.tally(&o, "bed", &first, 5).unwrap();
        let again = [island(3, &["a"]), island(4, &["b"])];
        let t = cache.tally(&o, "bed", &again, 5).unwrap();
        assert_eq!(cache.hits, 1);
        assert_eq!(t.h(), BTreeMap::from([(3, 5), (4, -5)]));
    }
}
