//! Builds the follow and avoid prompts and tallies votes. Uses a live
//! chat-completion endpoint when OBJNAV_LLM_API_KEY is set, otherwise the
//! offline co-occurrence table.

use objnav::grid::{Cell, Point};
use objnav::islands::FrontierIsland;
use objnav::language::{
    build_prompt, tally_votes, CooccurrenceOracle, LlmClient, LlmConfig, PromptKind, VoteOracle,
};
use objnav::scene::vocab::default_cooccurrence;

fn main() -> anyhow::Result<()> {
    let names = [vec!["bed", "wardrobe"], vec!["sink", "bathtub"], vec![]];
    let islands: Vec<FrontierIsland> = names
        .iter()
        .enumerate()
        .map(|(id, n)| FrontierIsland {
            id,
            cells: vec![Cell::new(id as i32 * 20, 0)],
            centroid: Point::new(id as f64, 0.0),
            names: n.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    println!("{}\n", build_prompt(PromptKind::Follow, "toilet", &islands)?);
    println!("{}\n", build_prompt(PromptKind::Avoid, "toilet", &islands)?);

    let oracle: Box<dyn VoteOracle> = match LlmClient::from_env(LlmConfig::default()) {
        Ok(c) => Box::new(c),
        Err(_) => Box::new(CooccurrenceOracle::new(default_cooccurrence())),
    };
    let tally = tally_votes(oracle.as_ref(), "toilet", &islands, 5)?;
    for v in &tally.votes {
        println!("island {}: +{} -{} h={}", v.island, v.n_plus, v.n_minus, v.h());
    }
    println!("abstentions: {}", tally.abstentions);
    Ok(())
}
