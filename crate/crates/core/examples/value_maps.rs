//! Distance-weighted frontier scores, with and without language votes,
//! written as PGM images.

use objnav::islands::{attach_names, cluster, Sighting};
use objnav::language::{tally_votes, CooccurrenceOracle};
use objnav::mapping::{extract_frontiers, OccupancyGrid};
use objnav::scene::{generate_scene, sense, step, vocab::default_cooccurrence, Action, SceneParams};
use objnav::valuemaps::{compose_affordance, dwfe_scores, select_target, shf_inject};
use objnav::Config;

fn main() -> anyhow::Result<()> {
    let scene = generate_scene(3, &SceneParams::structured())?;
    let cfg = Config::default();
    let mut belief = OccupancyGrid::unknown(scene.dims);
    let mut sightings = Vec::new();
    let mut pose = scene.start_pose;
    for _ in 0..12 {
        let obs = sense(&scene, &pose, &cfg.sensor);
        belief.integrate(&pose, &obs);
        sightings.extend(obs.visible_objects.iter().map(|v| Sighting {
            category: v.category.clone(),
            position: v.world_position(&pose),
        }));
        pose = step(&scene, pose, Action::TurnLeft);
    }
    let res = scene.dims.resolution;
    let islands = cluster(&extract_frontiers(&belief), res, cfg.cluster.eps_m, 1)?;
    let islands = attach_names(islands, &sightings, res, cfg.cluster.name_radius_m);

    let avm = dwfe_scores(&belief, &islands, cfg.valuemap.dwfe_aggregate);
    let oracle = CooccurrenceOracle::new(default_cooccurrence());
    let tally = tally_votes(&oracle, &scene.goal_category, &islands, cfg.shf.k)?;
    println!("goal {}: votes {:?}", scene.goal_category, tally.h());
    let shf = shf_inject(&avm, &islands, &tally.h(), cfg.shf.eta)?;

    for (name, field) in [("dwfe", avm), ("shf", shf)] {
        let aff = compose_affordance(&[field])?;
        println!("{name}: target {:?}", select_target(&aff, &belief)?);
        std::fs::write(format!("{name}.pgm"), aff.to_pgm())?;
    }
    Ok(())
}
