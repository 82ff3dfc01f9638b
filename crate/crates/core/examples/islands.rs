//! Clusters the frontier after a few observations and names the islands
//! after nearby objects.

use objnav::islands::{attach_names, cluster, Sighting};
use objnav::mapping::{extract_frontiers, OccupancyGrid};
use objnav::scene::{generate_scene, sense, step, Action, SceneParams};
use objnav::Config;

fn main() -> anyhow::Result<()> {
    let scene = generate_scene(2, &SceneParams::default())?;
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
    let frontiers = extract_frontiers(&belief);
    let islands = cluster(&frontiers, scene.dims.resolution, cfg.cluster.eps_m, cfg.cluster.min_samples)?;
    for f in attach_names(islands, &sightings, scene.dims.resolution, cfg.cluster.name_radius_m) {
        println!(
            "island {}: {} cells around ({:.2}, {:.2}) near [{}]",
            f.id,
            f.cells.len(),
            f.centroid.x,
            f.centroid.y,
            f.names.join(", ")
        );
    }
    Ok(())
}
