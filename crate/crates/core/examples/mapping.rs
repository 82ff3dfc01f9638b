//! Senses a full turn from the start pose and dumps the belief as PGM.

use objnav::mapping::{extract_frontiers, OccupancyGrid};
use objnav::scene::{generate_scene, sense, step, Action, SceneParams};
use objnav::Config;

fn main() -> anyhow::Result<()> {
    let scene = generate_scene(1, &SceneParams::default())?;
    let cfg = Config::default();
    let mut belief = OccupancyGrid::unknown(scene.dims);
    let mut pose = scene.start_pose;
    for _ in 0..12 {
        belief.integrate(&pose, &sense(&scene, &pose, &cfg.sensor));
        pose = step(&scene, pose, Action::TurnLeft);
    }
    println!(
        "{} free, {} unknown, {} frontier cells",
        belief.free_count(),
        belief.unknown_count(),
        extract_frontiers(&belief).len()
    );
    std::fs::write("belief.pgm", belief.to_pgm())?;
    println!("wrote belief.pgm");
    Ok(())
}
