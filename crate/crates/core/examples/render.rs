//! Runs one DWFE episode and draws it.

use objnav::harness::{render_svg, run_episode};
use objnav::scene::{generate_scene, SceneParams};
use objnav::valuemaps::SelectorMode;
use objnav::Config;

fn main() -> anyhow::Result<()> {
    let scene = generate_scene(5, &SceneParams::default())?;
    let r = run_episode(&scene, SelectorMode::Dwfe, None, 1, &Config::default());
    println!("{}: {:?} after {} steps, {:.2} m (shortest {:.2} m)", r.id(), r.outcome, r.steps, r.path_length_m, r.shortest_m);
    std::fs::write("episode.svg", render_svg(&r, &scene))?;
    println!("wrote episode.svg");
    Ok(())
}
