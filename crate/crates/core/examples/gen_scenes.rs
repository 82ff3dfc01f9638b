//! Generates a few floor plans and writes them as scene JSON.
//!
//! cargo run --example gen_scenes -- /tmp/scenes

use objnav::scene::{generate_dataset, save_scene, SceneParams};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "scenes".into());
    std::fs::create_dir_all(&out)?;
    for s in generate_dataset(0, 3, &SceneParams::default())? {
        let free = s.occupied.iter().filter(|o| !**o).count();
        println!(
            "{}: {}x{} cells, {} free, {} objects, goal {}",
            s.id,
            s.dims.width,
            s.dims.height,
            free,
            s.objects.len(),
            s.goal_category
        );
        save_scene(&s, &std::path::Path::new(&out).join(format!("{}.json", s.id)))?;
    }
    Ok(())
}
