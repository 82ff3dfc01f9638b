//! Runs a small benchmark suite over all exploration modes.

use objnav::harness::{oracle_factory, run_suite, SuiteSpec};
use objnav::scene::{generate_dataset, SceneParams};
use objnav::valuemaps::SelectorMode;
use objnav::Config;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let scenes = generate_dataset(100, 5, &SceneParams::structured())?;
    let cfg = Config::default();
    let spec = SuiteSpec {
        modes: vec![
            SelectorMode::Dwfe,
            SelectorMode::Shf,
            SelectorMode::NearestFrontier,
            SelectorMode::RandomFrontier,
        ],
        episodes_per_scene: 2,
        seed: 1,
        jobs: 0,
    };
    let report = run_suite(&scenes, &spec, &cfg, &oracle_factory(&cfg))?;
    print!("{}", report.to_markdown());
    Ok(())
}
