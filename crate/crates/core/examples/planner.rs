//! Plans across a ground-truth map and replays the discrete actions.

use objnav::mapping::{CellState, OccupancyGrid};
use objnav::planner::{next_action, plan, shortest_path_length, waypoints};
use objnav::scene::{generate_scene, step, SceneParams};
use objnav::valuemaps::{FieldKind, ValueField};

fn main() -> anyhow::Result<()> {
    let scene = generate_scene(4, &SceneParams::default())?;
    let d = scene.dims;
    let states = scene.occupied.iter().map(|&o| if o { CellState::Occupied } else { CellState::Free }).collect();
    let grid = OccupancyGrid::from_states(d, states);
    let aff = ValueField::constant(d, FieldKind::Affordance, 0.5);

    let goal = scene.goal_instances().next().expect("generated scenes have a goal");
    let start = d.world_to_cell(scene.start_pose.x, scene.start_pose.y);
    let target = goal.footprint[0];
    let path = plan(&grid, &aff, start, target)?;
    println!("A*: {} cells, {:.2} m, cost {:.3}", path.cells.len(), path.length_m, path.cost);
    if let Some(l) = shortest_path_length(&scene, &scene.start_pose, &scene.goal_category) {
        println!("shortest to the success region: {l:.2} m");
    }

    let mut wps = waypoints(&grid, scene.start_pose.position(), &path, 1.0);
    println!("{} waypoints", wps.len());
    let mut pose = scene.start_pose;
    let mut actions = Vec::new();
    while let Some(a) = next_action(&pose, &mut wps) {
        actions.push(format!("{a:?}"));
        pose = step(&scene, pose, a);
        if actions.len() > 400 {
            break;
        }
    }
    println!("{} actions, ending at ({:.2}, {:.2})", actions.len(), pose.x, pose.y);
    Ok(())
}
