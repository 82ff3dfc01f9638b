//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use objnav::grid::{Cell, GridDims, RESOLUTION_M};
use objnav::mapping::{CellState, OccupancyGrid};
use objnav::scene::{generate_dataset, Scene, SceneParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Belief grid with independently drawn states.
pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> OccupancyGrid {
    let p_unknown = rng.gen_range(0.05..0.6);
    let p_occ = rng.gen_range(0.0..0.3);
    let dims = GridDims::new(w, h, RESOLUTION_M);
    let cells = (0..dims.len())
        .map(|_| {
            let u: f64 = rng.gen();
            if u < p_unknown {
                CellState::Unknown
            } else if u < p_unknown + p_occ {
                CellState::Occupied
            } else {
                CellState::Free
            }
        })
        .collect();
    OccupancyGrid::from_states(dims, cells)
}

/// Free cells with an unknown 8-neighbor, checked cell by cell.
pub fn brute_frontiers(grid: &OccupancyGrid) -> Vec<Cell> {
    let d = grid.dims();
    let mut out = Vec::new();
    for y in 0..d.height as i32 {
        for x in 0..d.width as i32 {
            let c = Cell { x, y };
            if grid.get(c) != CellState::Free {
                continue;
            }
            let mut hit = false;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let n = Cell { x: x + dx, y: y + dy };
                    if (dx, dy) != (0, 0) && d.contains(n) && grid.get(n) == CellState::Unknown {
                        hit = true;
                    }
                }
            }
            if hit {
                out.push(c);
            }
        }
    }
    out
}

/// Connected components of the ε-graph by all-pairs union-find.
pub fn union_find_partition(cells: &[Cell], eps_cells: f64) -> BTreeSet<BTreeSet<Cell>> {
    let n = cells.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let dx = (cells[i].x - cells[j].x) as f64;
            let dy = (cells[i].y - cells[j].y) as f64;
            if (dx * dx + dy * dy).sqrt() <= eps_cells + 1e-9 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, BTreeSet<Cell>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().insert(cells[i]);
    }
    groups.into_values().collect()
}

/// Plain Dijkstra with a linear scan for the minimum, using the same move
/// and cost rules as the planner: 8 moves, no corner cutting, entering
/// cell `v` costs `max(1 - A(v), c_min) * len * res`.
pub fn dijkstra_cost(passable: &[bool], aff: &[f64], dims: GridDims, s: usize, t: usize, c_min: f64) -> Option<f64> {
    let n = dims.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    loop {
        let mut u = usize::MAX;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && (u == usize::MAX || dist[i] < dist[u]) {
                u = i;
            }
        }
        if u == usize::MAX {
            return None;
        }
        if u == t {
            return Some(dist[t]);
        }
        done[u] = true;
        let c = dims.cell_at(u);
        for dy in -1..=1i32 {
            for dx in -1..=1i32 {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let v = c.offset(dx, dy);
                if !dims.contains(v) || !passable[dims.index(v)] {
                    continue;
                }
                if dx != 0 && dy != 0 && (!passable[dims.index(c.offset(dx, 0))] || !passable[dims.index(c.offset(0, dy))]) {
                    continue;
                }
                let len = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let vi = dims.index(v);
                let nd = dist[u] + (1.0 - aff[vi]).max(c_min) * len * dims.resolution;
                if nd < dist[vi] {
                    dist[vi] = nd;
                }
            }
        }
    }
}

/// Shipped default scenes for suite tests.
pub fn scenes(seed: u64, count: usize) -> Vec<Scene> {
    generate_dataset(seed, count, &SceneParams::default()).expect("default scene parameters generate")
}

pub fn structured_scenes(seed: u64, count: usize) -> Vec<Scene> {
    generate_dataset(seed, count, &SceneParams::structured()).expect("structured scene parameters generate")
}

/// Result row with only the metric fields filled in.
pub fn stub(success: bool, path: f64, shortest: f64) -> objnav::harness::EpisodeResult {
    use objnav::harness::{EpisodeResult, Outcome};
    use objnav::scene::{Heading, Pose};
    EpisodeResult {
        scene_id: "s".into(),
        episode: 0,
        mode: objnav::valuemaps::SelectorMode::Dwfe,
        seed: 0,
        goal_category: "sofa".into(),
        success,
        outcome: if success { Outcome::Success } else { Outcome::Timeout },
        steps: 1,
        path_length_m: path,
        shortest_m: shortest,
        goal_seen_step: None,
        abstentions: 0,
        oracle_errors: 0,
        collisions: 0,
        error: None,
        trajectory: vec![Pose::new(0.0, 0.0, Heading::default())],
        final_frontiers: vec![],
        final_islands: vec![],
    }
}

/// Ground-truth success predicate, evaluated from geometry: some goal
/// instance lies within 0.25 m of the pose, inside the field of view and
/// with a clear line of sight.
pub fn stop_is_successful(scene: &Scene, goal: &str, pose: &objnav::scene::Pose, fov_deg: f64) -> bool {
    use std::f64::consts::PI;
    scene.objects.iter().filter(|o| o.category == goal).any(|o| {
        let (dx, dy) = (o.anchor.x - pose.x, o.anchor.y - pose.y);
        let range = dx.hypot(dy);
        let mut bearing = dy.atan2(dx) - pose.heading.radians();
        while bearing > PI {
            bearing -= 2.0 * PI;
        }
        while bearing < -PI {
            bearing += 2.0 * PI;
        }
        let in_view = range < 1e-9 || bearing.abs() <= fov_deg.to_radians() / 2.0 + 1e-9;
        range <= 0.25 + 1e-9 && in_view && scene.line_of_sight(pose.position(), o.anchor)
    })
}
