//! Procedural floor plans: a corridor along the long axis of the house,
//! rooms on either side with doors onto it, clutter blocks, and semantic
//! objects placed by room-type weights.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{default_goal_categories, default_room_profiles, RoomProfile};
use super::{Heading, ObjectInstance, Pose, Scene};
use crate::error::{Error, Result};
use crate::grid::{Cell, GridDims, Point, RESOLUTION_M};

const WALL_CELLS: i32 = 2;
const MIN_ROOM_DEPTH_CELLS: i32 = 30;
const MIN_ROOM_SPAN_CELLS: i32 = 32;
const ANCHOR_CLEARANCE_CELLS: i32 = 3;
const CLUTTER_MARGIN_CELLS: i32 = 7;
const DOOR_KEEPOUT_CELLS: i32 = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    /// House extent ranges in meters (inclusive bounds, sampled uniformly).
    pub width_m: (f64, f64),
    pub height_m: (f64, f64),
    pub rooms: (usize, usize),
    pub corridor_width_m: f64,
    pub door_width_m: f64,
    pub clutter_per_room: (usize, usize),
    pub objects_per_room: (usize, usize),
    /// Probability of an extra door between neighboring rooms.
    pub extra_door_prob: f64,
    pub room_profiles: Vec<RoomProfile>,
    pub goal_categories: Vec<String>,
    /// Minimum geodesic distance from start to the goal's success region.
    pub min_start_goal_m: f64,
    pub max_attempts: u32,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width_m: (7.0, 9.0),
            height_m: (5.5, 7.0),
            rooms: (3, 6),
            corridor_width_m: 1.0,
            door_width_m: 0.8,
            clutter_per_room: (0, 2),
            objects_per_room: (2, 4),
            extra_door_prob: 0.3,
            room_profiles: default_room_profiles(),
            goal_categories: default_goal_categories(),
            min_start_goal_m: 2.0,
            max_attempts: 64,
        }
    }
}

impl SceneParams {
    /// Scenes whose goals have strong room co-occurrence cues.
    pub fn structured() -> Self {
        Self {
            goal_categories: super::vocab::structured_goal_categories(),
            ..Self::default()
        }
    }
}

/// Axis-aligned interior rectangle, inclusive cell bounds.
#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x <= self.x1 && c.y >= self.y0 && c.y <= self.y1
    }
}

struct Layout {
    dims: GridDims,
    occupied: Vec<bool>,
    rooms: Vec<(Rect, usize)>,
    doors: Vec<Cell>,
}

impl Layout {
    fn set(&mut self, r: Rect, occupied: bool) {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                let c = Cell::new(x, y);
                if self.dims.contains(c) {
                    let i = self.dims.index(c);
                    self.occupied[i] = occupied;
                }
            }
        }
    }

    /// Opens a door and records its cells.
    fn door(&mut self, r: Rect) {
        self.set(r, false);
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                self.doors.push(Cell::new(x, y));
            }
        }
    }
}

/// Generates a scene. Deterministic in `(seed, params)`.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<Scene> {
    validate_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_reason = String::new();
    for _ in 0..params.max_attempts {
        match try_generate(&mut rng, params) {
            Ok(mut scene) => {
                scene.id = format!("scene-{seed:06}");
                return Ok(scene);
            }
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::Generation {
        attempts: params.max_attempts,
        reason: last_reason,
    })
}

fn validate_params(p: &SceneParams) -> Result<()> {
    let bad = |m: &str| Err(Error::Generation { attempts: 0, reason: m.to_string() });
    if p.rooms.0 == 0 || p.rooms.0 > p.rooms.1 {
        return bad("room count range must satisfy 1 <= min <= max");
    }
    if p.width_m.0 > p.width_m.1 || p.height_m.0 > p.height_m.1 || p.width_m.0 <= 0.0 {
        return bad("invalid house extent range");
    }
    if p.room_profiles.is_empty() || p.goal_categories.is_empty() {
        return bad("room profiles and goal categories must be non-empty");
    }
    if p.objects_per_room.0 > p.objects_per_room.1 || p.clutter_per_room.0 > p.clutter_per_room.1 {
        return bad("invalid per-room count range");
    }
    Ok(())
}

fn cells_of(m: f64) -> i32 {
    (m / RESOLUTION_M).round() as i32
}

fn try_generate(rng: &mut ChaCha8Rng, p: &SceneParams) -> Result<Scene, String> {
    let w = cells_of(rng.gen_range(p.width_m.0..=p.width_m.1));
    let h = cells_of(rng.gen_range(p.height_m.0..=p.height_m.1));
    let n_rooms = rng.gen_range(p.rooms.0..=p.rooms.1);
    let mut layout = build_layout(rng, p, w, h, n_rooms)?;
    place_clutter(rng, p, &mut layout);

    let objects = place_objects(rng, p, &layout)?;
    let dims = layout.dims;
    let mut scene = Scene {
        id: String::new(),
        dims,
        occupied: layout.occupied,
        objects,
        start_pose: Pose::new(0.0, 0.0, Heading::default()),
        goal_category: String::new(),
    };

    let mut goals: Vec<&String> = p
        .goal_categories
        .iter()
        .filter(|g| scene.objects.iter().filter(|o| &o.category == *g).count() == 1)
        .collect();
    goals.sort();
    goals.dedup();
    let goal = goals
        .choose(rng)
        .ok_or_else(|| "no goal category with a unique instance".to_string())?;
    scene.goal_category = (*goal).clone();

    scene.start_pose = sample_start(rng, &scene, p.min_start_goal_m)?;
    Ok(scene)
}

fn build_layout(
    rng: &mut ChaCha8Rng,
    p: &SceneParams,
    w: i32,
    h: i32,
    n_rooms: usize,
) -> Result<Layout, String> {
    // Build in (long, short) coordinates, transposing at the end if needed.
    let (long, short) = (w.max(h), w.min(h));
    let transpose = h > w;
    let dims = GridDims::new(long as usize, short as usize, RESOLUTION_M);
    let mut layout = Layout {
        dims,
        occupied: vec![true; dims.len()],
        rooms: Vec::new(),
        doors: Vec::new(),
    };
    let interior = Rect {
        x0: WALL_CELLS,
        y0: WALL_CELLS,
        x1: long - WALL_CELLS - 1,
        y1: short - WALL_CELLS - 1,
    };
    let kinds = room_kind_order(rng, p.room_profiles.len(), n_rooms);

    if n_rooms == 1 {
        layout.set(interior, false);
        layout.rooms.push((interior, kinds[0]));
    } else {
        let cw = cells_of(p.corridor_width_m).max(4);
        let dw = cells_of(p.door_width_m).max(4);
        let free_short = short - 2 * WALL_CELLS;
        let slack = free_short - cw - 2 * WALL_CELLS - 2 * MIN_ROOM_DEPTH_CELLS;
        if slack < 0 {
            return Err("house too narrow for corridor layout".into());
        }
        let below_depth = MIN_ROOM_DEPTH_CELLS + rng.gen_range(0..=slack);
        let c0 = interior.y0 + below_depth + WALL_CELLS;
        let c1 = c0 + cw - 1;
        layout.set(
            Rect { x0: interior.x0, y0: c0, x1: interior.x1, y1: c1 },
            false,
        );

        let n_below = n_rooms.div_ceil(2);
        let bands = [
            (interior.y0, c0 - WALL_CELLS - 1, n_below, c0 - WALL_CELLS),
            (c1 + WALL_CELLS + 1, interior.y1, n_rooms - n_below, c1 + 1),
        ];
        let mut kind_iter = kinds.into_iter();
        for (y0, y1, count, door_y) in bands {
            if count == 0 {
                continue;
            }
            let spans = split_span(rng, interior.x0, interior.x1, count)?;
            let mut prev: Option<Rect> = None;
            for (x0, x1) in spans {
                let room = Rect { x0, y0, x1, y1 };
                layout.set(room, false);
                let kind = kind_iter.next().unwrap_or(0);
                layout.rooms.push((room, kind));
                // Door onto the corridor.
                let span = x1 - x0 + 1;
                let dx = x0 + 4 + rng.gen_range(0..=(span - dw - 8).max(0));
                layout.door(Rect {
                    x0: dx,
                    y0: door_y,
                    x1: (dx + dw - 1).min(x1),
                    y1: door_y + WALL_CELLS - 1,
                });
                if let Some(pr) = prev {
                    if rng.gen_bool(p.extra_door_prob) {
                        let depth = y1 - y0 + 1;
                        let dy = y0 + 4 + rng.gen_range(0..=(depth - dw - 8).max(0));
                        layout.door(Rect {
                            x0: pr.x1 + 1,
                            y0: dy,
                            x1: x0 - 1,
                            y1: (dy + dw - 1).min(y1),
                        });
                    }
                }
                prev = Some(room);
            }
        }
    }

    if transpose {
        let tdims = GridDims::new(short as usize, long as usize, RESOLUTION_M);
        let mut occ = vec![true; tdims.len()];
        for c in dims.cells() {
            occ[tdims.index(Cell::new(c.y, c.x))] = layout.occupied[dims.index(c)];
        }
        let flip = |r: Rect| Rect { x0: r.y0, y0: r.x0, x1: r.y1, y1: r.x1 };
        layout = Layout {
            dims: tdims,
            occupied: occ,
            rooms: layout.rooms.iter().map(|&(r, k)| (flip(r), k)).collect(),
            doors: layout.doors.iter().map(|c| Cell::new(c.y, c.x)).collect(),
        };
    }
    Ok(layout)
}

/// Room kind indices: a shuffled pass over all profiles, repeated as needed.
fn room_kind_order(rng: &mut ChaCha8Rng, n_profiles: usize, n_rooms: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n_rooms);
    while out.len() < n_rooms {
        let mut pass: Vec<usize> = (0..n_profiles).collect();
        pass.shuffle(rng);
        out.extend(pass);
    }
    out.truncate(n_rooms);
    out
}

/// Splits `[lo, hi]` into `n` spans separated by wall bands.
fn split_span(rng: &mut ChaCha8Rng, lo: i32, hi: i32, n: usize) -> Result<Vec<(i32, i32)>, String> {
    let n_i = n as i32;
    let total = hi - lo + 1;
    let slack = total - n_i * MIN_ROOM_SPAN_CELLS - (n_i - 1) * WALL_CELLS;
    if slack < 0 {
        return Err("house too short for the requested room count".into());
    }
    let mut extra = vec![0i32; n];
    for _ in 0..slack {
        extra[rng.gen_range(0..n)] += 1;
    }
    let mut spans = Vec::with_capacity(n);
    let mut x = lo;
    for e in extra {
        let x1 = x + MIN_ROOM_SPAN_CELLS + e - 1;
        spans.push((x, x1));
        x = x1 + 1 + WALL_CELLS;
    }
    Ok(spans)
}

fn place_clutter(rng: &mut ChaCha8Rng, p: &SceneParams, layout: &mut Layout) {
    let rooms = layout.rooms.clone();
    for (room, _) in rooms {
        let n = rng.gen_range(p.clutter_per_room.0..=p.clutter_per_room.1);
        for _ in 0..n {
            let bw = rng.gen_range(6..=14);
            let bh = rng.gen_range(6..=14);
            let xmin = room.x0 + CLUTTER_MARGIN_CELLS;
            let ymin = room.y0 + CLUTTER_MARGIN_CELLS;
            let xmax = room.x1 - CLUTTER_MARGIN_CELLS - bw + 1;
            let ymax = room.y1 - CLUTTER_MARGIN_CELLS - bh + 1;
            if xmax < xmin || ymax < ymin {
                continue;
            }
            let x0 = rng.gen_range(xmin..=xmax);
            let y0 = rng.gen_range(ymin..=ymax);
            let block = Rect { x0, y0, x1: x0 + bw - 1, y1: y0 + bh - 1 };
            let near_door = layout.doors.iter().any(|d| {
                d.x >= block.x0 - DOOR_KEEPOUT_CELLS
                    && d.x <= block.x1 + DOOR_KEEPOUT_CELLS
                    && d.y >= block.y0 - DOOR_KEEPOUT_CELLS
                    && d.y <= block.y1 + DOOR_KEEPOUT_CELLS
            });
            if !near_door {
                layout.set(block, true);
            }
        }
    }
}

fn clear_around(dims: &GridDims, occupied: &[bool], c: Cell, r: i32) -> bool {
    (-r..=r).all(|dy| {
        (-r..=r).all(|dx| {
            let n = c.offset(dx, dy);
            dims.contains(n) && !occupied[dims.index(n)]
        })
    })
}

fn place_objects(
    rng: &mut ChaCha8Rng,
    p: &SceneParams,
    layout: &Layout,
) -> Result<Vec<ObjectInstance>, String> {
    let dims = layout.dims;
    // Objects live in the largest connected free region.
    let seed_cell = dims
        .cells()
        .find(|&c| clear_around(&dims, &layout.occupied, c, ANCHOR_CLEARANCE_CELLS))
        .ok_or("no free cell")?;
    let main = flood4(&dims, &layout.occupied, seed_cell);

    let mut objects: Vec<ObjectInstance> = Vec::new();
    for (room, kind) in &layout.rooms {
        let profile = &p.room_profiles[*kind];
        let candidates: Vec<Cell> = dims
            .cells()
            .filter(|&c| {
                room.contains(c)
                    && main[dims.index(c)]
                    && clear_around(&dims, &layout.occupied, c, ANCHOR_CLEARANCE_CELLS)
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut pool = profile.objects.clone();
        let n = rng
            .gen_range(p.objects_per_room.0..=p.objects_per_room.1)
            .min(pool.len());
        for _ in 0..n {
            let Ok(pick) = pool.choose_weighted(rng, |(_, w)| *w).map(|x| x.0.clone()) else {
                break;
            };
            pool.retain(|(name, _)| *name != pick);
            let spot = (0..32).find_map(|_| {
                let c = *candidates.choose(rng)?;
                let pt = Point::from(dims.cell_center(c));
                objects
                    .iter()
                    .all(|o| o.anchor.dist(pt) >= 0.5)
                    .then_some((c, pt))
            });
            let Some((_, anchor)) = spot else { continue };
            let footprint = super::format::footprint_around(&dims, &layout.occupied, anchor);
            objects.push(ObjectInstance {
                category: pick,
                anchor,
                footprint,
            });
        }
    }
    if objects.is_empty() {
        return Err("no objects placed".into());
    }
    Ok(objects)
}

/// 4-connected flood fill over free cells (equivalent reachability to
/// 8-connected motion without corner cutting).
fn flood4(dims: &GridDims, occupied: &[bool], from: Cell) -> Vec<bool> {
    let mut seen = vec![false; dims.len()];
    if !dims.contains(from) || occupied[dims.index(from)] {
        return seen;
    }
    let mut queue = VecDeque::from([from]);
    seen[dims.index(from)] = true;
    while let Some(c) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = c.offset(dx, dy);
            if dims.contains(n) {
                let i = dims.index(n);
                if !occupied[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}

/// Free cells reachable from `from` in the ground-truth scene.
pub fn reachable_from(scene: &Scene, from: Cell) -> Vec<bool> {
    flood4(&scene.dims, &scene.occupied, from)
}

fn sample_start(rng: &mut ChaCha8Rng, scene: &Scene, min_dist: f64) -> Result<Pose, String> {
    let dims = scene.dims;
    let goal = scene
        .goal_instances()
        .next()
        .ok_or("goal category has no instance")?;
    let goal_cell = dims.world_to_cell(goal.anchor.x, goal.anchor.y);
    let reach = reachable_from(scene, goal_cell);
    let candidates: Vec<Cell> = dims
        .cells()
        .filter(|&c| reach[dims.index(c)] && clear_around(&dims, &scene.occupied, c, ANCHOR_CLEARANCE_CELLS))
        .collect();
    for _ in 0..64 {
        let Some(&c) = candidates.choose(rng) else { break };
        let (x, y) = dims.cell_center(c);
        let pose = Pose::new(x, y, Heading::from_steps(rng.gen_range(0..12)));
        let d = crate::planner::shortest_path_length(scene, &pose, &scene.goal_category);
        if d.is_some_and(|d| d >= min_dist) {
            return Ok(pose);
        }
    }
    Err("no start pose far enough from the goal".into())
}

/// `count` scenes with consecutive seeds starting at `seed`.
pub fn generate_dataset(seed: u64, count: usize, params: &SceneParams) -> Result<Vec<Scene>> {
    (0..count as u64).map(|i| generate_scene(seed.wrapping_add(i), params)).collect()
}

/// Resamples the start pose of a scene for another episode. The layout and
/// goal stay fixed.
pub fn sample_episode(scene: &Scene, seed: u64, min_start_goal_m: f64) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = sample_start(&mut rng, scene, min_start_goal_m).map_err(|reason| Error::Generation {
        attempts: 1,
        reason,
    })?;
    Ok(Scene {
        start_pose: start,
        ..scene.clone()
    })
}
