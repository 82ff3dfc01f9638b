//! Grid search over the belief map, path following, and the ground-truth
//! shortest-path oracle used for SPL.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{contract, Error, Result};
use crate::grid::{Cell, CellWalk, GridDims, Point};
use crate::mapping::{CellState, OccupancyGrid};
use crate::scene::{wrap_angle, Action, Pose, Scene, SUCCESS_RADIUS_M};
use crate::valuemaps::ValueField;

/// Lower bound on the per-meter traversal cost.
pub const C_MIN: f64 = 0.05;
/// Heading error below which the agent moves forward.
pub const ALIGN_TOLERANCE_DEG: f64 = 15.0;
/// Waypoints closer than this are considered reached.
pub const WAYPOINT_RADIUS_M: f64 = 0.10;

/// 8-neighborhood with step lengths in cells.
const MOVES: [(i32, i32, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, 1, SQRT_2),
    (-1, -1, SQRT_2),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    /// Start to target inclusive.
    pub cells: Vec<Cell>,
    pub length_m: f64,
    /// Accumulated traversal cost.
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f, then on index for determinism.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Neighbors of `i` reachable in one move, with the move length in cells.
/// Diagonals need both orthogonal side cells passable.
fn successors(dims: GridDims, passable: &[bool], i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let c = dims.cell_at(i);
    MOVES.iter().filter_map(move |&(dx, dy, len)| {
        let n = c.offset(dx, dy);
        if !dims.contains(n) || !passable[dims.index(n)] {
            return None;
        }
        if dx != 0 && dy != 0 {
            let a = c.offset(dx, 0);
            let b = c.offset(0, dy);
            if !passable[dims.index(a)] || !passable[dims.index(b)] {
                return None;
            }
        }
        Some((dims.index(n), len))
    })
}

/// Cost of entering cell `to` with a move of `len` cells.
pub fn edge_cost(aff: &ValueField, to: usize, len_cells: f64, c_min: f64) -> f64 {
    (1.0 - aff.values[to]).max(c_min) * len_cells * aff.dims.resolution
}

fn free_mask(grid: &OccupancyGrid) -> Vec<bool> {
    grid.states().iter().map(|&s| s == CellState::Free).collect()
}

/// A* from `start` to `target` over believed-free cells with cost
/// `max(1 - A, c_min)` per meter.
pub fn plan(grid: &OccupancyGrid, aff: &ValueField, start: Cell, target: Cell) -> Result<Path> {
    plan_with(grid, aff, start, target, C_MIN)
}

pub fn plan_with(grid: &OccupancyGrid, aff: &ValueField, start: Cell, target: Cell, c_min: f64) -> Result<Path> {
    let dims = grid.dims();
    if aff.dims.width != dims.width || aff.dims.height != dims.height {
        return Err(contract("affordance field does not match the grid"));
    }
    if !(c_min > 0.0) {
        return Err(contract(format!("c_min must be positive, got {c_min}")));
    }
    if !grid.is_free(start) {
        return Err(contract(format!("start {start:?} is not believed free")));
    }
    if !grid.is_free(target) {
        return Err(Error::NoPath { from: start, to: target });
    }
    let passable = free_mask(grid);
    let res = dims.resolution;
    // Shrunk slightly so rounding never makes it overestimate.
    let h = |i: usize| {
        let c = dims.cell_at(i);
        (c.dist2(target) as f64).sqrt() * res * c_min * (1.0 - 1e-12)
    };
    let (s, t) = (dims.index(start), dims.index(target));
    let mut g = vec![f64::INFINITY; dims.len()];
    let mut parent = vec![usize::MAX; dims.len()];
    let mut heap = BinaryHeap::new();
    g[s] = 0.0;
    heap.push(Entry { f: h(s), g: 0.0, idx: s });
    while let Some(Entry { g: gu, idx: u, .. }) = heap.pop() {
        if gu > g[u] {
            continue;
        }
        if u == t {
            break;
        }
        for (v, len) in successors(dims, &passable, u) {
            let nv = gu + edge_cost(aff, v, len, c_min);
            if nv < g[v] {
                g[v] = nv;
                parent[v] = u;
                heap.push(Entry { f: nv + h(v), g: nv, idx: v });
            }
        }
    }
    if !g[t].is_finite() {
        return Err(Error::NoPath { from: start, to: target });
    }
    let mut idx = vec![t];
    while *idx.last().unwrap() != s {
        idx.push(parent[*idx.last().unwrap()]);
    }
    idx.reverse();
    debug_assert!(idx.iter().all(|&i| h(i) <= g[t] - g[i] + 1e-9), "heuristic overestimated");
    let cells: Vec<Cell> = idx.iter().map(|&i| dims.cell_at(i)).collect();
    let length_m = cells
        .windows(2)
        .map(|w| if w[0].x != w[1].x && w[0].y != w[1].y { SQRT_2 } else { 1.0 } * res)
        .sum();
    Ok(Path { cells, length_m, cost: g[t] })
}

/// Multi-source Dijkstra over `passable` cells with uniform cost per meter.
fn geodesic(dims: GridDims, passable: &[bool], sources: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; dims.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry { f: 0.0, g: 0.0, idx: s });
    }
    while let Some(Entry { g: du, idx: u, .. }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for (v, len) in successors(dims, passable, u) {
            let nv = du + len * dims.resolution;
            if nv < dist[v] {
                dist[v] = nv;
                heap.push(Entry { f: nv, g: nv, idx: v });
            }
        }
    }
    dist
}

/// Geodesic distance in meters from `start` to every believed-free cell;
/// infinite where unreachable.
pub fn distance_field(grid: &OccupancyGrid, start: Cell) -> Vec<f64> {
    let dims = grid.dims();
    if !grid.is_free(start) {
        return vec![f64::INFINITY; dims.len()];
    }
    geodesic(dims, &free_mask(grid), &[dims.index(start)])
}

/// Ground-truth cells from which stopping succeeds: free, within the success
/// radius of a goal instance and with line of sight to it.
pub fn success_region(scene: &Scene, goal_category: &str) -> Vec<bool> {
    let dims = scene.dims;
    let mut region = vec![false; dims.len()];
    let r = (SUCCESS_RADIUS_M / dims.resolution).ceil() as i32 + 1;
    for obj in scene.objects.iter().filter(|o| o.category == goal_category) {
        let ac = dims.world_to_cell(obj.anchor.x, obj.anchor.y);
        for dy in -r..=r {
            for dx in -r..=r {
                let c = ac.offset(dx, dy);
                if !dims.contains(c) || scene.is_occupied(c) {
                    continue;
                }
                let (x, y) = dims.cell_center(c);
                let p = Point::new(x, y);
                if p.dist(obj.anchor) <= SUCCESS_RADIUS_M + 1e-9 && scene.line_of_sight(p, obj.anchor) {
                    region[dims.index(c)] = true;
                }
            }
        }
    }
    region
}

/// Shortest 8-connected ground-truth distance from the start pose's cell
/// to the success region of `goal_category`, or `None` if unreachable.
pub fn shortest_path_length(scene: &Scene, start: &Pose, goal_category: &str) -> Option<f64> {
    let dims = scene.dims;
    let region = success_region(scene, goal_category);
    let sources: Vec<usize> = (0..dims.len()).filter(|&i| region[i]).collect();
    let s = dims.world_to_cell(start.x, start.y);
    if !dims.contains(s) || sources.is_empty() {
        return None;
    }
    let passable: Vec<bool> = scene.occupied.iter().map(|o| !o).collect();
    // Searching backwards from the region gives the same distances on an
    // undirected grid.
    let d = geodesic(dims, &passable, &sources)[dims.index(s)];
    d.is_finite().then_some(d)
}

/// Marks free cells within `radius_cells` of an occupied cell as occupied.
pub fn inflate(grid: &OccupancyGrid, radius_cells: i32) -> OccupancyGrid {
    if radius_cells <= 0 {
        return grid.clone();
    }
    let dims = grid.dims();
    let r2 = (radius_cells * radius_cells) as i64;
    let offsets: Vec<(i32, i32)> = (-radius_cells..=radius_cells)
        .flat_map(|dy| (-radius_cells..=radius_cells).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as i64) <= r2)
        .collect();
    let mut states = grid.states().to_vec();
    for (i, s) in grid.states().iter().enumerate() {
        if *s != CellState::Occupied {
            continue;
        }
        let c = dims.cell_at(i);
        for &(dx, dy) in &offsets {
            let n = c.offset(dx, dy);
            if dims.contains(n) {
                let j = dims.index(n);
                if states[j] == CellState::Free {
                    states[j] = CellState::Occupied;
                }
            }
        }
    }
    OccupancyGrid::from_states(dims, states)
}

/// True when every cell the segment touches is believed free.
pub fn segment_clear(grid: &OccupancyGrid, from: Point, to: Point) -> bool {
    CellWalk::between(grid.dims(), (from.x, from.y), (to.x, to.y)).all(|(c, _)| grid.is_free(c))
}

/// Shortcuts a cell path into straight segments the grid believes clear,
/// none longer than `max_spacing_m`. The first point of the path is
/// replaced by `from`.
pub fn waypoints(grid: &OccupancyGrid, from: Point, path: &Path, max_spacing_m: f64) -> VecDeque<Point> {
    let dims = grid.dims();
    let pts: Vec<Point> = path
        .cells
        .iter()
        .map(|&c| {
            let (x, y) = dims.cell_center(c);
            Point::new(x, y)
        })
        .collect();
    let mut out = VecDeque::new();
    if pts.len() <= 1 {
        out.extend(pts.last().copied());
        return out;
    }
    let mut anchor = from;
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = i + 1;
        while j + 1 < pts.len()
            && anchor.dist(pts[j + 1]) <= max_spacing_m
            && segment_clear(grid, anchor, pts[j + 1])
        {
            j += 1;
        }
        out.push_back(pts[j]);
        anchor = pts[j];
        i = j;
    }
    out
}

/// Turns a waypoint queue into the next discrete action, popping waypoints
/// already within reach. `None` once the queue is exhausted.
pub fn next_action(pose: &Pose, waypoints: &mut VecDeque<Point>) -> Option<Action> {
    while waypoints
        .front()
        .is_some_and(|w| w.dist(pose.position()) <= WAYPOINT_RADIUS_M)
    {
        waypoints.pop_front();
    }
    let w = *waypoints.front()?;
    let bearing = (w.y - pose.y).atan2(w.x - pose.x);
    let err = wrap_angle(bearing - pose.heading.radians());
    if err.abs() <= ALIGN_TOLERANCE_DEG.to_radians() + 1e-9 {
        Some(Action::Forward)
    } else if err > 0.0 || (err - PI).abs() < 1e-9 {
        Some(Action::TurnLeft)
    } else {
        Some(Action::TurnRight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RESOLUTION_M;
    use crate::scene::test_util::{object, open_scene, set_wall};
    use crate::scene::{step, Heading};
    use crate::valuemaps::FieldKind;

    fn free(w: usize, h: usize) -> OccupancyGrid {
        let d = GridDims::new(w, h, RESOLUTION_M);
        OccupancyGrid::from_states(d, vec![CellState::Free; d.len()])
    }

    #[test]
    fn uniform_field_gives_octile_length() {
        let g = free(20, 20);
        let aff = ValueField::constant(g.dims(), FieldKind::Affordance, 0.5);
        let p = plan(&g, &aff, Cell::new(1, 1), Cell::new(11, 5)).unwrap();
        let octile = (4.0 * SQRT_2 + 6.0) * RESOLUTION_M;
        assert!((p.length_m - octile).abs() < 1e-9);
        assert_eq!(p.cells.first(), Some(&Cell::new(1, 1)));
        assert_eq!(p.cells.last(), Some(&Cell::new(11, 5)));
        for w in p.cells.windows(2) {
            assert!(w[0].dist2(w[1]) <= 2);
        }
    }

    #[test]
    fn walled_target_has_no_path() {
        let mut g = free(10, 10);
        for y in 0..10 {
            g.set(Cell::new(5, y), CellState::Occupied);
        }
        let aff = ValueField::zeros(g.dims(), FieldKind::Affordance);
        assert!(matches!(
            plan(&g, &aff, Cell::new(1, 1), Cell::new(8, 8)),
            Err(Error::NoPath { .. })
        ));
    }

    #[test]
    fn no_corner_cutting() {
        let mut g = free(3, 3);
        g.set(Cell::new(1, 0), CellState::Occupied);
        g.set(Cell::new(0, 1), CellState::Occupied);
        let aff = ValueField::zeros(g.dims(), FieldKind::Affordance);
        assert!(plan(&g, &aff, Cell::new(0, 0), Cell::new(1, 1)).is_err());
    }

    #[test]
    fn prefers_high_affordance_branch() {
        // Two equal-length routes around a block; the upper one is cheap.
        let mut g = free(7, 5);
        for x in 1..6 {
            g.set(Cell::new(x, 2), CellState::Occupied);
        }
        let mut aff = ValueField::zeros(g.dims(), FieldKind::Affordance);
        for x in 0..7 {
            aff.values[g.dims().index(Cell::new(x, 3))] = 1.0;
            aff.values[g.dims().index(Cell::new(x, 4))] = 1.0;
        }
        let p = plan(&g, &aff, Cell::new(0, 2), Cell::new(6, 2)).unwrap();
        assert!(p.cells.iter().all(|c| c.y >= 2), "{:?}", p.cells);
    }

    #[test]
    fn next_action_rules() {
        let pose = Pose::new(1.0, 1.0, Heading::default());
        let mut ahead = VecDeque::from([Point::new(2.0, 1.0)]);
        assert_eq!(next_action(&pose, &mut ahead), Some(Action::Forward));
        let mut left = VecDeque::from([Point::new(1.0, 2.0)]);
        assert_eq!(next_action(&pose, &mut left), Some(Action::TurnLeft));
        let mut right = VecDeque::from([Point::new(1.0, 0.0)]);
        assert_eq!(next_action(&pose, &mut right), Some(Action::TurnRight));
        let mut behind = VecDeque::from([Point::new(0.0, 1.0)]);
        assert_eq!(next_action(&pose, &mut behind), Some(Action::TurnLeft));
        let mut reached = VecDeque::from([Point::new(1.05, 1.0)]);
        assert_eq!(next_action(&pose, &mut reached), None);
        assert!(reached.is_empty());
    }

    #[test]
    fn following_waypoints_converges() {
        let scene = open_scene(80, 80);
        for k in 0..12 {
            let mut pose = Pose::new(2.0, 2.0, Heading::from_steps(k));
            let goal = Point::new(3.1, 2.7);
            let mut wps = VecDeque::from([goal]);
            let mut n = 0;
            while let Some(a) = next_action(&pose, &mut wps) {
                pose = step(&scene, pose, a);
                n += 1;
                assert!(n < 40, "did not converge from heading {k}");
            }
            assert!(pose.position().dist(goal) <= WAYPOINT_RADIUS_M);
        }
    }

    #[test]
    fn open_corridor_shortest_path() {
        let mut scene = open_scene(120, 20);
        let d = scene.dims;
        scene.objects.push(object("tv", 4.025, 0.525, &d));
        scene.goal_category = "tv".into();
        let start = Pose::new(1.025, 0.525, Heading::default());
        let l = shortest_path_length(&scene, &start, "tv").unwrap();
        assert!((l - 2.75).abs() < 1e-9, "{l}");
        let inside = Pose::new(3.9, 0.525, Heading::default());
        assert_eq!(shortest_path_length(&scene, &inside, "tv"), Some(0.0));
    }

    #[test]
    fn walled_goal_unreachable() {
        let mut scene = open_scene(60, 20);
        let d = scene.dims;
        set_wall(&mut scene, 30, 0, 31, 19);
        scene.objects.push(object("tv", 2.5, 0.5, &d));
        let start = Pose::new(0.5, 0.5, Heading::default());
        assert_eq!(shortest_path_length(&scene, &start, "tv"), None);
    }

    #[test]
    fn inflation_grows_walls() {
        let mut g = free(9, 9);
        g.set(Cell::new(4, 4), CellState::Occupied);
        let inf = inflate(&g, 2);
        assert_eq!(inf.get(Cell::new(6, 4)), CellState::Occupied);
        assert_eq!(inf.get(Cell::new(6, 6)), CellState::Free);
        assert_eq!(inf.get(Cell::new(7, 4)), CellState::Free);
    }

    #[test]
    fn waypoints_shortcut_open_space() {
        let g = free(40, 40);
        let aff = ValueField::constant(g.dims(), FieldKind::Affordance, 0.5);
        let p = plan(&g, &aff, Cell::new(2, 2), Cell::new(12, 7)).unwrap();
        let wps = waypoints(&g, Point::new(0.125, 0.125), &p, 1.0);
        assert_eq!(wps.len(), 1);
        assert_eq!(wps[0], Point::new(0.625, 0.375));
    }
}
