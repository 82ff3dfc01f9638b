//! Cell indexing, world/cell conversion and segment traversal shared by the
//! simulator, the mapper and the planner.
//!
//! World coordinates are meters with the origin at the lower-left corner of
//! cell `(0, 0)`. Cell `(x, y)` covers `[x*res, (x+1)*res) × [y*res, (y+1)*res)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Fixed metric resolution of every grid in the bench.
pub const RESOLUTION_M: f64 = 0.05;

/// Slack applied when flooring world coordinates, so that values such as
/// `0.15 / 0.05 = 2.9999999999999996` land in the intended cell.
const FLOOR_EPS: f64 = 1e-9;

/// Integer grid coordinate. Ordered row-major: by `y`, then `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// Squared distance in cell units.
    pub fn dist2(self, other: Cell) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Continuous world position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// 8-connected neighbor offsets, orthogonal moves first.
pub const NEIGHBORS8: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

/// Shape and resolution of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
}

impl GridDims {
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        Self {
            width,
            height,
            resolution,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Row-major index. Caller guarantees `contains(c)`.
    pub fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.resolution + FLOOR_EPS).floor() as i32,
            (y / self.resolution + FLOOR_EPS).floor() as i32,
        )
    }

    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell_at(i))
    }
}

/// Grid traversal (Amanatides & Woo) of the segment starting at a world
/// point in a given direction. Yields every cell the segment enters,
/// together with the parametric distance (meters) at which it is entered.
/// When the segment crosses a cell corner exactly, both side cells are
/// yielded before the diagonal one, so nothing slips between two
/// diagonally touching cells.
#[derive(Clone, Debug)]
pub struct CellWalk {
    dims: GridDims,
    cell: Cell,
    x: Axis,
    y: Axis,
    limit: f64,
    queue: [(Cell, f64); 3],
    queued: usize,
    served: usize,
    done: bool,
}

/// Per-axis traversal state. Boundary crossing distances are recomputed
/// from the boundary index instead of accumulated, so long walks do not
/// drift.
#[derive(Clone, Copy, Debug)]
struct Axis {
    step: i32,
    origin: f64,
    dir: f64,
    res: f64,
    /// Index of the next grid line to cross.
    boundary: i64,
}

impl Axis {
    fn new(origin: f64, dir: f64, cell: i32, res: f64) -> Self {
        const TINY: f64 = 1e-12;
        let (step, boundary) = if dir > TINY {
            (1, cell as i64 + 1)
        } else if dir < -TINY {
            (-1, cell as i64)
        } else {
            (0, 0)
        };
        Self {
            step,
            origin,
            dir,
            res,
            boundary,
        }
    }

    fn t_next(&self) -> f64 {
        if self.step == 0 {
            f64::INFINITY
        } else {
            (self.boundary as f64 * self.res - self.origin) / self.dir
        }
    }

    fn cross(&mut self) {
        self.boundary += self.step as i64;
    }
}

/// Slack on the walk length so a cell entered exactly at the limit is kept.
const LIMIT_EPS: f64 = 1e-9;

impl CellWalk {
    /// Walk from `(x0, y0)` along unit direction `(dx, dy)` up to `limit` meters.
    pub fn new(dims: GridDims, x0: f64, y0: f64, dx: f64, dy: f64, limit: f64) -> Self {
        let res = dims.resolution;
        let cell = dims.world_to_cell(x0, y0);
        let inside = dims.contains(cell);
        Self {
            dims,
            cell,
            x: Axis::new(x0, dx, cell.x, res),
            y: Axis::new(y0, dy, cell.y, res),
            limit,
            queue: [(cell, 0.0); 3],
            queued: usize::from(inside),
            served: 0,
            done: !inside,
        }
    }

    /// Walk the segment between two world points.
    pub fn between(dims: GridDims, from: (f64, f64), to: (f64, f64)) -> Self {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len = dx.hypot(dy);
        if len == 0.0 {
            return Self::new(dims, from.0, from.1, 1.0, 0.0, 0.0);
        }
        Self::new(dims, from.0, from.1, dx / len, dy / len, len)
    }

    fn advance(&mut self) {
        self.queued = 0;
        self.served = 0;
        let (tx, ty) = (self.x.t_next(), self.y.t_next());
        let t = tx.min(ty);
        if !t.is_finite() || t > self.limit + LIMIT_EPS {
            self.done = true;
            return;
        }
        if (tx - ty).abs() < 1e-12 {
            for side in [self.cell.offset(self.x.step, 0), self.cell.offset(0, self.y.step)] {
                if self.dims.contains(side) {
                    self.queue[self.queued] = (side, t);
                    self.queued += 1;
                }
            }
            self.cell = self.cell.offset(self.x.step, self.y.step);
            self.x.cross();
            self.y.cross();
        } else if tx < ty {
            self.cell.x += self.x.step;
            self.x.cross();
        } else {
            self.cell.y += self.y.step;
            self.y.cross();
        }
        if self.dims.contains(self.cell) {
            self.queue[self.queued] = (self.cell, t);
            self.queued += 1;
        } else {
            self.done = true;
        }
    }
}

impl Iterator for CellWalk {
    /// `(cell, entry distance)`. Leaving the grid ends the walk.
    type Item = (Cell, f64);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.served < self.queued {
                self.served += 1;
                return Some(self.queue[self.served - 1]);
            }
            if self.done {
                return None;
            }
            self.advance();
        }
    }
}
