//! Agent belief grid built from depth rays, and frontier extraction.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, CellWalk, GridDims, NEIGHBORS8};
use crate::scene::{Observation, Pose};

/// Slack when matching a cell's entry distance against a reported range.
const RANGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    #[default]
    Unknown,
    Free,
    Occupied,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    dims: GridDims,
    cells: Vec<CellState>,
    scratch: Vec<usize>,
}

impl OccupancyGrid {
    pub fn unknown(dims: GridDims) -> Self {
        Self {
            dims,
            cells: vec![CellState::Unknown; dims.len()],
            scratch: Vec::new(),
        }
    }

    /// Builds a grid from explicit states (row-major).
    pub fn from_states(dims: GridDims, cells: Vec<CellState>) -> Self {
        assert_eq!(cells.len(), dims.len(), "state count must match grid size");
        Self {
            dims,
            cells,
            scratch: Vec::new(),
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn states(&self) -> &[CellState] {
        &self.cells
    }

    /// Out-of-bounds reads as unknown.
    pub fn get(&self, c: Cell) -> CellState {
        if self.dims.contains(c) {
            self.cells[self.dims.index(c)]
        } else {
            CellState::Unknown
        }
    }

    pub fn set(&mut self, c: Cell, s: CellState) {
        let i = self.dims.index(c);
        self.cells[i] = s;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == CellState::Free
    }

    pub fn unknown_count(&self) -> usize {
        self.cells.iter().filter(|&&s| s == CellState::Unknown).count()
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&s| s == CellState::Free).count()
    }

    /// Ray-casts one observation into the grid.
    ///
    /// Cells entered before the reported range become free; for a hit ray the
    /// cell entered at the reported range becomes occupied. Within one call
    /// occupied wins over free. Known cells never return to unknown.
    pub fn integrate(&mut self, pose: &Pose, obs: &Observation) {
        let mut hits = std::mem::take(&mut self.scratch);
        hits.clear();
        for ray in &obs.depth {
            let (dx, dy) = (ray.angle.cos(), ray.angle.sin());
            for (c, t) in CellWalk::new(self.dims, pose.x, pose.y, dx, dy, ray.range) {
                let i = self.dims.index(c);
                if t < ray.range - RANGE_EPS {
                    self.cells[i] = CellState::Free;
                } else {
                    if ray.hit {
                        hits.push(i);
                    }
                    break;
                }
            }
        }
        for &i in &hits {
            self.cells[i] = CellState::Occupied;
        }
        self.scratch = hits;
    }

    /// Portable graymap (plain `P2`) dump: unknown 128, free 255, occupied 0.
    /// Rows run from the top of the map (highest `y`) down.
    pub fn to_pgm(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P2");
        let _ = writeln!(out, "# objnav belief grid: unknown=128 free=255 occupied=0");
        let _ = writeln!(out, "{} {}", self.dims.width, self.dims.height);
        let _ = writeln!(out, "255");
        for y in (0..self.dims.height).rev() {
            let row = &self.cells[y * self.dims.width..(y + 1) * self.dims.width];
            let line: Vec<&str> = row
                .iter()
                .map(|s| match s {
                    CellState::Unknown => "128",
                    CellState::Free => "255",
                    CellState::Occupied => "0",
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Free cells with at least one unknown 8-neighbor, in row-major order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrontierSet {
    pub cells: Vec<Cell>,
}

impl FrontierSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

pub fn extract_frontiers(grid: &OccupancyGrid) -> FrontierSet {
    let d = grid.dims;
    let (w, h) = (d.width as i32, d.height as i32);
    let states = &grid.cells;
    let mut cells = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if states[i] != CellState::Free {
                continue;
            }
            let frontier = NEIGHBORS8.iter().any(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0
                    && ny >= 0
                    && nx < w
                    && ny < h
                    && states[(ny * w + nx) as usize] == CellState::Unknown
            });
            if frontier {
                cells.push(Cell::new(x, y));
            }
        }
    }
    FrontierSet { cells }
}
