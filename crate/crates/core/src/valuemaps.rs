//! Scalar value fields over the belief grid: the action value map written by
//! the frontier selectors, the optional revisit penalty, the normalized
//! affordance map and target selection on it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::grid::{Cell, GridDims, Point};
use crate::islands::FrontierIsland;
use crate::mapping::{CellState, OccupancyGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Avm,
    Trajectory,
    Affordance,
    Cost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueField {
    pub dims: GridDims,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl ValueField {
    pub fn zeros(dims: GridDims, kind: FieldKind) -> Self {
        Self::constant(dims, kind, 0.0)
    }

    pub fn constant(dims: GridDims, kind: FieldKind, v: f64) -> Self {
        Self {
            dims,
            values: vec![v; dims.len()],
            kind,
        }
    }

    pub fn get(&self, c: Cell) -> f64 {
        self.values[self.dims.index(c)]
    }

    fn same_shape(&self, other: &ValueField) -> bool {
        self.dims.width == other.dims.width && self.dims.height == other.dims.height
    }

    /// Plain `P2` graymap, min-max scaled to 0..=255, top row first.
    pub fn to_pgm(&self) -> String {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let mut out = String::new();
        let _ = writeln!(out, "P2");
        let _ = writeln!(out, "# objnav {:?} field: min={lo} max={hi}", self.kind);
        let _ = writeln!(out, "{} {}", self.dims.width, self.dims.height);
        let _ = writeln!(out, "255");
        for y in (0..self.dims.height).rev() {
            let row = &self.values[y * self.dims.width..(y + 1) * self.dims.width];
            let line: Vec<String> = row
                .iter()
                .map(|&v| {
                    let g = if span > 0.0 { (v - lo) / span * 255.0 } else { 128.0 };
                    format!("{}", g.round() as u8)
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Which block decides where to explore. `GoalDirected` is entered at
/// run time on the first goal sighting and is never a configured mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMode {
    Dwfe,
    Shf,
    NearestFrontier,
    RandomFrontier,
    GoalDirected,
}

impl SelectorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectorMode::Dwfe => "dwfe",
            SelectorMode::Shf => "shf",
            SelectorMode::NearestFrontier => "nearest",
            SelectorMode::RandomFrontier => "random",
            SelectorMode::GoalDirected => "goal_directed",
        }
    }
}

impl std::fmt::Display for SelectorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SelectorMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dwfe" => Ok(Self::Dwfe),
            "shf" => Ok(Self::Shf),
            "nearest" | "nearest_frontier" => Ok(Self::NearestFrontier),
            "random" | "random_frontier" => Ok(Self::RandomFrontier),
            other => Err(format!("unknown mode {other:?} (expected dwfe, shf, nearest or random)")),
        }
    }
}

/// How per-island distance scores combine into the action value map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwfeAggregate {
    #[default]
    Sum,
    Max,
}

/// Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher)
/// in cell units, from the given seed cells.
pub fn squared_distance_transform(dims: GridDims, seeds: &[Cell]) -> Vec<f64> {
    let (w, h) = (dims.width, dims.height);
    let mut grid = vec![f64::INFINITY; w * h];
    for &c in seeds {
        grid[dims.index(c)] = 0.0;
    }
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    // Lower envelope of parabolas rooted at finite samples.
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
            } else {
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if k < 0 {
        d.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, out) in d.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Distance-weighted frontier scores. For each island, every navigable
/// (believed free) cell scores `1 - d/d_max`, where `d` is the Euclidean
/// distance to the island's nearest cell and `d_max` the largest such
/// distance over navigable cells. Island scores are summed (or maxed);
/// other cells stay 0.
pub fn dwfe_scores(grid: &OccupancyGrid, islands: &[FrontierIsland], aggregate: DwfeAggregate) -> ValueField {
    let dims = grid.dims();
    let mut field = ValueField::zeros(dims, FieldKind::Avm);
    let navigable: Vec<usize> = grid
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == CellState::Free)
        .map(|(i, _)| i)
        .collect();
    if islands.is_empty() || navigable.is_empty() {
        return field;
    }
    // Euclidean distances do not depend on the grid extent, so the
    // transform only needs the box around free and island cells.
    let mut lo = dims.cell_at(navigable[0]);
    let mut hi = lo;
    for c in navigable.iter().map(|&i| dims.cell_at(i)).chain(islands.iter().flat_map(|f| f.cells.iter().copied())) {
        lo = Cell::new(lo.x.min(c.x), lo.y.min(c.y));
        hi = Cell::new(hi.x.max(c.x), hi.y.max(c.y));
    }
    let sub = GridDims::new((hi.x - lo.x + 1) as usize, (hi.y - lo.y + 1) as usize, dims.resolution);
    let local = |i: usize| {
        let c = dims.cell_at(i);
        sub.index(Cell::new(c.x - lo.x, c.y - lo.y))
    };
    let nav_local: Vec<usize> = navigable.iter().map(|&i| local(i)).collect();
    for island in islands {
        let seeds: Vec<Cell> = island.cells.iter().map(|c| Cell::new(c.x - lo.x, c.y - lo.y)).collect();
        let d2 = squared_distance_transform(sub, &seeds);
        let d_max = nav_local.iter().map(|&i| d2[i]).fold(0.0, f64::max).sqrt();
        for (&i, &j) in navigable.iter().zip(&nav_local) {
            let s = if d_max > 0.0 { 1.0 - d2[j].sqrt() / d_max } else { 1.0 };
            match aggregate {
                DwfeAggregate::Sum => field.values[i] += s,
                DwfeAggregate::Max => field.values[i] = field.values[i].max(s),
            }
        }
    }
    field
}

/// Min-max normalizes vote differences over the islands and adds
/// `eta * normalized` on each island's cells. Equal votes normalize to 0.5.
/// Islands without an entry in `votes` count as 0.
pub fn shf_inject(
    avm: &ValueField,
    islands: &[FrontierIsland],
    votes: &BTreeMap<usize, i32>,
    eta: f64,
) -> Result<ValueField> {
    for id in votes.keys() {
        if !islands.iter().any(|f| f.id == *id) {
            return Err(contract(format!("vote for island {id} which is not in the island list")));
        }
    }
    let mut out = avm.clone();
    if islands.is_empty() {
        return Ok(out);
    }
    let h: Vec<f64> = islands
        .iter()
        .map(|f| votes.get(&f.id).copied().unwrap_or(0) as f64)
        .collect();
    let normalized = min_max(&h);
    for (island, hn) in islands.iter().zip(normalized) {
        for &c in &island.cells {
            let i = out.dims.index(c);
            out.values[i] += eta * hn;
        }
    }
    Ok(out)
}

/// Min-max to `[0, 1]`; a constant input maps to 0.5 everywhere.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|&v| (v - lo) / (hi - lo)).collect()
}

/// Element-wise sum of aligned fields, min-max normalized.
pub fn compose_affordance(fields: &[ValueField]) -> Result<ValueField> {
    let first = fields
        .first()
        .ok_or_else(|| contract("compose_affordance needs at least one field"))?;
    let mut sum = vec![0.0; first.values.len()];
    for f in fields {
        if !f.same_shape(first) {
            return Err(contract(format!(
                "field shape {}x{} does not match {}x{}",
                f.dims.width, f.dims.height, first.dims.width, first.dims.height
            )));
        }
        for (s, v) in sum.iter_mut().zip(&f.values) {
            *s += v;
        }
    }
    Ok(ValueField {
        dims: first.dims,
        values: min_max(&sum),
        kind: FieldKind::Affordance,
    })
}

/// Navigable cell with maximal affordance; ties go to the smallest
/// row-major index.
pub fn select_target(aff: &ValueField, grid: &OccupancyGrid) -> Result<Cell> {
    select_target_where(aff, grid, |_| true)
}

/// Like [`select_target`], restricted to navigable cells accepted by `allow`.
pub fn select_target_where(
    aff: &ValueField,
    grid: &OccupancyGrid,
    allow: impl Fn(usize) -> bool,
) -> Result<Cell> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in grid.states().iter().enumerate() {
        if *s != CellState::Free || !allow(i) {
            continue;
        }
        let v = aff.values[i];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| grid.dims().cell_at(i))
        .ok_or_else(|| contract("no navigable cell to select"))
}

/// Cell containing the centroid of the goal sightings.
pub fn goal_directed_target(sightings: &[Point], dims: GridDims) -> Result<Cell> {
    if sightings.is_empty() {
        return Err(contract("goal-directed target requested before any goal sighting"));
    }
    let n = sightings.len() as f64;
    let (sx, sy) = sightings.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Ok(dims.world_to_cell(sx / n, sy / n))
}

/// Revisit penalty: `-penalty` on cells within `radius_m` of any executed
/// position, 0 elsewhere.
pub fn trajectory_field(dims: GridDims, path: &[Point], radius_m: f64, penalty: f64) -> ValueField {
    let mut field = ValueField::zeros(dims, FieldKind::Trajectory);
    let r = (radius_m / dims.resolution).ceil() as i32;
    for p in path {
        let c = dims.world_to_cell(p.x, p.y);
        for dy in -r..=r {
            for dx in -r..=r {
                let n = c.offset(dx, dy);
                if !dims.contains(n) {
                    continue;
                }
                let (cx, cy) = dims.cell_center(n);
                if (cx - p.x).hypot(cy - p.y) <= radius_m {
                    field.values[dims.index(n)] = -penalty;
                }
            }
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RESOLUTION_M;

    fn island(id: usize, cells: &[(i32, i32)]) -> FrontierIsland {
        FrontierIsland {
            id,
            cells: cells.iter().map(|&(x, y)| Cell::new(x, y)).collect(),
            centroid: Point::default(),
            names: vec![],
        }
    }

    fn free_grid(w: usize, h: usize) -> OccupancyGrid {
        let d = GridDims::new(w, h, RESOLUTION_M);
        OccupancyGrid::from_states(d, vec![CellState::Free; d.len()])
    }

    #[test]
    fn edt_matches_brute_force() {
        let d = GridDims::new(13, 9, RESOLUTION_M);
        let seeds = [Cell::new(2, 3), Cell::new(10, 7), Cell::new(5, 0)];
        let edt = squared_distance_transform(d, &seeds);
        for c in d.cells() {
            let brute = seeds.iter().map(|&s| c.dist2(s)).min().unwrap() as f64;
            assert_eq!(edt[d.index(c)], brute, "{c:?}");
        }
    }

    #[test]
    fn island_cells_score_one_and_farthest_scores_zero() {
        let g = free_grid(6, 4);
        let f = dwfe_scores(&g, &[island(0, &[(0, 0)])], DwfeAggregate::Sum);
        assert_eq!(f.get(Cell::new(0, 0)), 1.0);
        assert_eq!(f.get(Cell::new(5, 3)), 0.0);
        assert!(f.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn non_navigable_cells_score_zero() {
        let d = GridDims::new(3, 1, RESOLUTION_M);
        let g = OccupancyGrid::from_states(d, vec![CellState::Free, CellState::Free, CellState::Occupied]);
        let f = dwfe_scores(&g, &[island(0, &[(0, 0)])], DwfeAggregate::Sum);
        assert_eq!(f.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_island_list_gives_zero_field() {
        let g = free_grid(4, 4);
        assert!(dwfe_scores(&g, &[], DwfeAggregate::Sum).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sum_and_max_aggregation() {
        let g = free_grid(5, 1);
        let isl = [island(0, &[(0, 0)]), island(1, &[(4, 0)])];
        let sum = dwfe_scores(&g, &isl, DwfeAggregate::Sum);
        let max = dwfe_scores(&g, &isl, DwfeAggregate::Max);
        assert_eq!(sum.values, vec![1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(max.values, vec![1.0, 0.75, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn zero_gain_injection_is_identity() {
        let g = free_grid(4, 4);
        let isl = [island(0, &[(0, 0)]), island(1, &[(3, 3)])];
        let avm = dwfe_scores(&g, &isl, DwfeAggregate::Sum);
        let votes = BTreeMap::from([(0, 5), (1, -5)]);
        assert_eq!(shf_inject(&avm, &isl, &votes, 0.0).unwrap(), avm);
    }

    #[test]
    fn equal_votes_add_half_gain() {
        let d = GridDims::new(6, 1, RESOLUTION_M);
        let avm = ValueField::zeros(d, FieldKind::Avm);
        let isl = [island(0, &[(0, 0)]), island(1, &[(2, 0)]), island(2, &[(4, 0)])];
        let votes = BTreeMap::from([(0, 2), (1, 2), (2, 2)]);
        let out = shf_inject(&avm, &isl, &votes, 0.8).unwrap();
        assert_eq!(out.values, vec![0.4, 0.0, 0.4, 0.0, 0.4, 0.0]);
    }

    #[test]
    fn unknown_island_vote_is_contract_violation() {
        let d = GridDims::new(2, 1, RESOLUTION_M);
        let avm = ValueField::zeros(d, FieldKind::Avm);
        let isl = [island(0, &[(0, 0)])];
        assert!(shf_inject(&avm, &isl, &BTreeMap::from([(7, 1)]), 1.0).is_err());
    }

    #[test]
    fn compose_normalizes_and_checks_shape() {
        let d = GridDims::new(3, 1, RESOLUTION_M);
        let f = ValueField { dims: d, values: vec![0.0, 1.0, 0.25], kind: FieldKind::Avm };
        assert_eq!(compose_affordance(std::slice::from_ref(&f)).unwrap().values, f.values);
        let c = ValueField::constant(d, FieldKind::Avm, 3.0);
        assert_eq!(compose_affordance(&[c]).unwrap().values, vec![0.5; 3]);
        let other = ValueField::zeros(GridDims::new(2, 1, RESOLUTION_M), FieldKind::Avm);
        assert!(compose_affordance(&[f, other]).is_err());
        assert!(compose_affordance(&[]).is_err());
    }

    #[test]
    fn select_target_argmax_and_tie_break() {
        let g = free_grid(6, 6);
        let mut f = ValueField::zeros(g.dims(), FieldKind::Affordance);
        f.values[g.dims().index(Cell::new(3, 4))] = 1.0;
        assert_eq!(select_target(&f, &g).unwrap(), Cell::new(3, 4));

        let mut states = vec![CellState::Free; 36];
        states[0] = CellState::Occupied;
        let g = OccupancyGrid::from_states(g.dims(), states);
        let c = ValueField::constant(g.dims(), FieldKind::Affordance, 0.5);
        assert_eq!(select_target(&c, &g).unwrap(), Cell::new(1, 0));

        let none = OccupancyGrid::unknown(g.dims());
        assert!(select_target(&c, &none).is_err());
    }

    #[test]
    fn goal_target_centroid() {
        let d = GridDims::new(100, 100, RESOLUTION_M);
        assert_eq!(goal_directed_target(&[Point::new(2.0, 3.0)], d).unwrap(), d.world_to_cell(2.0, 3.0));
        assert_eq!(
            goal_directed_target(&[Point::new(1.0, 1.0), Point::new(3.0, 3.0)], d).unwrap(),
            d.world_to_cell(2.0, 2.0)
        );
        assert!(goal_directed_target(&[], d).is_err());
    }

    #[test]
    fn trajectory_penalty_radius() {
        let d = GridDims::new(40, 40, RESOLUTION_M);
        let f = trajectory_field(d, &[Point::new(1.0, 1.0)], 0.3, 0.1);
        assert_eq!(f.get(d.world_to_cell(1.0, 1.2)), -0.1);
        assert_eq!(f.get(d.world_to_cell(1.0, 1.4)), 0.0);
    }
}
