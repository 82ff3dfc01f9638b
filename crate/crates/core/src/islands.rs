//! Frontier islands: density clustering of frontier cells, plus the object
//! names seen around each island.
//!
//! With `min_samples = 1` every point is a core point, so the clustering is
//! exactly the connected components of the ε-neighborhood graph. That case
//! runs on a union-find over a bucket grid; larger `min_samples` fall back
//! to textbook core/border expansion with noise discarded.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::grid::{Cell, Point};
use crate::mapping::FrontierSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierIsland {
    /// Position in the island list of the current step.
    pub id: usize,
    /// Member cells, row-major.
    pub cells: Vec<Cell>,
    pub centroid: Point,
    /// Sorted, deduplicated object categories seen near the island.
    pub names: Vec<String>,
}

/// An object category observed at an estimated world position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sighting {
    pub category: String,
    pub position: Point,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Spatial hash of cells into square buckets at least ε wide.
struct BucketIndex {
    size: i32,
    buckets: HashMap<(i32, i32), Vec<usize>>,
}

impl BucketIndex {
    fn new(cells: &[Cell], radius_cells: f64) -> Self {
        let size = (radius_cells.ceil() as i32).max(1);
        let mut buckets: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            buckets
                .entry((c.x.div_euclid(size), c.y.div_euclid(size)))
                .or_default()
                .push(i);
        }
        Self { size, buckets }
    }

    fn neighbors_of<'a>(&'a self, c: Cell) -> impl Iterator<Item = usize> + 'a {
        let (bx, by) = (c.x.div_euclid(self.size), c.y.div_euclid(self.size));
        (-1..=1).flat_map(move |dy| {
            (-1..=1).flat_map(move |dx| {
                self.buckets
                    .get(&(bx + dx, by + dy))
                    .into_iter()
                    .flatten()
                    .copied()
            })
        })
    }
}

/// ε-neighborhood test between cell centers, evaluated in cell units.
fn within(a: Cell, b: Cell, r2: f64) -> bool {
    (a.dist2(b) as f64) <= r2 + 1e-9
}

/// Clusters frontier cells into islands.
pub fn cluster(
    frontiers: &FrontierSet,
    resolution: f64,
    eps_m: f64,
    min_samples: usize,
) -> Result<Vec<FrontierIsland>> {
    if eps_m <= 0.0 || !eps_m.is_finite() {
        return Err(contract(format!("eps must be positive, got {eps_m}")));
    }
    if min_samples == 0 {
        return Err(contract("min_samples must be at least 1"));
    }
    let cells = &frontiers.cells;
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let r = eps_m / resolution;
    let r2 = r * r;
    let index = BucketIndex::new(cells, r);
    let labels = if min_samples == 1 {
        components(cells, &index, r2)
    } else {
        dbscan_general(cells, &index, r2, min_samples)
    };

    let mut groups: HashMap<usize, Vec<Cell>> = HashMap::new();
    for (c, label) in cells.iter().zip(labels) {
        if let Some(l) = label {
            groups.entry(l).or_default().push(*c);
        }
    }
    let mut groups: Vec<Vec<Cell>> = groups.into_values().collect();
    for g in &mut groups {
        g.sort();
    }
    groups.sort_by_key(|g| g[0]);
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(id, cells)| {
            let n = cells.len() as f64;
            let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), c| {
                (sx + (c.x as f64 + 0.5), sy + (c.y as f64 + 0.5))
            });
            FrontierIsland {
                id,
                centroid: Point::new(sx / n * resolution, sy / n * resolution),
                cells,
                names: Vec::new(),
            }
        })
        .collect())
}

fn components(cells: &[Cell], index: &BucketIndex, r2: f64) -> Vec<Option<usize>> {
    let mut uf = UnionFind::new(cells.len());
    for (i, &c) in cells.iter().enumerate() {
        for j in index.neighbors_of(c) {
            if j > i && within(c, cells[j], r2) {
                uf.union(i, j);
            }
        }
    }
    (0..cells.len()).map(|i| Some(uf.find(i))).collect()
}

fn dbscan_general(
    cells: &[Cell],
    index: &BucketIndex,
    r2: f64,
    min_samples: usize,
) -> Vec<Option<usize>> {
    let neighbors: Vec<Vec<usize>> = cells
        .iter()
        .map(|&c| {
            index
                .neighbors_of(c)
                .filter(|&j| within(c, cells[j], r2))
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= min_samples).collect();
    let mut uf = UnionFind::new(cells.len());
    for i in 0..cells.len() {
        if core[i] {
            for &j in &neighbors[i] {
                if core[j] {
                    uf.union(i, j);
                }
            }
        }
    }
    (0..cells.len())
        .map(|i| {
            if core[i] {
                Some(uf.find(i))
            } else {
                // Border points join the cluster of their lowest-index core neighbor.
                let mut cores: Vec<usize> = neighbors[i].iter().copied().filter(|&j| core[j]).collect();
                cores.sort_unstable();
                cores.first().map(|&j| uf.find(j))
            }
        })
        .collect()
}

/// Attaches to each island the categories of sightings within `radius_m`
/// of any member cell center.
pub fn attach_names(
    mut islands: Vec<FrontierIsland>,
    sightings: &[Sighting],
    resolution: f64,
    radius_m: f64,
) -> Vec<FrontierIsland> {
    let r2 = radius_m * radius_m + 1e-12;
    for island in &mut islands {
        let mut names: Vec<String> = sightings
            .iter()
            .filter(|s| {
                island.cells.iter().any(|c| {
                    let dx = (c.x as f64 + 0.5) * resolution - s.position.x;
                    let dy = (c.y as f64 + 0.5) * resolution - s.position.y;
                    dx * dx + dy * dy <= r2
                })
            })
            .map(|s| s.category.clone())
            .collect();
        names.sort();
        names.dedup();
        island.names = names;
    }
    islands
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RESOLUTION_M;

    fn set(cells: &[(i32, i32)]) -> FrontierSet {
        let mut cells: Vec<Cell> = cells.iter().map(|&(x, y)| Cell::new(x, y)).collect();
        cells.sort();
        FrontierSet { cells }
    }

    #[test]
    fn half_meter_apart_is_one_island() {
        let isl = cluster(&set(&[(0, 0), (10, 0)]), RESOLUTION_M, 1.0, 1).unwrap();
        assert_eq!(isl.len(), 1);
    }

    #[test]
    fn two_meters_apart_is_two_islands() {
        let isl = cluster(&set(&[(0, 0), (40, 0)]), RESOLUTION_M, 1.0, 1).unwrap();
        assert_eq!(isl.len(), 2);
        assert_eq!(isl[0].cells, vec![Cell::new(0, 0)]);
        assert_eq!(isl[1].id, 1);
    }

    #[test]
    fn exactly_eps_apart_is_connected() {
        let isl = cluster(&set(&[(0, 0), (20, 0)]), RESOLUTION_M, 1.0, 1).unwrap();
        assert_eq!(isl.len(), 1);
    }

    #[test]
    fn empty_input_and_bad_params() {
        assert!(cluster(&FrontierSet::default(), RESOLUTION_M, 1.0, 1).unwrap().is_empty());
        assert!(cluster(&FrontierSet::default(), RESOLUTION_M, 0.0, 1).is_err());
        assert!(cluster(&FrontierSet::default(), RESOLUTION_M, 1.0, 0).is_err());
    }

    #[test]
    fn centroid_is_mean_of_centers() {
        let isl = cluster(&set(&[(0, 0), (2, 0)]), RESOLUTION_M, 1.0, 1).unwrap();
        let c = isl[0].centroid;
        assert!((c.x - 0.075).abs() < 1e-12 && (c.y - 0.025).abs() < 1e-12);
    }

    #[test]
    fn general_min_samples_drops_noise() {
        // A dense run of 5 cells and an isolated cell.
        let isl = cluster(
            &set(&[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (100, 100)]),
            RESOLUTION_M,
            0.1,
            3,
        )
        .unwrap();
        assert_eq!(isl.len(), 1);
        assert_eq!(isl[0].cells.len(), 5);
    }

    fn one_island_at(x: i32) -> Vec<FrontierIsland> {
        cluster(&set(&[(x, 0)]), RESOLUTION_M, 1.0, 1).unwrap()
    }

    fn sighting(cat: &str, x: f64, y: f64) -> Sighting {
        Sighting {
            category: cat.into(),
            position: Point::new(x, y),
        }
    }

    #[test]
    fn names_within_radius_deduplicated() {
        // Island cell center at (0.025, 0.025).
        let sightings = [
            sighting("chair", 0.525, 0.025),
            sighting("chair", 0.025, 0.525),
            sighting("bed", 3.0, 3.0),
        ];
        let isl = attach_names(one_island_at(0), &sightings, RESOLUTION_M, 2.0);
        assert_eq!(isl[0].names, vec!["chair".to_string()]);
        let isl = attach_names(one_island_at(0), &[], RESOLUTION_M, 2.0);
        assert!(isl[0].names.is_empty());
    }
}
