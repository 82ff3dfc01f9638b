//! Versioned JSON scene documents.
//!
//! ```text
//! {
//!   "version": 1,
//!   "id": "scene-000007",
//!   "resolution_m": 0.05,
//!   "width": 160, "height": 120,
//!   "grid": ["160#", "2#156.2#", ...],      // one string per row, y = 0 first
//!   "objects": [{"category": "sofa", "x": 1.275, "y": 3.025}, ...],
//!   "start": {"x": 2.025, "y": 1.525, "heading_deg": 90},
//!   "goal_category": "sofa"
//! }
//! ```
//!
//! Rows are run-length encoded as `<count><symbol>` pairs, `#` occupied and
//! `.` free; the counts of a row sum to `width`. Object footprints are not
//! stored; loading rebuilds them as the free cells of the 3×3 block around
//! each anchor.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ObjectInstance, Pose, Scene};
use crate::error::{Error, Result};
use crate::grid::{Cell, GridDims, Point};

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    version: u32,
    id: String,
    resolution_m: f64,
    width: usize,
    height: usize,
    grid: Vec<String>,
    objects: Vec<ObjectDoc>,
    start: Pose,
    goal_category: String,
}

#[derive(Serialize, Deserialize)]
struct ObjectDoc {
    category: String,
    x: f64,
    y: f64,
}

fn encode_row(row: &[bool]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < row.len() {
        let v = row[i];
        let run = row[i..].iter().take_while(|&&r| r == v).count();
        let _ = write!(out, "{run}{}", if v { '#' } else { '.' });
        i += run;
    }
    out
}

fn decode_row(s: &str, width: usize, y: usize) -> Result<Vec<bool>> {
    let bad = |m: String| Error::SceneFormat(format!("row {y}: {m}"));
    let mut row = Vec::with_capacity(width);
    let mut count = String::new();
    for ch in s.chars() {
        match ch {
            '0'..='9' => count.push(ch),
            '#' | '.' => {
                let n: usize = count
                    .parse()
                    .map_err(|_| bad(format!("missing run length before '{ch}'")))?;
                count.clear();
                row.extend(std::iter::repeat_n(ch == '#', n));
            }
            other => return Err(bad(format!("unexpected symbol {other:?}"))),
        }
    }
    if !count.is_empty() {
        return Err(bad("trailing run length".into()));
    }
    if row.len() != width {
        return Err(bad(format!("decodes to {} cells, expected {width}", row.len())));
    }
    Ok(row)
}

pub(crate) fn footprint_around(dims: &GridDims, occupied: &[bool], anchor: Point) -> Vec<Cell> {
    let c = dims.world_to_cell(anchor.x, anchor.y);
    (-1..=1)
        .flat_map(|dy| (-1..=1).map(move |dx| c.offset(dx, dy)))
        .filter(|&n| dims.contains(n) && !occupied[dims.index(n)])
        .collect()
}

pub fn scene_to_json(scene: &Scene) -> Result<String> {
    let d = scene.dims;
    let doc = SceneDoc {
        version: SCENE_FORMAT_VERSION,
        id: scene.id.clone(),
        resolution_m: d.resolution,
        width: d.width,
        height: d.height,
        grid: scene
            .occupied
            .chunks(d.width)
            .map(encode_row)
            .collect(),
        objects: scene
            .objects
            .iter()
            .map(|o| ObjectDoc {
                category: o.category.clone(),
                x: o.anchor.x,
                y: o.anchor.y,
            })
            .collect(),
        start: scene.start_pose,
        goal_category: scene.goal_category.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn parse_scene(text: &str) -> Result<Scene> {
    let probe: serde_json::Value = serde_json::from_str(text)?;
    match probe.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCENE_FORMAT_VERSION as u64 => {}
        Some(v) => return Err(Error::SceneFormat(format!("unsupported version {v}"))),
        None => return Err(Error::SceneFormat("missing version".into())),
    }
    let doc: SceneDoc = serde_json::from_value(probe)?;
    if doc.resolution_m <= 0.0 || doc.width == 0 || doc.height == 0 {
        return Err(Error::SceneFormat("empty grid or non-positive resolution".into()));
    }
    if doc.grid.len() != doc.height {
        return Err(Error::SceneFormat(format!(
            "{} rows, expected {}",
            doc.grid.len(),
            doc.height
        )));
    }
    let dims = GridDims::new(doc.width, doc.height, doc.resolution_m);
    let mut occupied = Vec::with_capacity(dims.len());
    for (y, row) in doc.grid.iter().enumerate() {
        occupied.extend(decode_row(row, doc.width, y)?);
    }
    let inside = |p: Point| dims.contains(dims.world_to_cell(p.x, p.y));
    let mut objects = Vec::with_capacity(doc.objects.len());
    for o in doc.objects {
        let anchor = Point::new(o.x, o.y);
        if !inside(anchor) {
            return Err(Error::SceneFormat(format!("object {} outside grid", o.category)));
        }
        let footprint = footprint_around(&dims, &occupied, anchor);
        if footprint.is_empty() {
            return Err(Error::SceneFormat(format!("object {} has no free footprint", o.category)));
        }
        objects.push(ObjectInstance {
            category: o.category,
            anchor,
            footprint,
        });
    }
    if !inside(doc.start.position()) {
        return Err(Error::SceneFormat("start pose outside grid".into()));
    }
    Ok(Scene {
        id: doc.id,
        dims,
        occupied,
        objects,
        start_pose: doc.start,
        goal_category: doc.goal_category,
    })
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    std::fs::write(path, scene_to_json(scene)?)?;
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&std::fs::read_to_string(path)?)
        .map_err(|e| Error::SceneFormat(format!("{}: {e}", path.display())))
}

/// Every `*.json` file in `dir`, in file-name order.
pub fn load_scene_dir(dir: &Path) -> Result<Vec<Scene>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::SceneFormat(format!("no scene files in {}", dir.display())));
    }
    paths.iter().map(|p| load_scene(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, SceneParams};

    #[test]
    fn rle_row() {
        let row = [true, true, false, false, false, true];
        assert_eq!(encode_row(&row), "2#3.1#");
        assert_eq!(decode_row("2#3.1#", 6, 0).unwrap(), row);
        assert!(decode_row("2#3.", 6, 0).is_err());
        assert!(decode_row("2#x", 2, 0).is_err());
    }

    #[test]
    fn generated_scene_round_trips() {
        let s = generate_scene(11, &SceneParams::default()).unwrap();
        let back = parse_scene(&scene_to_json(&s).unwrap()).unwrap();
        assert_eq!(back.occupied, s.occupied);
        assert_eq!(back.objects, s.objects);
        assert_eq!(back.start_pose, s.start_pose);
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_version_rejected() {
        let s = generate_scene(2, &SceneParams::default()).unwrap();
        let text = scene_to_json(&s).unwrap().replacen("\"version\": 1", "\"version\": 2", 1);
        let err = parse_scene(&text).unwrap_err();
        assert!(err.to_string().contains("unsupported version 2"), "{err}");
    }
}
