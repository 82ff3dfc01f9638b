//! Standalone SVG of one episode over its scene.

use std::fmt::Write as _;

use super::EpisodeResult;
use crate::scene::Scene;

const PX_PER_M: f64 = 100.0;

/// Walls in dark gray, trajectory in blue, goal objects as purple squares,
/// final frontier cells as small red dots and island centers as yellow dots.
/// World `y` points up, so it is flipped on output.
pub fn render_svg(result: &EpisodeResult, scene: &Scene) -> String {
    let d = scene.dims;
    let (w, h) = (d.width_m() * PX_PER_M, d.height_m() * PX_PER_M);
    let px = |x: f64| x * PX_PER_M;
    let py = |y: f64| h - y * PX_PER_M;
    let cell = d.resolution * PX_PER_M;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(
        s,
        "<title>{} {} ({})</title>",
        xml_escape(&result.id()),
        xml_escape(&result.goal_category),
        if result.success { "success" } else { "failure" }
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let _ = writeln!(s, r##"<g id="walls" fill="#404040">"##);
    for y in 0..d.height {
        let row = &scene.occupied[y * d.width..(y + 1) * d.width];
        let mut x = 0;
        while x < d.width {
            if !row[x] {
                x += 1;
                continue;
            }
            let start = x;
            while x < d.width && row[x] {
                x += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                start as f64 * cell,
                h - (y + 1) as f64 * cell,
                (x - start) as f64 * cell,
                cell
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="goals" fill="#8e44ad">"##);
    let side = 0.2 * PX_PER_M;
    for o in scene.objects.iter().filter(|o| o.category == result.goal_category) {
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}"><title>{}</title></rect>"#,
            px(o.anchor.x) - side / 2.0,
            py(o.anchor.y) - side / 2.0,
            xml_escape(&o.category)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="frontiers" fill="#e74c3c">"##);
    for c in &result.final_frontiers {
        let (x, y) = d.cell_center(*c);
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, px(x), py(y));
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="islands" fill="#f1c40f" stroke="#806000" stroke-width="0.8">"##);
    for p in &result.final_islands {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="5"/>"#, px(p.x), py(p.y));
    }
    let _ = writeln!(s, "</g>");

    let points: Vec<String> = result
        .trajectory
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline id="trajectory" fill="none" stroke="#2471a3" stroke-width="2" points="{}"/>"##,
        points.join(" ")
    );
    if let (Some(a), Some(b)) = (result.trajectory.first(), result.trajectory.last()) {
        let _ = writeln!(s, r##"<circle id="start" cx="{:.2}" cy="{:.2}" r="4" fill="#27ae60"/>"##, px(a.x), py(a.y));
        let _ = writeln!(s, r##"<circle id="end" cx="{:.2}" cy="{:.2}" r="4" fill="#000000"/>"##, px(b.x), py(b.y));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::super::stub_result;
    use super::*;
    use crate::scene::test_util::{object, open_scene};
    use crate::scene::{Heading, Pose};

    #[test]
    fn polyline_has_one_point_per_pose() {
        let mut scene = open_scene(40, 30);
        let d = scene.dims;
        scene.objects.push(object("sofa", 1.0, 1.0, &d));
        scene.objects.push(object("tv", 1.5, 1.0, &d));
        let mut r = stub_result(false, 0.0, 1.0);
        r.goal_category = "sofa".into();
        r.trajectory = (0..4).map(|i| Pose::new(0.5 + 0.2 * i as f64, 0.5, Heading::default())).collect();
        let svg = render_svg(&r, &scene);
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 4);
        assert_eq!(svg.matches("<title>sofa</title>").count(), 1);
        assert_eq!(svg.matches("<title>tv</title>").count(), 0);
        // Bottom row of the wall sits at the bottom of the image.
        assert!(svg.contains(r#"<rect x="0.00" y="145.00" width="200.00" height="5.00"/>"#));
    }
}
