//! Minimal SVG emitter: one `<g>` per layer, world coordinates flipped so
//! `y` points up.

use super::artifacts::TIMESTAMP_PREFIX;
use std::fmt::Write;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Rect { lo: [f64; 2], hi: [f64; 2], fill: String, stroke: String },
    Polyline { points: Vec<[f64; 2]>, stroke: String, width: f64 },
    Circle { center: [f64; 2], r: f64, fill: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub id: String,
    pub shapes: Vec<Shape>,
}

impl Layer {
    pub fn new(id: &str) -> Self {
        Layer { id: id.into(), shapes: Vec::new() }
    }
}

/// Sequential colour for a value in `[0, 1]`.
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t) as u8;
    let g = (80.0 + 120.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
    let b = (220.0 - 180.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the layers over the world box `bounds = [x0, x1, y0, y1]`.
/// `header` goes into a comment after the timestamp line.
pub fn render(bounds: [f64; 4], layers: &[Layer], header: &str, timestamp: u64) -> String {
    let [x0, x1, y0, y1] = bounds;
    let (w, h) = ((x1 - x0).max(1e-9), (y1 - y0).max(1e-9));
    let px = 800.0 / w.max(h);
    let tx = |x: f64| (x - x0) * px;
    let ty = |y: f64| (y1 - y) * px;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(s, "{TIMESTAMP_PREFIX} {timestamp} -->").unwrap();
    writeln!(s, "<!-- {} -->", esc(header).replace("--", "- -")).unwrap();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}">"#, w * px, h * px, w * px, h * px).unwrap();
    for layer in layers {
        writeln!(s, r#"<g id="{}">"#, esc(&layer.id)).unwrap();
        for shape in &layer.shapes {
            match shape {
                Shape::Rect { lo, hi, fill, stroke } => writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" stroke="{}" stroke-width="0.5"/>"#,
                    tx(lo[0]),
                    ty(hi[1]),
                    (hi[0] - lo[0]) * px,
                    (hi[1] - lo[1]) * px,
                    esc(fill),
                    esc(stroke)
                ),
                Shape::Polyline { points, stroke, width } => {
                    let pts: Vec<String> = points.iter().map(|p| format!("{:.3},{:.3}", tx(p[0]), ty(p[1]))).collect();
                    writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{width}"/>"#, pts.join(" "), esc(stroke))
                }
                Shape::Circle { center, r, fill } => {
                    writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{}"/>"#, tx(center[0]), ty(center[1]), r * px, esc(fill))
                }
            }
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// Seconds since the epoch, for the timestamp line.
pub fn now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_layer_set_is_valid_svg() {
        let text = render([0.0, 1.0, 0.0, 1.0], &[], "empty", 0);
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert_eq!(doc.root_element().children().filter(|n| n.is_element()).count(), 0);
    }

    #[test]
    fn layers_become_groups_with_flipped_y() {
        let mut a = Layer::new("core");
        a.shapes.push(Shape::Rect { lo: [0.0, 0.0], hi: [0.5, 0.25], fill: "#fff".into(), stroke: "none".into() });
        let mut b = Layer::new("geodesic<1>");
        b.shapes.push(Shape::Polyline { points: vec![[0.0, 0.0], [1.0, 1.0]], stroke: "red".into(), width: 1.0 });
        b.shapes.push(Shape::Circle { center: [1.0, 1.0], r: 0.01, fill: "red".into() });
        let text = render([0.0, 1.0, 0.0, 1.0], &[a, b], "a -- b", 7);
        let doc = roxmltree::Document::parse(&text).unwrap();
        let groups: Vec<_> = doc.root_element().children().filter(|n| n.has_tag_name("g")).collect();
        assert_eq!(groups.iter().map(|g| g.attribute("id").unwrap()).collect::<Vec<_>>(), ["core", "geodesic<1>"]);
        let rect = groups[0].first_element_child().unwrap();
        assert_eq!(rect.attribute("y"), Some("600.000"));
        assert_eq!(rect.attribute("height"), Some("200.000"));
        let line = groups[1].first_element_child().unwrap();
        assert_eq!(line.attribute("points"), Some("0.000,800.000 800.000,0.000"));
    }

    #[test]
    fn ramp_spans_blue_to_red() {
        assert_eq!(ramp(0.0), "#2850dc");
        assert_eq!(ramp(1.0), "#f05028");
        assert_eq!(ramp(-3.0), ramp(0.0));
    }
}
