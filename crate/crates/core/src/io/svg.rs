use std::fmt::Write;

use crate::layout::{LayoutResult, Shape, StyledLayout, MAX_RADIUS};

const DEFAULT_FILL: &str = "#d9d9d9";

fn gray(darkness: f64) -> String {
    let level = (255.0 * (1.0 - 0.85 * darkness.clamp(0.0, 1.0))).round() as u8;
    format!("#{level:02x}{level:02x}{level:02x}")
}

/// Static SVG of a metagraph: one stroke per meta-edge, one disk per
/// cluster (a square of equal area where the styling asks for one).
pub fn render_svg(layout: &LayoutResult, style: Option<&StyledLayout>) -> String {
    let margin = MAX_RADIUS + 4.0;
    let b = layout.bbox;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"{x:.3} {y:.3} {w:.3} {h:.3}\">",
        x = b.min_x - margin,
        y = b.min_y - margin,
        w = b.width() + 2.0 * margin,
        h = b.height() + 2.0 * margin,
    )
    .unwrap();
    out.push_str("<g class=\"edges\" stroke=\"#8c8c8c\" stroke-linecap=\"round\">\n");
    for e in &layout.edges {
        let (Some((x1, y1)), Some((x2, y2))) = (layout.position(e.a), layout.position(e.b)) else {
            continue;
        };
        writeln!(
            out,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke-width=\"{:.3}\"><title>{} - {}: {} edges</title></line>",
            e.thickness, e.a, e.b, e.weight
        )
        .unwrap();
    }
    out.push_str("</g>\n<g class=\"clusters\" stroke=\"#000000\" stroke-width=\"1\">\n");
    for n in &layout.nodes {
        let styled = style.and_then(|s| s.node(n.cluster));
        let fill = styled.map_or(DEFAULT_FILL.to_owned(), |s| gray(s.darkness));
        let mut title = format!("cluster {} (n={})", n.cluster, n.size);
        if let Some(s) = styled {
            write!(title, ", p={:.3e}", s.p_value).unwrap();
        }
        match styled.map(|s| s.shape) {
            Some(Shape::Square) => {
                let side = n.radius * std::f64::consts::PI.sqrt();
                writeln!(
                    out,
                    "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{side:.3}\" height=\"{side:.3}\" fill=\"{fill}\"><title>{title}</title></rect>",
                    n.x - side / 2.0,
                    n.y - side / 2.0,
                )
                .unwrap();
            }
            _ => {
                writeln!(
                    out,
                    "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\" fill=\"{fill}\"><title>{title}</title></circle>",
                    n.x, n.y, n.radius
                )
                .unwrap();
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}
