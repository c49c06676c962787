//! SVG diagrams of placed linkages: bars as lines (braces and cable chains
//! gray), pins as filled squares, markers as circles.

use std::fmt::Write;

use num_complex::Complex64;

use crate::linkage::{EdgeKind, Linkage, MarkerSet, Realization};

const WIDTH: f64 = 640.0;

/// Render a realization of `l` to an SVG string. The viewBox fits the
/// drawing with a 5% margin.
pub fn render_svg(l: &Linkage, r: &Realization, markers: &MarkerSet) -> String {
    let points: Vec<Complex64> = l.vertices().filter_map(|v| r.get(v)).collect();
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &points {
        lo_x = lo_x.min(p.re);
        hi_x = hi_x.max(p.re);
        lo_y = lo_y.min(-p.im);
        hi_y = hi_y.max(-p.im);
    }
    if !lo_x.is_finite() {
        (lo_x, hi_x, lo_y, hi_y) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span_x = (hi_x - lo_x).max(1e-9);
    let span_y = (hi_y - lo_y).max(1e-9);
    let margin = 0.05 * span_x.max(span_y);
    let (x0, y0) = (lo_x - margin, lo_y - margin);
    let (w, h) = (span_x + 2.0 * margin, span_y + 2.0 * margin);
    let stroke = w.max(h) / 200.0;
    let height = WIDTH * h / w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="{x0} {y0} {w} {h}">"#
    );
    // SVG's y axis points down; mathematical coordinates are flipped once
    // here (and nowhere else) by negating im.
    for e in l.edges() {
        let (Some(a), Some(b)) = (r.get(&e.u), r.get(&e.v)) else { continue };
        let color = match e.kind {
            EdgeKind::Bar => "#222",
            EdgeKind::Brace | EdgeKind::Cable => "#999",
        };
        let dash = if e.kind == EdgeKind::Cable { r#" stroke-dasharray="0.06""# } else { "" };
        let _ = writeln!(
            svg,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="{stroke}"{dash}/>"#,
            a.re, -a.im, b.re, -b.im
        );
    }
    for v in l.vertices() {
        let Some(p) = r.get(v) else { continue };
        if l.pin_of(v).is_some() {
            let s = stroke * 3.0;
            let _ = writeln!(
                svg,
                r##"  <rect x="{}" y="{}" width="{s}" height="{s}" fill="#111"><title>{v}</title></rect>"##,
                p.re - s / 2.0,
                -p.im - s / 2.0
            );
        } else {
            let _ = writeln!(
                svg,
                r##"  <circle cx="{}" cy="{}" r="{}" fill="#444"><title>{v}</title></circle>"##,
                p.re,
                -p.im,
                stroke * 1.2
            );
        }
    }
    for m in markers.iter() {
        if let Some(p) = r.get(m) {
            let _ = writeln!(
                svg,
                r##"  <circle cx="{}" cy="{}" r="{}" fill="none" stroke="#c22" stroke-width="{stroke}"><title>{m}</title></circle>"##,
                p.re,
                -p.im,
                stroke * 3.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::peaucellier;
    use crate::geom::Side;
    use crate::linkage::VertexId;

    #[test]
    fn peaucellier_svg_has_gray_strokes_and_fitted_viewbox() {
        let g = peaucellier(5.0, 4.0, 3.0).unwrap();
        let r = g.forward_place(&[Complex64::new(3.0, 1.0)], Side::Plus).unwrap();
        let markers = MarkerSet::new([VertexId::new("D"), VertexId::new("E")]);
        let svg = render_svg(&g.linkage, &r, &markers);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox"));
        let gray = svg.matches("stroke=\"#999\"").count();
        assert!(gray >= 2, "expected brace and cable strokes, found {gray}");
        assert_eq!(svg.matches("<rect").count(), 1, "one pinned vertex");
        assert!(svg.matches("<circle").count() >= 2 + 8);
    }
}
