use std::fmt::Write as _;

use super::NodalDecomposition;
use crate::geometry::{BoundaryTag, Mesh2D, Point};

/// Part of triangle `t` where `sign * f > 0`, as a polygon.
fn piece_polygon(dec: &NodalDecomposition, mesh: &Mesh2D, t: usize, sign: i8) -> Vec<Point> {
    let tri = mesh.triangles()[t];
    let xy = mesh.triangle_coords(t);
    let f: Vec<f64> = tri.iter().map(|&v| sign as f64 * dec.values[v]).collect();
    let mut out = Vec::new();
    for k in 0..3 {
        let j = (k + 1) % 3;
        if f[k] > 0.0 {
            out.push(xy[k]);
        }
        if (f[k] > 0.0) != (f[j] > 0.0) && f[k] != 0.0 && f[j] != 0.0 {
            let s = f[k] / (f[k] - f[j]);
            out.push([xy[k][0] + s * (xy[j][0] - xy[k][0]), xy[k][1] + s * (xy[j][1] - xy[k][1])]);
        } else if f[j] == 0.0 && f[k] > 0.0 {
            out.push(xy[j]);
        } else if f[k] == 0.0 && f[j] > 0.0 {
            out.push(xy[k]);
        }
    }
    out.dedup();
    out
}

/// SVG picture: domains filled by sign, boundary outline with Steklov edges
/// emphasized, and the nodal polylines.
pub fn nodal_svg(dec: &NodalDecomposition, mesh: &Mesh2D) -> String {
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for t in 0..mesh.triangles().len() {
        for p in mesh.triangle_coords(t) {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
    }
    let size = 600.0;
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let pad = 10.0;
    let sc = (size - 2.0 * pad) / span;
    let map = |p: Point| (pad + (p[0] - lo[0]) * sc, size - pad - (p[1] - lo[1]) * sc);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<g stroke="none">"#);
    for p in &dec.pieces {
        let poly = piece_polygon(dec, mesh, p.triangle, p.sign);
        if poly.len() < 3 {
            continue;
        }
        let pts: Vec<String> = poly
            .iter()
            .map(|&q| {
                let (x, y) = map(q);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let fill = if p.sign > 0 { "#f4a582" } else { "#92c5de" };
        let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");
    for e in mesh.boundary_edges() {
        let [a, b] = e.vertices;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        if (pa[0] - pb[0]).abs() > 0.5 * span {
            continue; // wraps around a periodic seam
        }
        let ((x1, y1), (x2, y2)) = (map(pa), map(pb));
        let (color, width) = match e.tag {
            BoundaryTag::Steklov => ("#b2182b", 3.0),
            BoundaryTag::Neumann => ("#404040", 1.0),
            BoundaryTag::Dirichlet => ("#2166ac", 1.0),
        };
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width}"/>"#
        );
    }
    let owner = segment_triangles(dec, mesh);
    for (seg, t) in dec.segments.iter().zip(owner) {
        let ((x1, y1), (x2, y2)) = (map(dec.point_in(mesh, t, seg[0])), map(dec.point_in(mesh, t, seg[1])));
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="black" stroke-width="1.5"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

/// A triangle containing each nodal segment.
fn segment_triangles(dec: &NodalDecomposition, mesh: &Mesh2D) -> Vec<usize> {
    use super::NodalPoint;
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices().len()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            by_vertex[v].push(t);
        }
    }
    let verts = |p: &NodalPoint| match *p {
        NodalPoint::Vertex(v) => vec![v],
        NodalPoint::Edge(a, b) => vec![a, b],
    };
    dec.segments
        .iter()
        .map(|seg| {
            let need: Vec<usize> = seg.iter().flat_map(verts).collect();
            by_vertex[need[0]]
                .iter()
                .copied()
                .find(|&t| need.iter().all(|v| mesh.triangles()[t].contains(v)))
                .expect("segment lies in a triangle")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::decompose_nodal;
    use super::*;
    use crate::geometry::make_disk_mesh;

    #[test]
    fn svg_has_all_layers() {
        let m = make_disk_mesh(1.0, 0.2).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| p[0] + 0.1).collect();
        let d = decompose_nodal(&m, &f, 1e-7).unwrap();
        let s = nodal_svg(&d, &m);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("#f4a582") && s.contains("#92c5de") && s.contains("#b2182b"));
        assert!(s.matches("stroke=\"black\"").count() == d.segments.len());
    }
}
