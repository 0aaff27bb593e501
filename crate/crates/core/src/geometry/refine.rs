use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, Mesh2D};
use crate::error::Result;

/// Uniform midpoint refinement: every triangle is split into four.
///
/// New vertices sit at straight edge midpoints, so the polygonal domain, its
/// area and the tagged boundary arclength are unchanged. Tags, densities and
/// triangle weights are inherited.
pub fn refine(mesh: &Mesh2D) -> Result<Mesh2D> {
    mesh.validate()?;
    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
            vertices.push(mesh.edge_midpoint(a, b));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    let mut weights = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        weights.extend_from_slice(&[mesh.tri_weights()[t]; 4]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let [a, b] = e.vertices;
        let m = mid(a, b, &mut vertices);
        boundary.push(BoundaryEdge { vertices: [a, m], ..e.clone() });
        boundary.push(BoundaryEdge { vertices: [m, b], ..e.clone() });
    }
    Mesh2D::new(vertices, triangles, boundary, weights, mesh.period())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk_mesh, make_strip_mesh, tag_boundary, Arc, BoundaryTag};
    use std::f64::consts::PI;

    #[test]
    fn quadruples_and_preserves_area() {
        let m = make_disk_mesh(1.0, 0.2).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        assert!((r.area() - m.area()).abs() < 1e-13);
    }

    #[test]
    fn tags_preserved() {
        let m = make_disk_mesh(1.0, 0.2).unwrap();
        let m = tag_boundary(&m, &[(Arc::Angle { start: 0.0, end: PI }, BoundaryTag::Neumann)]).unwrap();
        let r = refine(&m).unwrap();
        for tag in [BoundaryTag::Steklov, BoundaryTag::Neumann] {
            assert!((r.boundary_length(tag) - m.boundary_length(tag)).abs() < 1e-13);
        }
        // every refined boundary edge inherits the tag of its parent
        for e in r.boundary_edges() {
            let mid = r.edge_midpoint(e.vertices[0], e.vertices[1]);
            let theta = mid[1].atan2(mid[0]).rem_euclid(2.0 * PI);
            let expect = if theta < PI { BoundaryTag::Neumann } else { BoundaryTag::Steklov };
            assert_eq!(e.tag, expect);
        }
    }

    #[test]
    fn periodic_refinement() {
        let m = make_strip_mesh(1.0, 0.3, 0.1, true).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.euler_characteristic(), 0);
        assert!((r.area() - 0.3).abs() < 1e-12);
        assert!(r.vertices().iter().all(|p| p[0] >= 0.0 && p[0] < 1.0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn refinement_keeps_area_and_tag_lengths(start in 0.0f64..std::f64::consts::TAU, frac in 0.1f64..0.9, h in 0.15f64..0.4) {
            let m = make_disk_mesh(1.0, h).unwrap();
            let arc = Arc::Angle { start, end: start + frac * 2.0 * PI };
            let m = tag_boundary(&m, &[(arc, BoundaryTag::Neumann)]).unwrap();
            let r = refine(&m).unwrap();
            proptest::prop_assert!(r.validate().is_ok());
            proptest::prop_assert!((r.area() - m.area()).abs() < 1e-12 * m.area());
            for tag in [BoundaryTag::Steklov, BoundaryTag::Neumann] {
                proptest::prop_assert!((r.boundary_length(tag) - m.boundary_length(tag)).abs() < 1e-12);
            }
        }
    }
}
