use std::f64::consts::PI;

use super::{BoundaryEdge, BoundaryTag, Mesh2D, Point};
use crate::error::{Error, Result};

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Parameter(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

/// Triangulates the band between two concentric rings of points.
///
/// Both rings are given as global vertex ids ordered by increasing angle and
/// starting at angle `start` (inner) / `start_outer`. A ring of length one is
/// the center point. Triangles come out counterclockwise.
fn stitch_rings(
    inner: &[usize],
    inner_angles: &[f64],
    outer: &[usize],
    outer_angles: &[f64],
    triangles: &mut Vec<[usize; 3]>,
) {
    let p = inner.len();
    let q = outer.len();
    if p == 1 {
        for k in 0..q {
            triangles.push([inner[0], outer[k], outer[(k + 1) % q]]);
        }
        return;
    }
    // Unwrapped angle of the j-th point after the starting one.
    let ang = |angles: &[f64], j: usize| -> f64 {
        let n = angles.len();
        angles[j % n] + 2.0 * PI * (j / n) as f64
    };
    let (mut i, mut k) = (0usize, 0usize);
    while i < p || k < q {
        let next_inner = if i < p { ang(inner_angles, i + 1) } else { f64::INFINITY };
        let next_outer = if k < q { ang(outer_angles, k + 1) } else { f64::INFINITY };
        if next_outer < next_inner - 1e-9 {
            triangles.push([inner[i % p], outer[k % q], outer[(k + 1) % q]]);
            k += 1;
        } else {
            triangles.push([inner[i % p], outer[k % q], inner[(i + 1) % p]]);
            i += 1;
        }
    }
}

/// Unit disk made of `rings` concentric rings with `6 i` points on ring `i`.
fn unit_disk(rings: usize) -> (Vec<Point>, Vec<[usize; 3]>, Vec<usize>) {
    let mut vertices = vec![[0.0, 0.0]];
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    let mut prev_ids = vec![0usize];
    let mut prev_angles = vec![0.0];
    for i in 1..=rings {
        let n = 6 * i;
        let r = i as f64 / rings as f64;
        let start = vertices.len();
        let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        for &a in &angles {
            let (s, c) = a.sin_cos();
            vertices.push([r * c, r * s]);
        }
        let ids: Vec<usize> = (start..start + n).collect();
        stitch_rings(&prev_ids, &prev_angles, &ids, &angles, &mut triangles);
        prev_ids = ids;
        prev_angles = angles;
    }
    (vertices, triangles, prev_ids)
}

fn closed_boundary(ring: &[usize], tag: BoundaryTag) -> Vec<BoundaryEdge> {
    let n = ring.len();
    (0..n).map(|k| BoundaryEdge { vertices: [ring[k], ring[(k + 1) % n]], tag, density: 1.0 }).collect()
}

/// Disk of the given radius centered at the origin, fully Steklov with unit
/// density and unit weights.
///
/// The mesh is the unit-disk mesh for `target_h / radius` scaled by `radius`,
/// so meshes with equal `target_h / radius` are exact homotheties of each other.
pub fn make_disk_mesh(radius: f64, target_h: f64) -> Result<Mesh2D> {
    check_positive("radius", radius)?;
    check_positive("target_h", target_h)?;
    if target_h >= radius {
        return Err(Error::Parameter(format!("target_h ({target_h}) must be smaller than the radius ({radius})")));
    }
    let rings = (radius / target_h).ceil() as usize;
    let (mut vertices, triangles, outer) = unit_disk(rings);
    for p in &mut vertices {
        p[0] *= radius;
        p[1] *= radius;
    }
    let boundary = closed_boundary(&outer, BoundaryTag::Steklov);
    let weights = vec![1.0; triangles.len()];
    Mesh2D::new(vertices, triangles, boundary, weights, None)
}

/// Annulus `inner <= r <= outer` centered at the origin; both circles Steklov.
pub fn make_annulus_mesh(inner: f64, outer: f64, target_h: f64) -> Result<Mesh2D> {
    check_positive("inner radius", inner)?;
    check_positive("target_h", target_h)?;
    if !(outer > inner) {
        return Err(Error::Parameter(format!("outer radius ({outer}) must exceed inner radius ({inner})")));
    }
    if target_h >= outer - inner {
        return Err(Error::Parameter(format!(
            "target_h ({target_h}) must be smaller than the annulus width ({})",
            outer - inner
        )));
    }
    let rings = ((outer - inner) / target_h).ceil() as usize;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut ring_ids: Vec<Vec<usize>> = Vec::with_capacity(rings + 1);
    let mut ring_angles: Vec<Vec<f64>> = Vec::with_capacity(rings + 1);
    for i in 0..=rings {
        let r = inner + (outer - inner) * i as f64 / rings as f64;
        let n = ((2.0 * PI * r / target_h).round() as usize).max(6);
        let start = vertices.len();
        // Alternate rings are rotated by half a step to avoid long diagonals.
        let shift = if i % 2 == 1 { 0.5 } else { 0.0 };
        let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * (k as f64 + shift) / n as f64).collect();
        for &a in &angles {
            let (s, c) = a.sin_cos();
            vertices.push([r * c, r * s]);
        }
        ring_ids.push((start..start + n).collect());
        ring_angles.push(angles);
    }
    for i in 1..=rings {
        // stitch_rings expects both rings to start at comparable angles; a
        // half-step rotation keeps the merge order well defined.
        stitch_rings(&ring_ids[i - 1], &ring_angles[i - 1], &ring_ids[i], &ring_angles[i], &mut triangles);
    }
    let mut boundary = closed_boundary(&ring_ids[0], BoundaryTag::Steklov);
    boundary.extend(closed_boundary(&ring_ids[rings], BoundaryTag::Steklov));
    let weights = vec![1.0; triangles.len()];
    Mesh2D::new(vertices, triangles, boundary, weights, None)
}

/// Rectangle `[0, L] x [0, w]` with the default tags: `y = 0` Steklov,
/// `y = w` Neumann, and Neumann on the short sides when not periodic.
pub fn make_strip_mesh(length: f64, width: f64, target_h: f64, periodic: bool) -> Result<Mesh2D> {
    make_strip_mesh_tagged(length, width, target_h, periodic, BoundaryTag::Steklov, BoundaryTag::Neumann)
}

/// Rectangle `[0, L] x [0, w]` with caller-chosen tags on the long sides.
///
/// When `periodic`, the sides `x = 0` and `x = L` are identified and the mesh
/// is the flat cylinder `S^1_L x [0, w]`. Cell counts are rounded up to even
/// numbers and the diagonals alternate, so the mesh is invariant under the
/// reflection `y -> w - y`.
pub fn make_strip_mesh_tagged(
    length: f64,
    width: f64,
    target_h: f64,
    periodic: bool,
    bottom: BoundaryTag,
    top: BoundaryTag,
) -> Result<Mesh2D> {
    check_positive("length", length)?;
    check_positive("width", width)?;
    check_positive("target_h", target_h)?;
    if target_h >= length.min(width) {
        return Err(Error::Parameter(format!(
            "target_h ({target_h}) must be smaller than min(L, w) = {}",
            length.min(width)
        )));
    }
    let round_even = |x: f64| -> usize {
        let n = x.ceil() as usize;
        n + n % 2
    };
    let nx = round_even(length / target_h);
    let ny = round_even(width / target_h);
    let ncols = if periodic { nx } else { nx + 1 };
    let id = |i: usize, j: usize| j * ncols + (i % ncols);
    let mut vertices = Vec::with_capacity(ncols * (ny + 1));
    for j in 0..=ny {
        for i in 0..ncols {
            vertices.push([length * i as f64 / nx as f64, width * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push(BoundaryEdge { vertices: [id(i, 0), id(i + 1, 0)], tag: bottom, density: 1.0 });
        boundary.push(BoundaryEdge { vertices: [id(i, ny), id(i + 1, ny)], tag: top, density: 1.0 });
    }
    if !periodic {
        for j in 0..ny {
            boundary.push(BoundaryEdge { vertices: [id(0, j), id(0, j + 1)], tag: BoundaryTag::Neumann, density: 1.0 });
            boundary.push(BoundaryEdge {
                vertices: [id(nx, j), id(nx, j + 1)],
                tag: BoundaryTag::Neumann,
                density: 1.0,
            });
        }
    }
    let weights = vec![1.0; triangles.len()];
    Mesh2D::new(vertices, triangles, boundary, weights, if periodic { Some(length) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_area_and_perimeter() {
        let m = make_disk_mesh(1.0, 0.05).unwrap();
        assert!((m.area() - PI).abs() < 0.01 * PI, "area {}", m.area());
        let perim = m.boundary_length(BoundaryTag::Steklov);
        assert!((perim - 2.0 * PI).abs() < 0.01 * 2.0 * PI);
        assert!(m.h_max() <= 1.5 * 0.05, "h_max {}", m.h_max());
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn disk_boundary_on_circle() {
        let r = 2.5;
        let m = make_disk_mesh(r, 0.2).unwrap();
        for v in m.tagged_vertices(BoundaryTag::Steklov) {
            let p = m.vertices()[v];
            assert!((p[0].hypot(p[1]) - r).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn disk_homothety_is_exact() {
        let a = make_disk_mesh(1.0, 0.05).unwrap();
        let b = make_disk_mesh(2.0, 0.1).unwrap();
        assert_eq!(a.triangles(), b.triangles());
        assert_eq!(a.scaled(2.0).unwrap(), b);
    }

    #[test]
    fn disk_rejects_bad_parameters() {
        assert!(make_disk_mesh(0.0, 0.1).is_err());
        assert!(make_disk_mesh(1.0, 1.0).is_err());
        assert!(make_disk_mesh(1.0, -0.1).is_err());
    }

    #[test]
    fn periodic_strip_is_annulus() {
        let m = make_strip_mesh(2.0 * PI, 0.5, 0.05, true).unwrap();
        let nx = 126;
        let ny = 10;
        assert_eq!(m.n_vertices(), nx * (ny + 1));
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_components().len(), 2);
        assert!((m.area() - PI).abs() < 1e-10);
    }

    #[test]
    fn periodic_strip_circles_have_length_l() {
        let m = make_strip_mesh(2.0 * PI, 1.0, 0.05, true).unwrap();
        for comp in m.boundary_components() {
            let len: f64 = comp
                .iter()
                .map(|&e| {
                    let [a, b] = m.boundary_edges()[e].vertices;
                    m.edge_length(a, b)
                })
                .sum();
            assert!((len - 2.0 * PI).abs() < 0.01 * 2.0 * PI);
        }
    }

    #[test]
    fn unit_square_strip() {
        let m = make_strip_mesh(1.0, 1.0, 0.2, false).unwrap();
        assert!((m.area() - 1.0).abs() < 0.01);
        // four sides: one Steklov run, three Neumann runs
        let sides = m.boundary_components_where(|e| e.tag == BoundaryTag::Steklov).len()
            + 3 * m.boundary_components_where(|e| e.tag == BoundaryTag::Neumann).len();
        assert_eq!(sides, 4);
        assert!(make_strip_mesh(1.0, 0.1, 0.2, false).is_err());
    }

    #[test]
    fn annulus_topology() {
        let m = make_annulus_mesh(0.5, 1.0, 0.1).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_components().len(), 2);
        let exact = PI * (1.0 - 0.25);
        assert!((m.area() - exact).abs() < 0.02 * exact);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn generated_disks_are_valid(r in 0.1f64..10.0, rel_h in 0.05f64..0.4) {
            let m = make_disk_mesh(r, rel_h * r).unwrap();
            proptest::prop_assert!(m.validate().is_ok());
            for v in m.tagged_vertices(BoundaryTag::Steklov) {
                let p = m.vertices()[v];
                proptest::prop_assert!((p[0].hypot(p[1]) - r).abs() <= 1e-12 * r);
            }
            proptest::prop_assert!(m.area() < std::f64::consts::PI * r * r);
        }
    }
}
