use std::collections::{HashMap, HashSet};

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{edge_key, BoundaryEdge, BoundaryTag, Mesh2D, Point};
use crate::error::{Error, Result};

/// Minimum interior angle requested from the refiner, in degrees.
const MIN_ANGLE_DEG: f64 = 25.0;

/// Triangulates a polygonal domain with target edge length `h`.
///
/// `rings` are closed loops (the last point is implicitly joined to the
/// first); points with odd winding number are inside, so holes are simply
/// further rings. Input segments are subdivided to length at most `h` and the
/// conforming Delaunay refinement bounds triangle area by that of an
/// equilateral triangle of side `h`. Each boundary edge of the result is
/// tagged by `tag(p, q)` with its endpoints; densities start at 1.
pub fn mesh_polygon_domain(rings: &[Vec<Point>], h: f64, tag: impl Fn(Point, Point) -> BoundaryTag) -> Result<Mesh2D> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("mesh size must be positive, got {h}")));
    }
    if rings.is_empty() {
        return Err(Error::Geometry("no boundary rings".into()));
    }

    let mut points: Vec<Point> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut id = |p: Point, points: &mut Vec<Point>| -> usize {
        *index.entry((p[0].to_bits(), p[1].to_bits())).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (r, ring) in rings.iter().enumerate() {
        if ring.len() < 3 {
            return Err(Error::Geometry(format!("ring {r} has fewer than 3 points")));
        }
        if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Geometry(format!("ring {r} has a non-finite point")));
        }
        for k in 0..ring.len() {
            let p = ring[k];
            let q = ring[(k + 1) % ring.len()];
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            if len == 0.0 {
                continue;
            }
            let n = (len / h).ceil().max(1.0) as usize;
            let mut prev = id(p, &mut points);
            for j in 1..=n {
                let next = if j == n {
                    id(q, &mut points)
                } else {
                    let s = j as f64 / n as f64;
                    id([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])], &mut points)
                };
                if prev != next && seen.insert(edge_key(prev, next)) {
                    edges.push([prev, next]);
                }
                prev = next;
            }
        }
    }

    let input: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut conflict = None;
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::try_bulk_load_cdt(input, edges, |e| {
            conflict.get_or_insert(e);
        })
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
    if let Some(e) = conflict {
        return Err(Error::Geometry(format!("boundary segments intersect near constraint {e:?}")));
    }

    let tri_area = 3f64.sqrt() / 4.0 * h * h;
    let enclosed: f64 = rings.iter().map(|r| ring_area(r).abs()).sum();
    let budget = (40.0 * enclosed / tri_area) as usize + 20 * points.len() + 1000;
    let result = cdt.refine(
        RefinementParameters::new()
            .with_max_allowed_area(tri_area)
            .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(Error::Resolution(format!("refinement did not finish within {budget} additional vertices")));
    }
    let excluded: HashSet<_> = result.excluded_faces.into_iter().collect();

    let mut vmap: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            let key = v.fix().index();
            tri[k] = *vmap.entry(key).or_insert_with(|| {
                let p = v.position();
                vertices.push([p.x, p.y]);
                vertices.len() - 1
            });
        }
        let [a, b, c] = tri.map(|i| vertices[i]);
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(Error::Geometry("domain encloses no area".into()));
    }

    // Directed boundary edges follow their triangle, so the domain is on the left.
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut boundary = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&edge_key(a, b)] == 1 {
                boundary.push(BoundaryEdge { vertices: [a, b], tag: tag(vertices[a], vertices[b]), density: 1.0 });
            }
        }
    }
    let n = triangles.len();
    Mesh2D::new(vertices, triangles, boundary, vec![1.0; n], None)
}

fn ring_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|k| {
            let p = ring[k];
            let q = ring[(k + 1) % n];
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
}
