use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{edge_key, BoundaryTag, Mesh2D, Point};
use crate::unionfind::UnionFind;

/// Point of the zero set: a mesh vertex, or the crossing on an edge whose
/// endpoints have strictly opposite signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodalPoint {
    Vertex(usize),
    Edge(usize, usize),
}

/// Part of a triangle where the interpolant has one strict sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub triangle: usize,
    pub sign: i8,
    pub domain: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalDecomposition {
    /// Field after zeroing values within tolerance.
    pub values: Vec<f64>,
    /// `+1`, `-1` or `0` per vertex.
    pub signs: Vec<i8>,
    pub pieces: Vec<Piece>,
    pub n_domains: usize,
    pub domain_sign: Vec<i8>,
    pub touches_steklov: Vec<bool>,
    /// Zero-level segments, each inside one triangle (shared edges once).
    pub segments: Vec<[NodalPoint; 2]>,
    /// Triangles on which the interpolant vanishes identically.
    pub zero_triangles: Vec<usize>,
}

impl NodalDecomposition {
    pub fn n_domains(&self) -> usize {
        self.n_domains
    }

    /// Position of a nodal point, using the coordinates of `triangle` so that
    /// periodic meshes stay unwrapped within it.
    pub fn point_in(&self, mesh: &Mesh2D, triangle: usize, p: NodalPoint) -> Point {
        let tri = mesh.triangles()[triangle];
        let xy = mesh.triangle_coords(triangle);
        let at = |v: usize| xy[tri.iter().position(|&w| w == v).expect("vertex of triangle")];
        match p {
            NodalPoint::Vertex(v) => at(v),
            NodalPoint::Edge(a, b) => {
                let (pa, pb) = (at(a), at(b));
                let (fa, fb) = (self.values[a], self.values[b]);
                let s = fa / (fa - fb);
                [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
            }
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Splits every triangle along the zero level of the linear interpolant and
/// labels the connected components of `{f > 0}` and `{f < 0}`.
///
/// Pieces of equal sign in neighboring triangles join when their common edge
/// carries that sign somewhere, so domains meeting only at a point stay apart.
pub fn decompose_nodal(mesh: &Mesh2D, field: &[f64], zero_tol: f64) -> Result<NodalDecomposition> {
    let n = mesh.vertices().len();
    if field.len() != n {
        return Err(Error::Parameter(format!("field has {} values for {n} vertices", field.len())));
    }
    if field.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("field has non-finite values".into()));
    }
    let peak = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = zero_tol * peak;
    if peak == 0.0 {
        return Err(Error::DegenerateInput("field vanishes identically".into()));
    }
    let values: Vec<f64> = field.iter().map(|&v| if v.abs() <= cut { 0.0 } else { v }).collect();
    let signs: Vec<i8> = values.iter().map(|&v| sign(v)).collect();

    let tris = mesh.triangles();
    // piece id per (triangle, sign)
    let mut piece_of = vec![[usize::MAX; 2]; tris.len()];
    let mut pieces = Vec::new();
    let mut zero_triangles = Vec::new();
    for (t, tri) in tris.iter().enumerate() {
        let mut any = false;
        for (slot, s) in [(0, 1i8), (1, -1i8)] {
            if tri.iter().any(|&v| signs[v] == s) {
                piece_of[t][slot] = pieces.len();
                pieces.push(Piece { triangle: t, sign: s, domain: 0 });
                any = true;
            }
        }
        if !any {
            zero_triangles.push(t);
        }
    }
    let slot = |s: i8| if s > 0 { 0 } else { 1 };

    let mut uf = UnionFind::new(pieces.len());
    let edge_tris = mesh.edge_triangles();
    for (&(a, b), ts) in &edge_tris {
        if ts.len() != 2 {
            continue;
        }
        for s in [1i8, -1] {
            if signs[a] == s || signs[b] == s {
                let (p, q) = (piece_of[ts[0]][slot(s)], piece_of[ts[1]][slot(s)]);
                if p != usize::MAX && q != usize::MAX {
                    uf.union(p, q);
                }
            }
        }
    }
    let mut label = std::collections::HashMap::new();
    let mut domain_sign = Vec::new();
    for (i, piece) in pieces.iter_mut().enumerate() {
        let r = uf.find(i);
        let next = label.len();
        let d = *label.entry(r).or_insert(next);
        if d == domain_sign.len() {
            domain_sign.push(piece.sign);
        }
        piece.domain = d;
    }
    let n_domains = domain_sign.len();

    let mut segments = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for tri in tris {
        let mut pts: Vec<NodalPoint> = Vec::new();
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if signs[a] == 0 {
                pts.push(NodalPoint::Vertex(a));
            }
            if signs[a] * signs[b] < 0 {
                let (u, v) = edge_key(a, b);
                pts.push(NodalPoint::Edge(u, v));
            }
        }
        // a lone zero vertex touches the zero set at a point; three zeros
        // mean the whole triangle is nodal and is listed separately
        if let [p, q] = pts[..] {
            let mut seg = [p, q];
            seg.sort();
            // a zero edge is shared by two triangles
            if seen.insert(seg) {
                segments.push(seg);
            }
        }
    }

    let mut dec = NodalDecomposition {
        values,
        signs,
        pieces,
        n_domains,
        domain_sign,
        touches_steklov: Vec::new(),
        segments,
        zero_triangles,
    };
    dec.touches_steklov = boundary_touch_check(&dec, mesh);
    Ok(dec)
}

/// Per domain: whether its closure meets a Steklov boundary edge.
pub fn boundary_touch_check(dec: &NodalDecomposition, mesh: &Mesh2D) -> Vec<bool> {
    let mut touches = vec![false; dec.n_domains];
    let tri_of_edge = mesh.boundary_edge_triangles();
    let mut by_tri: std::collections::HashMap<usize, Vec<&Piece>> = std::collections::HashMap::new();
    for p in &dec.pieces {
        by_tri.entry(p.triangle).or_default().push(p);
    }
    for (e, be) in mesh.boundary_edges().iter().enumerate() {
        if be.tag != BoundaryTag::Steklov {
            continue;
        }
        let [a, b] = be.vertices;
        for p in by_tri.get(&tri_of_edge[e]).into_iter().flatten() {
            // the closure of {s f > 0} in the triangle is {s f >= 0}
            if dec.signs[a] * p.sign >= 0 || dec.signs[b] * p.sign >= 0 {
                touches[p.domain] = true;
            }
        }
    }
    touches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk_mesh;

    fn field(m: &Mesh2D, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        m.vertices().iter().map(|p| f(p[0], p[1])).collect()
    }

    #[test]
    fn constant_field() {
        let m = make_disk_mesh(1.0, 0.2).unwrap();
        let d = decompose_nodal(&m, &vec![2.0; m.vertices().len()], 1e-7).unwrap();
        assert_eq!(d.n_domains, 1);
        assert!(d.segments.is_empty());
        assert_eq!(d.touches_steklov, vec![true]);
    }

    #[test]
    fn zero_field_rejected() {
        let m = make_disk_mesh(1.0, 0.3).unwrap();
        assert!(matches!(decompose_nodal(&m, &vec![0.0; m.vertices().len()], 1e-7), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn linear_field_splits_along_diameter() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let d = decompose_nodal(&m, &field(&m, |x, _| x), 1e-7).unwrap();
        assert_eq!(d.n_domains, 2);
        assert!(d.touches_steklov.iter().all(|&t| t));
        // every segment lies on x = 0
        for s in &d.segments {
            let t = (0..m.triangles().len())
                .find(|&t| {
                    s.iter().all(|p| match p {
                        NodalPoint::Vertex(v) => m.triangles()[t].contains(v),
                        NodalPoint::Edge(a, b) => m.triangles()[t].contains(a) && m.triangles()[t].contains(b),
                    })
                })
                .unwrap();
            for p in s {
                assert!(d.point_in(&m, t, *p)[0].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn saddle_has_four_domains() {
        let m = make_disk_mesh(1.0, 0.07).unwrap();
        let d = decompose_nodal(&m, &field(&m, |x, y| x * x - y * y), 1e-7).unwrap();
        assert_eq!(d.n_domains, 4);
        // rotated by a generic angle so no vertex sits on the cross
        let d = decompose_nodal(
            &m,
            &field(&m, |x, y| {
                let (c, s) = (0.3f64.cos(), 0.3f64.sin());
                let (u, v) = (c * x + s * y, -s * x + c * y);
                u * u - v * v
            }),
            1e-7,
        )
        .unwrap();
        assert_eq!(d.n_domains, 4);
    }

    #[test]
    fn scaling_invariance() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let f = field(&m, |x, y| x * y + 0.1 * x);
        let a = decompose_nodal(&m, &f, 1e-7).unwrap().n_domains;
        let g: Vec<f64> = f.iter().map(|v| -3.5 * v).collect();
        assert_eq!(decompose_nodal(&m, &g, 1e-7).unwrap().n_domains, a);
    }

    #[test]
    fn interior_bubble_flagged() {
        let m = make_disk_mesh(1.0, 0.08).unwrap();
        let d = decompose_nodal(&m, &field(&m, |x, y| x * x + y * y - 0.25), 1e-7).unwrap();
        assert_eq!(d.n_domains, 2);
        let inner = d.domain_sign.iter().position(|&s| s < 0).unwrap();
        assert!(!d.touches_steklov[inner]);
        assert!(d.touches_steklov[1 - inner]);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn domain_count_ignores_scaling(
            c in proptest::collection::vec(-1.0f64..1.0, 5),
            scale in 0.01f64..100.0,
            flip in proptest::bool::ANY,
        ) {
            let m = make_disk_mesh(1.0, 0.12).unwrap();
            let f = field(&m, |x, y| c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * (x * x - y * y));
            proptest::prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
            let s = if flip { -scale } else { scale };
            let g: Vec<f64> = f.iter().map(|v| s * v).collect();
            let a = decompose_nodal(&m, &f, 1e-7).unwrap();
            let b = decompose_nodal(&m, &g, 1e-7).unwrap();
            proptest::prop_assert_eq!(a.n_domains, b.n_domains);
            // labels may be permuted: pieces of a mixed triangle are numbered in sign order
            let sign = if flip { -1 } else { 1 };
            let mut sa: Vec<_> = a.domain_sign.iter().map(|x| sign * x).zip(&a.touches_steklov).collect();
            let mut sb: Vec<_> = b.domain_sign.iter().copied().zip(&b.touches_steklov).collect();
            sa.sort();
            sb.sort();
            proptest::prop_assert_eq!(sa, sb);
        }
    }
}
