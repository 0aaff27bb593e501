use std::f64::consts::PI;

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon, Polygon};
use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::error::{Error, Result};
use crate::geometry::{mesh_polygon_domain, BoundaryTag, Mesh2D, Point};
use crate::graphs::MetricGraph;

/// Elements required across a strip of width `2 eps`.
pub const MIN_ELEMENTS_ACROSS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThickeningSpec {
    pub graph: MetricGraph,
    pub embedding: Embedding,
    /// Strip half-width.
    pub eps: f64,
    /// Half-disk radius is `c * eps`.
    pub c: f64,
    /// Defaults to `eps / 4`.
    pub target_h: Option<f64>,
}

impl ThickeningSpec {
    pub fn new(graph: MetricGraph, embedding: Embedding, eps: f64, c: f64, target_h: Option<f64>) -> Result<Self> {
        let s = ThickeningSpec { graph, embedding, eps, c, target_h };
        s.validate()?;
        Ok(s)
    }

    pub fn h(&self) -> f64 {
        self.target_h.unwrap_or(2.0 * self.eps / MIN_ELEMENTS_ACROSS)
    }

    pub fn radius(&self) -> f64 {
        self.c * self.eps
    }

    /// Endpoints of the Steklov diameter at vertex `j`.
    pub fn diameter(&self, j: usize) -> [Point; 2] {
        let p = self.embedding.positions[j];
        let o = self.embedding.outward[j];
        let r = self.radius();
        [[p[0] - r * o[1], p[1] + r * o[0]], [p[0] + r * o[1], p[1] - r * o[0]]]
    }

    pub fn validate(&self) -> Result<()> {
        let (eps, c) = (self.eps, self.c);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("strip half-width must be positive, got {eps}")));
        }
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::Parameter(format!("radius factor must exceed 1, got {c}")));
        }
        let h = self.h();
        if !(h > 0.0) || 2.0 * eps / h < MIN_ELEMENTS_ACROSS * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "mesh size {h} leaves fewer than {MIN_ELEMENTS_ACROSS} elements across the strip width {}",
                2.0 * eps
            )));
        }
        let g = &self.graph;
        let e = &self.embedding;
        if e.positions.len() != g.n_vertices() || e.curves.len() != g.edges().len() {
            return Err(Error::Embedding("embedding does not match the graph".into()));
        }
        for (i, (curve, &l)) in e.curves.iter().zip(g.lengths()).enumerate() {
            if (curve.length() - l).abs() > 1e-9 * l.max(1.0) {
                return Err(Error::Embedding(format!("edge {i} is realized with the wrong length")));
            }
            if 2.0 * self.radius() >= l {
                return Err(Error::Geometry(format!(
                    "edge {i} of length {l} is shorter than two half-disk radii {}; use smaller eps or c",
                    2.0 * self.radius()
                )));
            }
            if let super::EdgeCurve::Arc { radius, .. } = curve {
                if *radius <= 2.0 * eps {
                    return Err(Error::Geometry(format!("edge {i} bends too sharply for a strip of half-width {eps}")));
                }
            }
        }
        let root = (c * c - 1.0).sqrt();
        for j in 0..g.n_vertices() {
            let dirs = self.incident_directions(j);
            for &(i, t) in &dirs {
                let sin_a = -(t[0] * e.outward[j][0] + t[1] * e.outward[j][1]);
                let cot = (1.0 - sin_a * sin_a).max(0.0).sqrt() / sin_a;
                if !(sin_a > 0.0) || cot >= root {
                    return Err(Error::Geometry(format!(
                        "edge {i} leaves vertex {j} too close to the Steklov diameter; the strip would not \
                         enter the half-disk cleanly (increase c)"
                    )));
                }
            }
            for (a, &(i, s)) in dirs.iter().enumerate() {
                for &(k, t) in &dirs[a + 1..] {
                    let half = 0.5 * (s[0] * t[0] + s[1] * t[1]).clamp(-1.0, 1.0).acos();
                    if half.sin() < 1.0 / c - 1e-9 {
                        return Err(Error::Geometry(format!(
                            "strips of edges {i} and {k} overlap outside the half-disk at vertex {j} \
                             (increase c or spread the edges)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(edge, unit tangent pointing into the edge)` at vertex `j`.
    fn incident_directions(&self, j: usize) -> Vec<(usize, Point)> {
        let mut out = Vec::new();
        for (i, (&[a, b], curve)) in self.graph.edges().iter().zip(&self.embedding.curves).enumerate() {
            if a == j {
                out.push((i, curve.tangent(0.0)));
            }
            if b == j {
                let t = curve.tangent(curve.length());
                out.push((i, [-t[0], -t[1]]));
            }
        }
        out
    }

    /// Arc length at which the strip starts, measured from vertex `j`.
    fn strip_offset(&self, j: usize, t: Point) -> f64 {
        let o = self.embedding.outward[j];
        let sin_a = -(t[0] * o[0] + t[1] * o[1]);
        let cot = (1.0 - sin_a * sin_a).max(0.0).sqrt() / sin_a;
        0.5 * self.eps * (cot + (self.c * self.c - 1.0).sqrt())
    }

    fn half_disk(&self, j: usize) -> Vec<Point> {
        let p = self.embedding.positions[j];
        let o = self.embedding.outward[j];
        let d = [-o[1], o[0]];
        let r = self.radius();
        let n = ((PI * r) / (0.5 * self.h())).ceil().max(8.0) as usize;
        (0..=n)
            .map(|k| {
                let f = PI * k as f64 / n as f64;
                [p[0] + r * (f.cos() * d[0] - f.sin() * o[0]), p[1] + r * (f.cos() * d[1] - f.sin() * o[1])]
            })
            .collect()
    }

    fn strip(&self, i: usize) -> Vec<Point> {
        let [a, b] = self.graph.edges()[i];
        let curve = &self.embedding.curves[i];
        let l = curve.length();
        let ta = curve.tangent(0.0);
        let tb = curve.tangent(l);
        let s0 = self.strip_offset(a, ta);
        let s1 = l - self.strip_offset(b, [-tb[0], -tb[1]]);
        let samples = curve.sample(s0, s1, 0.5 * self.h());
        let eps = self.eps;
        let mut ring: Vec<Point> = samples.iter().map(|(p, t)| [p[0] - eps * t[1], p[1] + eps * t[0]]).collect();
        ring.extend(samples.iter().rev().map(|(p, t)| [p[0] + eps * t[1], p[1] - eps * t[0]]));
        ring
    }
}

/// `sum_j pi (c eps)^2 / 2 + sum_i (l_i - 2 c eps) 2 eps`.
pub fn expected_area(spec: &ThickeningSpec) -> f64 {
    let r = spec.radius();
    spec.graph.n_vertices() as f64 * PI * r * r / 2.0
        + spec.graph.lengths().iter().map(|l| (l - 2.0 * r) * 2.0 * spec.eps).sum::<f64>()
}

/// Counter-clockwise polygon; the union uses a winding fill rule.
fn polygon(ring: &[Point]) -> Polygon<f64> {
    let twice_area: f64 = (0..ring.len())
        .map(|k| {
            let (p, q) = (ring[k], ring[(k + 1) % ring.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    let mut ring = ring.to_vec();
    if twice_area < 0.0 {
        ring.reverse();
    }
    Polygon::new(LineString::from(ring.iter().map(|p| Coord { x: p[0], y: p[1] }).collect::<Vec<_>>()), vec![])
}

fn ring_points(ls: &LineString<f64>, min_gap: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for c in ls.coords() {
        let p = [c.x, c.y];
        if out.last().is_none_or(|q: &Point| (p[0] - q[0]).hypot(p[1] - q[1]) > min_gap) {
            out.push(p);
        }
    }
    while out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if (f[0] - l[0]).hypot(f[1] - l[1]) <= min_gap {
            out.pop();
        } else {
            break;
        }
    }
    out
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Meshes the thickened domain; diameters are Steklov, the rest Neumann.
pub fn build_thickened_mesh(spec: &ThickeningSpec) -> Result<Mesh2D> {
    spec.validate()?;
    let g = &spec.graph;
    let disks: Vec<Polygon<f64>> = (0..g.n_vertices()).map(|j| polygon(&spec.half_disk(j))).collect();
    let strips: Vec<Polygon<f64>> = (0..g.edges().len()).map(|i| polygon(&spec.strip(i))).collect();

    let slack = 1e-6 * spec.eps * spec.eps;
    let overlap = |a: &Polygon<f64>, b: &Polygon<f64>| a.intersection(b).unsigned_area();
    for j in 0..disks.len() {
        for k in j + 1..disks.len() {
            if overlap(&disks[j], &disks[k]) > slack {
                return Err(Error::Geometry(format!("half-disks {j} and {k} intersect (use smaller eps or c)")));
            }
        }
        for (i, s) in strips.iter().enumerate() {
            if !g.edges()[i].contains(&j) && overlap(&disks[j], s) > slack {
                return Err(Error::Geometry(format!("strip {i} runs through the half-disk of vertex {j}")));
            }
        }
    }
    for i in 0..strips.len() {
        for k in i + 1..strips.len() {
            let common: MultiPolygon<f64> = strips[i].intersection(&strips[k]);
            let shared = g.edges()[i].iter().find(|v| g.edges()[k].contains(v));
            let outside = match shared {
                Some(&j) => common.difference(&disks[j]).unsigned_area(),
                None => common.unsigned_area(),
            };
            if outside > slack {
                return Err(Error::Geometry(format!(
                    "thickened edges {i} and {k} intersect (use smaller eps or larger c)"
                )));
            }
        }
    }

    let pieces: Vec<Polygon<f64>> = disks.into_iter().chain(strips).collect();
    let union = geo::unary_union(&pieces);
    if union.0.len() != 1 {
        return Err(Error::Geometry(format!("thickened region has {} components", union.0.len())));
    }
    let poly = &union.0[0];
    let h = spec.h();
    let diameters: Vec<[Point; 2]> = (0..g.n_vertices()).map(|j| spec.diameter(j)).collect();
    // the overlay rounds to a grid scaled by the bounding box; put diameter
    // points back exactly (other boundary points stay ~radius/8 away)
    let extent = geo::BoundingRect::bounding_rect(poly).map_or(0.0, |r| r.width().max(r.height()));
    let tol = 1e-6 * spec.radius().max(extent);
    let snap = |p: Point| -> Point {
        for d in &diameters {
            for e in d {
                if (p[0] - e[0]).hypot(p[1] - e[1]) <= tol {
                    return *e;
                }
            }
            if point_segment_distance(p, d[0], d[1]) <= tol {
                let v = [d[1][0] - d[0][0], d[1][1] - d[0][1]];
                let t = ((p[0] - d[0][0]) * v[0] + (p[1] - d[0][1]) * v[1]) / (v[0] * v[0] + v[1] * v[1]);
                return [d[0][0] + t * v[0], d[0][1] + t * v[1]];
            }
        }
        p
    };
    let min_gap = 1e-6 * h;
    let mut rings = vec![ring_points(poly.exterior(), min_gap)];
    rings.extend(poly.interiors().iter().map(|r| ring_points(r, min_gap)));
    for r in &mut rings {
        r.iter_mut().for_each(|p| *p = snap(*p));
    }

    let mesh = mesh_polygon_domain(&rings, h, |p, q| {
        let on = |x: Point| diameters.iter().position(|d| point_segment_distance(x, d[0], d[1]) <= tol);
        match (on(p), on(q)) {
            (Some(a), Some(b)) if a == b => BoundaryTag::Steklov,
            _ => BoundaryTag::Neumann,
        }
    })?;
    let want = 2.0 * spec.radius() * g.n_vertices() as f64;
    let got = mesh.boundary_length(BoundaryTag::Steklov);
    if (got - want).abs() > 1e-6 * want {
        return Err(Error::Geometry(format!(
            "Steklov diameters have total length {got}, expected {want}; a diameter is not on the outer boundary"
        )));
    }
    Ok(mesh)
}
