//! Planar triangle meshes with tagged boundary segments.
//!
//! A [`Mesh2D`] carries everything the solver needs to describe a weighted
//! Steklov problem on a planar domain: vertex coordinates, counterclockwise
//! triangles, boundary edges tagged Steklov / Neumann / Dirichlet with a
//! per-edge density, and a per-triangle multiplicative energy weight.
//!
//! Meshes may be periodic in `x` (flat cylinders). In that case vertex
//! coordinates live in `[0, period)` and every geometric quantity is computed
//! from unwrapped local coordinates.

mod generators;
pub mod io;
mod polygon;
mod refine;
mod tagging;

pub use generators::{make_annulus_mesh, make_disk_mesh, make_strip_mesh, make_strip_mesh_tagged};
pub use io::{mesh_to_string, parse_mesh, read_mesh, write_mesh, MESH_HEADER};
pub use polygon::mesh_polygon_domain;
pub use refine::refine;
pub use tagging::{tag_boundary, Arc, Axis};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Steklov,
    Neumann,
    Dirichlet,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Steklov => "steklov",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::Dirichlet => "dirichlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "steklov" | "s" => Some(BoundaryTag::Steklov),
            "neumann" | "n" => Some(BoundaryTag::Neumann),
            "dirichlet" | "d" => Some(BoundaryTag::Dirichlet),
            _ => None,
        }
    }
}

impl std::fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
    /// Boundary density. Only meaningful on Steklov edges, but kept positive everywhere.
    pub density: f64,
}

/// Planar triangulation with tagged boundary; the discrete `(M, g, rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    tri_weight: Vec<f64>,
    period: Option<f64>,
}

/// Undirected edge key, smaller index first.
#[inline]
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        tri_weight: Vec<f64>,
        period: Option<f64>,
    ) -> Result<Self> {
        let mesh = Self::new_unchecked(vertices, triangles, boundary_edges, tri_weight, period);
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh without validation. Downstream operations still guard
    /// against degenerate triangles, but topology is trusted.
    pub fn new_unchecked(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        tri_weight: Vec<f64>,
        period: Option<f64>,
    ) -> Self {
        Mesh2D { vertices, triangles, boundary_edges, tri_weight, period }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn tri_weights(&self) -> &[f64] {
        &self.tri_weight
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Same geometry and tags with new triangle weights.
    pub fn with_tri_weights(&self, tri_weight: Vec<f64>) -> Result<Self> {
        if tri_weight.len() != self.triangles.len() {
            return Err(Error::Validation(format!(
                "expected {} triangle weights, got {}",
                self.triangles.len(),
                tri_weight.len()
            )));
        }
        let mut out = self.clone();
        out.tri_weight = tri_weight;
        out.validate_weights()?;
        Ok(out)
    }

    /// Same geometry with replacement boundary edges (tags / densities).
    pub fn with_boundary_edges(&self, boundary_edges: Vec<BoundaryEdge>) -> Result<Self> {
        Mesh2D::new(self.vertices.clone(), self.triangles.clone(), boundary_edges, self.tri_weight.clone(), self.period)
    }

    /// Same mesh with per-boundary-edge densities replaced.
    pub fn with_edge_densities(&self, densities: &[f64]) -> Result<Self> {
        if densities.len() != self.boundary_edges.len() {
            return Err(Error::Validation(format!(
                "expected {} edge densities, got {}",
                self.boundary_edges.len(),
                densities.len()
            )));
        }
        let mut out = self.clone();
        for (e, &d) in out.boundary_edges.iter_mut().zip(densities) {
            e.density = d;
        }
        out.validate_weights()?;
        Ok(out)
    }

    /// Coordinates scaled by `factor` (homothety about the origin).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Parameter(format!("scale factor must be positive, got {factor}")));
        }
        let mut out = self.clone();
        for p in &mut out.vertices {
            p[0] *= factor;
            p[1] *= factor;
        }
        out.period = self.period.map(|l| l * factor);
        Ok(out)
    }

    /// Displacement from vertex `a` to vertex `b`, unwrapped across a periodic seam.
    #[inline]
    pub fn displacement(&self, a: usize, b: usize) -> Point {
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let mut dx = pb[0] - pa[0];
        if let Some(l) = self.period {
            if dx > 0.5 * l {
                dx -= l;
            } else if dx < -0.5 * l {
                dx += l;
            }
        }
        [dx, pb[1] - pa[1]]
    }

    #[inline]
    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    /// Midpoint of an edge, wrapped back into the periodic cell.
    pub fn edge_midpoint(&self, a: usize, b: usize) -> Point {
        let d = self.displacement(a, b);
        let pa = self.vertices[a];
        let mut m = [pa[0] + 0.5 * d[0], pa[1] + 0.5 * d[1]];
        if let Some(l) = self.period {
            m[0] = m[0].rem_euclid(l);
        }
        m
    }

    /// Triangle corners in local (unwrapped) coordinates, anchored at the first vertex.
    pub fn triangle_coords(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let db = self.displacement(a, b);
        let dc = self.displacement(a, c);
        [pa, [pa[0] + db[0], pa[1] + db[1]], [pa[0] + dc[0], pa[1] + dc[1]]]
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        let [p, q, r] = self.triangle_coords(t);
        let mut c = [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0];
        if let Some(l) = self.period {
            c[0] = c[0].rem_euclid(l);
        }
        c
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let u = self.displacement(a, b);
        let v = self.displacement(a, c);
        0.5 * (u[0] * v[1] - u[1] * v[0])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e.vertices[0], e.vertices[1]))
            .sum()
    }

    pub fn total_boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e.vertices[0], e.vertices[1])).sum()
    }

    /// Sorted, deduplicated vertices touched by edges with the given tag.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().filter(|e| e.tag == tag).flat_map(|e| e.vertices).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Vertex sets that enter the Steklov problem: (Steklov, Dirichlet).
    /// A vertex shared by a Steklov and a Dirichlet edge is Dirichlet.
    pub fn problem_vertex_sets(&self) -> (Vec<usize>, Vec<usize>) {
        let dirichlet = self.tagged_vertices(BoundaryTag::Dirichlet);
        let steklov = self
            .tagged_vertices(BoundaryTag::Steklov)
            .into_iter()
            .filter(|v| dirichlet.binary_search(v).is_err())
            .collect();
        (steklov, dirichlet)
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }

    /// Map from undirected edge to the triangles containing it.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    /// The triangle owning each boundary edge, in boundary-edge order.
    pub fn boundary_edge_triangles(&self) -> Vec<usize> {
        let map = self.edge_triangles();
        self.boundary_edges.iter().map(|e| map[&edge_key(e.vertices[0], e.vertices[1])][0]).collect()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_triangles().len()
    }

    /// V - E + F of the triangulation.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.n_edges() as i64 + self.triangles.len() as i64
    }

    /// Longest edge in the mesh.
    pub fn h_max(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| self.edge_length(a, b))
            .fold(0.0, f64::max)
    }

    /// Bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut dx = hi[0] - lo[0];
        if let Some(l) = self.period {
            dx = dx.max(l);
        }
        dx.hypot(hi[1] - lo[1])
    }

    /// Connected components of the boundary edges satisfying `keep`,
    /// returned as lists of boundary-edge indices.
    pub fn boundary_components_where(&self, keep: impl Fn(&BoundaryEdge) -> bool) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.vertices.len());
        let selected: Vec<usize> = (0..self.boundary_edges.len()).filter(|&i| keep(&self.boundary_edges[i])).collect();
        for &i in &selected {
            let [a, b] = self.boundary_edges[i].vertices;
            uf.union(a, b);
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut order = Vec::new();
        for &i in &selected {
            let r = uf.find(self.boundary_edges[i].vertices[0]);
            groups
                .entry(r)
                .or_insert_with(|| {
                    order.push(r);
                    Vec::new()
                })
                .push(i);
        }
        order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
    }

    pub fn boundary_components(&self) -> Vec<Vec<usize>> {
        self.boundary_components_where(|_| true)
    }

    /// Per-vertex boundary-component id (None for interior vertices).
    pub fn boundary_component_of_vertex(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.vertices.len()];
        for (c, comp) in self.boundary_components().iter().enumerate() {
            for &e in comp {
                for v in self.boundary_edges[e].vertices {
                    out[v] = Some(c);
                }
            }
        }
        out
    }

    fn validate_weights(&self) -> Result<()> {
        if self.tri_weight.len() != self.triangles.len() {
            return Err(Error::Validation(format!(
                "{} triangle weights for {} triangles",
                self.tri_weight.len(),
                self.triangles.len()
            )));
        }
        if let Some((t, w)) = self.tri_weight.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Validation(format!("triangle {t} has non-positive weight {w}")));
        }
        if let Some((i, e)) =
            self.boundary_edges.iter().enumerate().find(|(_, e)| !(e.density > 0.0 && e.density.is_finite()))
        {
            return Err(Error::Validation(format!("boundary edge {i} has non-positive density {}", e.density)));
        }
        Ok(())
    }

    /// Checks every structural invariant of the mesh.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if nv < 3 || self.triangles.is_empty() {
            return Err(Error::Validation("mesh needs at least one triangle".into()));
        }
        if let Some(l) = self.period {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!("invalid period {l}")));
            }
        }
        if self.vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation("non-finite vertex coordinate".into()));
        }
        self.validate_weights()?;
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Validation(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Validation(format!("triangle {t} repeats a vertex")));
            }
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::Validation(format!("triangle {t} is not counterclockwise (signed area {area:e})")));
            }
        }

        let edges = self.edge_triangles();
        let mut expected_boundary = Vec::new();
        for (&key, tris) in &edges {
            match tris.len() {
                1 => expected_boundary.push(key),
                2 => {}
                n => return Err(Error::Validation(format!("edge {key:?} belongs to {n} triangles"))),
            }
        }
        expected_boundary.sort_unstable();

        let mut tagged: Vec<(usize, usize)> = Vec::with_capacity(self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            if a >= nv || b >= nv || a == b {
                return Err(Error::Validation(format!("bad boundary edge {:?}", e.vertices)));
            }
            tagged.push(edge_key(a, b));
        }
        tagged.sort_unstable();
        if tagged.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate boundary edge".into()));
        }
        if tagged != expected_boundary {
            return Err(Error::Validation(format!(
                "tagged boundary ({} edges) does not match the topological boundary ({} edges)",
                tagged.len(),
                expected_boundary.len()
            )));
        }

        let mut degree = vec![0usize; nv];
        for &(a, b) in &tagged {
            degree[a] += 1;
            degree[b] += 1;
        }
        if let Some(v) = degree.iter().position(|&d| d != 0 && d != 2) {
            return Err(Error::Validation(format!("boundary is not a union of closed curves at vertex {v}")));
        }
        Ok(())
    }
}

/// Topological data of a compact surface with boundary, used by the
/// multiplicity bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceTopology {
    pub orientable: bool,
    pub genus: u32,
    pub boundary_components: u32,
    pub p_invariant: i64,
}

impl SurfaceTopology {
    pub fn orientable(genus: u32, boundary_components: u32) -> Result<Self> {
        if boundary_components == 0 {
            return Err(Error::Parameter("a surface with boundary needs l >= 1".into()));
        }
        let chi = 2 - 2 * genus as i64 - boundary_components as i64;
        Ok(SurfaceTopology {
            orientable: true,
            genus,
            boundary_components,
            p_invariant: 1 - chi - boundary_components as i64,
        })
    }

    /// Non-orientable surface given by its Euler characteristic; `p = 1 - chi - l`.
    pub fn non_orientable(euler_characteristic: i64, boundary_components: u32) -> Result<Self> {
        if boundary_components == 0 {
            return Err(Error::Parameter("a surface with boundary needs l >= 1".into()));
        }
        let p = 1 - euler_characteristic - boundary_components as i64;
        if p < 0 {
            return Err(Error::Parameter(format!("non-orientable surface needs p = 1 - chi - l >= 0, got {p}")));
        }
        Ok(SurfaceTopology { orientable: false, genus: 0, boundary_components, p_invariant: p })
    }

    pub fn disk() -> Self {
        SurfaceTopology::orientable(0, 1).unwrap()
    }

    pub fn annulus() -> Self {
        SurfaceTopology::orientable(0, 2).unwrap()
    }

    pub fn euler_characteristic(&self) -> i64 {
        1 - self.p_invariant - self.boundary_components as i64
    }

    pub fn is_disk(&self) -> bool {
        self.orientable && self.genus == 0 && self.boundary_components == 1
    }

    /// Topology of a planar mesh (always orientable).
    pub fn of_mesh(mesh: &Mesh2D) -> Result<Self> {
        let chi = mesh.euler_characteristic();
        let l = mesh.boundary_components().len() as i64;
        let twice_genus = 2 - chi - l;
        if twice_genus < 0 || twice_genus % 2 != 0 {
            return Err(Error::Validation(format!("inconsistent topology: chi = {chi}, l = {l}")));
        }
        SurfaceTopology::orientable((twice_genus / 2) as u32, l as u32)
    }
}
