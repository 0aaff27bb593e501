use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{edge_key, BoundaryEdge, BoundaryTag, Mesh2D};

/// Weights collapsing the complement of a subdomain `U`: energy weight
/// `eta^(n-2)` off `U`, Steklov density scaled by `eta^(n-1)` off the
/// Steklov part of the boundary of `U`.
#[derive(Clone, Debug)]
pub struct SingularWeightFamily {
    base: Mesh2D,
    in_u: Vec<bool>,
    virtual_dim: u32,
    /// Whether each boundary edge belongs to the closure of `U`.
    edge_in_u: Vec<bool>,
}

impl SingularWeightFamily {
    pub fn new(base: &Mesh2D, in_u: Vec<bool>, virtual_dim: u32) -> Result<Self> {
        if virtual_dim < 3 {
            return Err(Error::Parameter(format!("virtual dimension must be at least 3, got {virtual_dim}")));
        }
        if in_u.len() != base.n_triangles() {
            return Err(Error::Validation(format!(
                "{} subdomain flags for {} triangles",
                in_u.len(),
                base.n_triangles()
            )));
        }
        if !in_u.iter().any(|&b| b) {
            return Err(Error::Precondition("subdomain U is empty".into()));
        }
        let edge_in_u: Vec<bool> = base.boundary_edge_triangles().iter().map(|&t| in_u[t]).collect();
        let touches = base.boundary_edges().iter().zip(&edge_in_u).any(|(e, &u)| u && e.tag == BoundaryTag::Steklov);
        if !touches {
            return Err(Error::Precondition(
                "subdomain U touches no Steklov edge; the limit spectrum is undefined".into(),
            ));
        }
        Ok(SingularWeightFamily { base: base.clone(), in_u, virtual_dim, edge_in_u })
    }

    pub fn in_u(&self) -> &[bool] {
        &self.in_u
    }

    /// The limit problem: `U` alone, Steklov on its original Steklov edges,
    /// Neumann on its original Neumann edges and on the interface with the rest.
    pub fn limit_mesh(&self) -> Result<Mesh2D> {
        submesh(&self.base, &self.in_u)
    }
}

pub fn singular_family_at(family: &SingularWeightFamily, eta: f64) -> Result<Mesh2D> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Parameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let n = family.virtual_dim as i32;
    let w_out = eta.powi(n - 2);
    let rho_out = eta.powi(n - 1);
    let base = &family.base;
    let w: Vec<f64> =
        base.tri_weights().iter().zip(&family.in_u).map(|(&w, &u)| if u { w } else { w * w_out }).collect();
    let d: Vec<f64> = base
        .boundary_edges()
        .iter()
        .zip(&family.edge_in_u)
        .map(|(e, &u)| if u || e.tag != BoundaryTag::Steklov { e.density } else { e.density * rho_out })
        .collect();
    base.with_tri_weights(w)?.with_edge_densities(&d)
}

/// Triangles with `keep[t]`, re-indexed. Boundary edges of the parent inside
/// the selection keep their tag; new boundary edges are tagged Neumann.
pub fn submesh(mesh: &Mesh2D, keep: &[bool]) -> Result<Mesh2D> {
    let mut map = vec![usize::MAX; mesh.n_vertices()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut weights = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !keep[t] {
            continue;
        }
        let mut out = [0usize; 3];
        for (k, &v) in tri.iter().enumerate() {
            if map[v] == usize::MAX {
                map[v] = vertices.len();
                vertices.push(mesh.vertices()[v]);
            }
            out[k] = map[v];
        }
        triangles.push(out);
        weights.push(mesh.tri_weights()[t]);
    }
    let parent: HashMap<(usize, usize), &BoundaryEdge> =
        mesh.boundary_edges().iter().map(|e| (edge_key(e.vertices[0], e.vertices[1]), e)).collect();
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut inverse = vec![0usize; vertices.len()];
    for (g, &l) in map.iter().enumerate() {
        if l != usize::MAX {
            inverse[l] = g;
        }
    }
    let mut boundary = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&edge_key(a, b)] != 1 {
                continue;
            }
            let e = match parent.get(&edge_key(inverse[a], inverse[b])) {
                Some(p) => BoundaryEdge { vertices: [a, b], tag: p.tag, density: p.density },
                None => BoundaryEdge { vertices: [a, b], tag: BoundaryTag::Neumann, density: 1.0 },
            };
            boundary.push(e);
        }
    }
    Mesh2D::new(vertices, triangles, boundary, weights, mesh.period())
}

/// Triangles of a mesh whose centroid has positive `y`.
pub fn upper_half(mesh: &Mesh2D) -> Vec<bool> {
    (0..mesh.n_triangles()).map(|t| mesh.triangle_centroid(t)[1] > 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk_mesh;

    #[test]
    fn eta_one_is_identity() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let f = SingularWeightFamily::new(&m, upper_half(&m), 3).unwrap();
        assert_eq!(singular_family_at(&f, 1.0).unwrap(), m);
    }

    #[test]
    fn weights_follow_virtual_dimension() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let u = upper_half(&m);
        for (n, pw, pd) in [(3u32, 1, 2), (4, 2, 3)] {
            let f = SingularWeightFamily::new(&m, u.clone(), n).unwrap();
            let me = singular_family_at(&f, 0.25).unwrap();
            for (t, &w) in me.tri_weights().iter().enumerate() {
                let want = if u[t] { 1.0 } else { 0.25f64.powi(pw) };
                assert_eq!(w, want);
            }
            let owners = m.boundary_edge_triangles();
            for (e, &t) in me.boundary_edges().iter().zip(&owners) {
                let want = if u[t] { 1.0 } else { 0.25f64.powi(pd) };
                assert_eq!(e.density, want);
            }
        }
    }

    #[test]
    fn half_disk_submesh() {
        let m = make_disk_mesh(1.0, 0.05).unwrap();
        let f = SingularWeightFamily::new(&m, upper_half(&m), 3).unwrap();
        let s = f.limit_mesh().unwrap();
        assert!((s.area() - std::f64::consts::FRAC_PI_2).abs() < 0.03);
        assert!((s.boundary_length(BoundaryTag::Steklov) - std::f64::consts::PI).abs() < 0.05);
        assert_eq!(s.euler_characteristic(), 1);
    }

    #[test]
    fn subdomain_must_touch_steklov() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let inner: Vec<bool> = (0..m.n_triangles())
            .map(|t| {
                let c = m.triangle_centroid(t);
                c[0].hypot(c[1]) < 0.5
            })
            .collect();
        assert!(matches!(SingularWeightFamily::new(&m, inner, 3), Err(Error::Precondition(_))));
    }
}
