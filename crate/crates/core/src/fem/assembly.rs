use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh2D};

/// P1 Dirichlet-energy matrix over all vertices. Alias kept for readability at call sites.
pub type StiffnessMatrix = CsrMatrix;

/// Relative area below which a triangle counts as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-14;

/// Weighted local stiffness of one triangle: `w / (4A) (b_i b_j + c_i c_j)`.
pub fn local_stiffness(p: [[f64; 2]; 3], weight: f64) -> Result<[[f64; 3]; 3], f64> {
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let scale = b.iter().chain(&c).fold(0.0f64, |m, v| m.max(v.abs()));
    if !(area > DEGENERATE_REL_AREA * scale * scale) {
        return Err(area);
    }
    let f = weight / (4.0 * area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = f * (b[i] * b[j] + c[i] * c[j]);
        }
    }
    Ok(k)
}

pub fn assemble_stiffness(mesh: &Mesh2D) -> Result<StiffnessMatrix> {
    let mut entries = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local_stiffness(mesh.triangle_coords(t), mesh.tri_weights()[t])
            .map_err(|area| Error::DegenerateTriangle { triangle: t, area })?;
        for i in 0..3 {
            for j in 0..3 {
                entries.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    let n = mesh.n_vertices();
    Ok(CsrMatrix::from_triplets(n, n, entries))
}

/// Consistent P1 mass of the boundary edges carrying `tag`, weighted by edge density.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMass {
    /// Sorted global ids of the vertices touched by tagged edges.
    pub vertices: Vec<usize>,
    /// Mass matrix indexed by position in `vertices`.
    pub matrix: CsrMatrix,
}

impl BoundaryMass {
    /// Restriction to a subset of `self.vertices` (given as global ids).
    pub fn restrict(&self, global: &[usize]) -> Result<CsrMatrix> {
        let local: Vec<usize> = global
            .iter()
            .map(|g| {
                self.vertices
                    .binary_search(g)
                    .map_err(|_| Error::Validation(format!("vertex {g} carries no boundary mass")))
            })
            .collect::<Result<_>>()?;
        Ok(self.matrix.submatrix(&local, &local))
    }

    /// `1^T B 1`, the weighted length of the tagged boundary.
    pub fn total(&self) -> f64 {
        self.matrix.mul_vec(&vec![1.0; self.vertices.len()]).iter().sum()
    }
}

pub fn assemble_boundary_mass(mesh: &Mesh2D, tag: BoundaryTag) -> Result<BoundaryMass> {
    let vertices = mesh.tagged_vertices(tag);
    if vertices.is_empty() {
        return Err(Error::EmptyBoundary(tag.as_str()));
    }
    let mut local = vec![usize::MAX; mesh.n_vertices()];
    for (k, &v) in vertices.iter().enumerate() {
        local[v] = k;
    }
    let mut entries = Vec::new();
    for e in mesh.boundary_edges().iter().filter(|e| e.tag == tag) {
        let [a, b] = e.vertices;
        let m = e.density * mesh.edge_length(a, b);
        let (a, b) = (local[a], local[b]);
        entries.extend_from_slice(&[(a, a, m / 3.0), (b, b, m / 3.0), (a, b, m / 6.0), (b, a, m / 6.0)]);
    }
    let n = vertices.len();
    Ok(BoundaryMass { vertices, matrix: CsrMatrix::from_triplets(n, n, entries) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk_mesh, BoundaryEdge};
    use std::f64::consts::PI;

    #[test]
    fn reference_triangle() {
        let k = local_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 1.0).unwrap();
        // Hand integral: grad phi = (-1,-1), (1,0), (0,1) on area 1/2.
        let grads = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                let exact: f64 = 0.5 * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                assert!((k[i][j] - exact).abs() < 1e-15);
            }
        }
        assert_eq!(k[0], [1.0, -0.5, -0.5]);
    }

    #[test]
    fn degenerate_triangle_named() {
        let m =
            Mesh2D::new_unchecked(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], vec![], vec![1.0], None);
        assert!(matches!(assemble_stiffness(&m), Err(Error::DegenerateTriangle { triangle: 0, .. })));
    }

    #[test]
    fn constants_in_kernel_and_weight_linearity() {
        let m = make_disk_mesh(1.0, 0.2).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let kc = k.mul_vec(&vec![3.0; m.n_vertices()]);
        assert!(kc.iter().all(|v| v.abs() < 1e-12));
        assert!(k.asymmetry() < 1e-14);
        let m2 = m.with_tri_weights(vec![2.0; m.n_triangles()]).unwrap();
        let k2 = assemble_stiffness(&m2).unwrap();
        for i in 0..m.n_vertices() {
            for (j, v) in k.row(i) {
                assert_eq!(k2.get(i, j), 2.0 * v);
            }
        }
    }

    #[test]
    fn single_edge_mass() {
        let m = Mesh2D::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { vertices: [0, 1], tag: BoundaryTag::Steklov, density: 1.0 },
                BoundaryEdge { vertices: [1, 2], tag: BoundaryTag::Neumann, density: 1.0 },
                BoundaryEdge { vertices: [2, 0], tag: BoundaryTag::Neumann, density: 1.0 },
            ],
            vec![1.0],
            None,
        )
        .unwrap();
        let b = assemble_boundary_mass(&m, BoundaryTag::Steklov).unwrap();
        assert_eq!(b.vertices, vec![0, 1]);
        let d = b.matrix.to_dense();
        // Integrals of phi_i phi_j over [0, 1] with hat functions.
        assert!((d[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d[(0, 1)] - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(assemble_boundary_mass(&m, BoundaryTag::Dirichlet), Err(Error::EmptyBoundary(_))));
    }

    #[test]
    fn circle_mass_and_density_scaling() {
        let m = make_disk_mesh(1.0, 0.05).unwrap();
        let b = assemble_boundary_mass(&m, BoundaryTag::Steklov).unwrap();
        assert!((b.total() - m.total_boundary_length()).abs() < 1e-12);
        assert!((b.total() - 2.0 * PI).abs() < 0.01);
        let m3 = m.with_edge_densities(&vec![3.0; m.boundary_edges().len()]).unwrap();
        let b3 = assemble_boundary_mass(&m3, BoundaryTag::Steklov).unwrap();
        assert!((b3.total() - 3.0 * b.total()).abs() < 1e-12);
    }
}
