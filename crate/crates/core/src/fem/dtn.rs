use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, MatRef, Side};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// Right-hand sides solved per interior back-substitution batch.
const BLOCK: usize = 64;

/// Solver for the eliminated block: maps Steklov data to the discrete
/// harmonic (energy-minimizing) field with Neumann conditions elsewhere.
#[derive(Clone)]
pub struct HarmonicExtender {
    /// Global ids of the prescribed vertices.
    pub steklov: Vec<usize>,
    pub dirichlet: Vec<usize>,
    /// Global ids of the eliminated (interior and Neumann) block.
    pub interior: Vec<usize>,
    n_vertices: usize,
    factor: Option<Arc<Llt<usize, f64>>>,
    k_is: CsrMatrix,
}

impl std::fmt::Debug for HarmonicExtender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicExtender")
            .field("steklov", &self.steklov.len())
            .field("dirichlet", &self.dirichlet.len())
            .field("interior", &self.interior.len())
            .finish()
    }
}

impl HarmonicExtender {
    pub fn new(k: &CsrMatrix, steklov: &[usize], dirichlet: &[usize]) -> Result<Self> {
        let n = k.n_rows();
        if k.n_cols() != n {
            return Err(Error::Validation("stiffness matrix must be square".into()));
        }
        if steklov.is_empty() {
            return Err(Error::EmptyBoundary("steklov"));
        }
        // 0 = interior, 1 = Steklov, 2 = Dirichlet
        let mut role = vec![0u8; n];
        for &v in steklov {
            if v >= n || role[v] != 0 {
                return Err(Error::Validation(format!("Steklov vertex {v} is repeated or out of range")));
            }
            role[v] = 1;
        }
        for &v in dirichlet {
            if v >= n || role[v] == 2 {
                return Err(Error::Validation(format!("Dirichlet vertex {v} is repeated or out of range")));
            }
            if role[v] == 1 {
                return Err(Error::Validation(format!("vertex {v} is both Steklov and Dirichlet")));
            }
            role[v] = 2;
        }
        let interior: Vec<usize> = (0..n).filter(|&v| role[v] == 0).collect();
        check_interior_anchored(k, &role, &interior)?;
        let k_is = k.submatrix(&interior, steklov);
        let factor = if interior.is_empty() {
            None
        } else {
            let k_ii = k.submatrix(&interior, &interior).to_faer()?;
            let f = k_ii
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::Factorization(format!("interior block is not positive definite: {e:?}")))?;
            Some(Arc::new(f))
        };
        Ok(HarmonicExtender {
            steklov: steklov.to_vec(),
            dirichlet: dirichlet.to_vec(),
            interior,
            n_vertices: n,
            factor,
            k_is,
        })
    }

    /// Solves `K_ii X = -K_iS V` for the columns of `values`.
    fn interior_values(&self, values: MatRef<'_, f64>) -> Mat<f64> {
        let m = values.ncols();
        let mut x = Mat::zeros(self.interior.len(), m);
        for r in 0..self.interior.len() {
            for (s, v) in self.k_is.row(r) {
                for c in 0..m {
                    x[(r, c)] -= v * values[(s, c)];
                }
            }
        }
        if let Some(f) = &self.factor {
            f.solve_in_place(x.as_mut());
        }
        x
    }

    /// Full vertex fields for boundary data given as columns indexed like
    /// `steklov`. Dirichlet vertices are zero.
    pub fn extend(&self, values: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(values.nrows(), self.steklov.len());
        let m = values.ncols();
        let mut out = Mat::zeros(self.n_vertices, m);
        for (a, &g) in self.steklov.iter().enumerate() {
            for c in 0..m {
                out[(g, c)] = values[(a, c)];
            }
        }
        let x = self.interior_values(values);
        for (r, &g) in self.interior.iter().enumerate() {
            for c in 0..m {
                out[(g, c)] = x[(r, c)];
            }
        }
        out
    }
}

/// Discrete Dirichlet-to-Neumann operator on the Steklov vertices, with the
/// interior factorization used to build it.
#[derive(Clone, Debug)]
pub struct DtnMatrix {
    pub matrix: Mat<f64>,
    pub extender: HarmonicExtender,
}

impl DtnMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn steklov(&self) -> &[usize] {
        &self.extender.steklov
    }

    /// `max |L_ij - L_ji| / max |L_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.dim();
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                num = num.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
                den = den.max(self.matrix[(i, j)].abs());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Schur complement of the stiffness matrix onto the Steklov vertices.
///
/// Dirichlet vertices are removed (value zero); every other non-Steklov
/// vertex is eliminated, which imposes the natural Neumann condition.
pub fn dtn_matrix(k: &CsrMatrix, steklov: &[usize], dirichlet: &[usize]) -> Result<DtnMatrix> {
    let extender = HarmonicExtender::new(k, steklov, dirichlet)?;
    let ns = steklov.len();
    let mut matrix = k.submatrix(steklov, steklov).to_dense();
    if !extender.interior.is_empty() {
        let k_si = k.submatrix(steklov, &extender.interior);
        let mut start = 0;
        while start < ns {
            let end = (start + BLOCK).min(ns);
            let mut unit = Mat::<f64>::zeros(ns, end - start);
            for c in start..end {
                unit[(c, c - start)] = 1.0;
            }
            // X = -K_ii^{-1} K_iS E, so Lambda E = K_SS E + K_Si X
            let x = extender.interior_values(unit.as_ref());
            for a in 0..ns {
                for (j, v) in k_si.row(a) {
                    for c in 0..end - start {
                        matrix[(a, start + c)] += v * x[(j, c)];
                    }
                }
            }
            start = end;
        }
    }
    Ok(DtnMatrix { matrix, extender })
}

/// Every connected piece of the eliminated block must touch a Steklov or
/// Dirichlet vertex; otherwise K_ii is singular.
fn check_interior_anchored(k: &CsrMatrix, role: &[u8], interior: &[usize]) -> Result<()> {
    let n = role.len();
    let mut uf = UnionFind::new(n);
    let mut anchored = vec![false; n];
    for &v in interior {
        for (j, val) in k.row(v) {
            if j == v || val == 0.0 {
                continue;
            }
            if role[j] == 0 {
                uf.union(v, j);
            } else {
                anchored[v] = true;
            }
        }
    }
    let mut root_ok = vec![false; n];
    for &v in interior {
        if anchored[v] {
            let r = uf.find(v);
            root_ok[r] = true;
        }
    }
    for &v in interior {
        let r = uf.find(v);
        if !root_ok[r] {
            return Err(Error::Factorization(format!(
                "vertex {v} lies in a region with no Steklov or Dirichlet boundary"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_stiffness;
    use crate::geometry::make_disk_mesh;

    #[test]
    fn pure_steklov_kills_constants() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let (s, d) = m.problem_vertex_sets();
        let l = dtn_matrix(&k, &s, &d).unwrap();
        for i in 0..l.dim() {
            let row: f64 = (0..l.dim()).map(|j| l.matrix[(i, j)]).sum();
            assert!(row.abs() < 1e-10, "{row}");
        }
        assert!(l.relative_asymmetry() < 1e-10);
    }

    #[test]
    fn no_interior_gives_k_ss() {
        let k = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let l = dtn_matrix(&k, &[0, 1], &[]).unwrap();
        assert_eq!(l.matrix, k.to_dense());
        assert!(l.extender.interior.is_empty());
    }

    #[test]
    fn floating_component_rejected() {
        // vertices 2-3 only couple to each other
        let k = CsrMatrix::from_triplets(
            4,
            4,
            vec![
                (0, 0, 1.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (2, 3, -1.0),
                (3, 2, -1.0),
                (3, 3, 1.0),
            ],
        );
        assert!(matches!(dtn_matrix(&k, &[0, 1], &[]), Err(Error::Factorization(_))));
        assert!(matches!(dtn_matrix(&k, &[0, 1], &[1]), Err(Error::Validation(_))));
    }
}
