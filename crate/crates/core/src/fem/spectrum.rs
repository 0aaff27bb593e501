use std::ops::Range;

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};

use super::assembly::{assemble_boundary_mass, assemble_stiffness, StiffnessMatrix};
use super::dtn::{dtn_matrix, DtnMatrix, HarmonicExtender};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{io::mesh_to_string, BoundaryTag, Mesh2D};

/// Greedy grouping: `j` joins the cluster of `j - 1` iff
/// `sigma_j - sigma_{j-1} < rel_tol * max(1, sigma_j)`.
pub fn multiplicity_clusters(eigenvalues: &[f64], rel_tol: f64) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for (j, &s) in eigenvalues.iter().enumerate() {
        match out.last_mut() {
            Some(last) if s - eigenvalues[j - 1] < rel_tol * s.max(1.0) => last.end = j + 1,
            _ => out.push(j..j + 1),
        }
    }
    out
}

/// Default cluster tolerance: twice the squared relative mesh size, floored at 1e-3.
pub fn default_cluster_tol(mesh: &Mesh2D) -> f64 {
    let r = mesh.h_max() / mesh.diameter();
    (2.0 * r * r).max(1e-3)
}

/// What was solved: sizes, boundary measures and a hash of the full mesh
/// (coordinates, tags, densities, weights).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub steklov_length: f64,
    pub neumann_length: f64,
    pub dirichlet_length: f64,
    pub periodic: bool,
    pub hash: String,
}

impl ProblemDescriptor {
    pub fn of(mesh: &Mesh2D) -> Self {
        ProblemDescriptor {
            n_vertices: mesh.n_vertices(),
            n_triangles: mesh.n_triangles(),
            steklov_length: mesh.boundary_length(BoundaryTag::Steklov),
            neumann_length: mesh.boundary_length(BoundaryTag::Neumann),
            dirichlet_length: mesh.boundary_length(BoundaryTag::Dirichlet),
            periodic: mesh.period().is_some(),
            hash: crate::report::sha256_hex(mesh_to_string(mesh).as_bytes()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Global ids of the Steklov degrees of freedom.
    pub boundary_vertices: Vec<usize>,
    /// `boundary_vectors[k]` is B-normalized and indexed like `boundary_vertices`.
    pub boundary_vectors: Vec<Vec<f64>>,
    /// Harmonic extensions over all vertices.
    pub extensions: Vec<Vec<f64>>,
    pub clusters: Vec<Range<usize>>,
    pub cluster_rel_tol: f64,
    pub descriptor: ProblemDescriptor,
}

#[derive(Serialize)]
struct SpectralJson<'a> {
    format: &'static str,
    descriptor: &'a ProblemDescriptor,
    eigenvalues: Vec<String>,
    cluster_rel_tol: String,
    clusters: Vec<[usize; 2]>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Cluster containing index `k`.
    pub fn cluster_of(&self, k: usize) -> Range<usize> {
        self.clusters.iter().find(|c| c.contains(&k)).cloned().unwrap_or(k..k + 1)
    }

    /// Numerical multiplicity of `sigma_k`. A cluster reaching the end of the
    /// computed range may be truncated.
    pub fn multiplicity(&self, k: usize) -> usize {
        self.cluster_of(k).len()
    }

    /// Canonical JSON: eigenvalues as 17-significant-digit strings, half-open
    /// cluster ranges, descriptor with mesh hash.
    pub fn to_json(&self) -> serde_json::Value {
        let j = SpectralJson {
            format: "steklov-spectrum v1",
            descriptor: &self.descriptor,
            eigenvalues: self.eigenvalues.iter().map(|s| format!("{s:.16e}")).collect(),
            cluster_rel_tol: format!("{:.16e}", self.cluster_rel_tol),
            clusters: self.clusters.iter().map(|c| [c.start, c.end]).collect(),
        };
        serde_json::to_value(j).expect("spectral result serializes")
    }
}

/// Dense generalized symmetric-definite solve `A v = s B v`.
///
/// Returns ascending eigenvalues and B-orthonormal eigenvectors (columns).
pub fn generalized_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let llt = b
        .llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("boundary mass is not positive definite: {e:?}")))?;
    let l = llt.L().to_owned();
    let mut x = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("symmetric eigensolver failed: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let mut v = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), v.as_mut(), Par::Seq);
    Ok((vals, v))
}

/// Steklov problem on a fixed mesh geometry and weights. The DtN matrix is
/// computed once; spectra for different boundary densities only rebuild B.
#[derive(Clone, Debug)]
pub struct SteklovSolver {
    mesh: Mesh2D,
    stiffness: StiffnessMatrix,
    dtn: DtnMatrix,
}

impl SteklovSolver {
    pub fn new(mesh: &Mesh2D) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh)?;
        let (steklov, dirichlet) = mesh.problem_vertex_sets();
        if steklov.is_empty() {
            return Err(Error::EmptyBoundary("steklov"));
        }
        let dtn = dtn_matrix(&stiffness, &steklov, &dirichlet)?;
        Ok(SteklovSolver { mesh: mesh.clone(), stiffness, dtn })
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn stiffness(&self) -> &StiffnessMatrix {
        &self.stiffness
    }

    pub fn dtn(&self) -> &DtnMatrix {
        &self.dtn
    }

    /// Boundary mass on the Steklov degrees of freedom for the given
    /// per-boundary-edge densities.
    pub fn boundary_mass(&self, densities: &[f64]) -> Result<CsrMatrix> {
        let mesh = self.mesh.with_edge_densities(densities)?;
        assemble_boundary_mass(&mesh, BoundaryTag::Steklov)?.restrict(self.dtn.steklov())
    }

    pub fn spectrum(&self, n_eigs: usize, cluster_rel_tol: Option<f64>) -> Result<SpectralResult> {
        let d: Vec<f64> = self.mesh.boundary_edges().iter().map(|e| e.density).collect();
        self.spectrum_with_densities(&d, n_eigs, cluster_rel_tol)
    }

    pub fn spectrum_with_densities(
        &self,
        densities: &[f64],
        n_eigs: usize,
        cluster_rel_tol: Option<f64>,
    ) -> Result<SpectralResult> {
        let ns = self.dtn.dim();
        if n_eigs == 0 || n_eigs > ns {
            return Err(Error::Parameter(format!(
                "n_eigs must be in 1..={ns} (number of Steklov vertices), got {n_eigs}"
            )));
        }
        let tol = cluster_rel_tol.unwrap_or_else(|| default_cluster_tol(&self.mesh));
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("cluster tolerance must be positive, got {tol}")));
        }
        let mesh = self.mesh.with_edge_densities(densities)?;
        let b = assemble_boundary_mass(&mesh, BoundaryTag::Steklov)?.restrict(self.dtn.steklov())?.to_dense();
        let (vals, vecs) = generalized_eigen(&self.dtn.matrix, &b)?;
        let eigenvalues = vals[..n_eigs].to_vec();
        let sub = vecs.as_ref().subcols(0, n_eigs);
        let ext = self.dtn.extender.extend(sub);
        let boundary_vectors = (0..n_eigs).map(|k| (0..ns).map(|i| vecs[(i, k)]).collect()).collect();
        let extensions = (0..n_eigs).map(|k| (0..mesh.n_vertices()).map(|i| ext[(i, k)]).collect()).collect();
        Ok(SpectralResult {
            clusters: multiplicity_clusters(&eigenvalues, tol),
            eigenvalues,
            boundary_vertices: self.dtn.steklov().to_vec(),
            boundary_vectors,
            extensions,
            cluster_rel_tol: tol,
            descriptor: ProblemDescriptor::of(&mesh),
        })
    }
}

/// First `n_eigs` Steklov (or mixed) eigenpairs of the mesh.
///
/// `cluster_rel_tol = None` uses [`default_cluster_tol`].
pub fn steklov_spectrum(mesh: &Mesh2D, n_eigs: usize, cluster_rel_tol: Option<f64>) -> Result<SpectralResult> {
    SteklovSolver::new(mesh)?.spectrum(n_eigs, cluster_rel_tol)
}

/// `f^T K f / f_S^T B f_S` with B the Steklov boundary mass.
pub fn rayleigh_quotient(mesh: &Mesh2D, field: &[f64]) -> Result<f64> {
    if field.len() != mesh.n_vertices() {
        return Err(Error::Validation(format!("field has {} values for {} vertices", field.len(), mesh.n_vertices())));
    }
    let k = assemble_stiffness(mesh)?;
    let b = assemble_boundary_mass(mesh, BoundaryTag::Steklov)?;
    let trace: Vec<f64> = b.vertices.iter().map(|&v| field[v]).collect();
    let den = b.matrix.quad_form(&trace);
    let scale = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(den > 1e-300) || den <= 1e-24 * scale * scale * b.total() {
        return Err(Error::ZeroDenominator);
    }
    Ok(k.quad_form(field) / den)
}

/// Energy-minimizing field with the given values on the Steklov degrees of
/// freedom (ordered as in `Mesh2D::problem_vertex_sets`), zero on Dirichlet
/// vertices and natural conditions elsewhere.
pub fn harmonic_extension(mesh: &Mesh2D, boundary_values: &[f64]) -> Result<Vec<f64>> {
    let k = assemble_stiffness(mesh)?;
    let (steklov, dirichlet) = mesh.problem_vertex_sets();
    if boundary_values.len() != steklov.len() {
        return Err(Error::Validation(format!(
            "{} boundary values for {} Steklov vertices",
            boundary_values.len(),
            steklov.len()
        )));
    }
    let ext = HarmonicExtender::new(&k, &steklov, &dirichlet)?;
    let v = Mat::from_fn(steklov.len(), 1, |i, _| boundary_values[i]);
    let f = ext.extend(v.as_ref());
    Ok((0..mesh.n_vertices()).map(|i| f[(i, 0)]).collect())
}
