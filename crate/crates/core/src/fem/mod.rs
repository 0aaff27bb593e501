//! P1 finite elements for Steklov-type eigenproblems.
//!
//! The Dirichlet energy is reduced to the Steklov vertices by a Schur
//! complement (the discrete Dirichlet-to-Neumann map) and the resulting
//! dense generalized eigenproblem is solved against the consistent
//! boundary mass.

mod assembly;
mod dtn;
mod sparse;
mod spectrum;

pub use assembly::{assemble_boundary_mass, assemble_stiffness, local_stiffness, BoundaryMass, StiffnessMatrix};
pub use dtn::{dtn_matrix, DtnMatrix, HarmonicExtender};
pub use sparse::CsrMatrix;
pub use spectrum::{
    default_cluster_tol, generalized_eigen, harmonic_extension, multiplicity_clusters, rayleigh_quotient,
    steklov_spectrum, ProblemDescriptor, SpectralResult, SteklovSolver,
};
