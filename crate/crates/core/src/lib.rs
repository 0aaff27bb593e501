//! Numerical experiments for weighted and mixed Steklov eigenvalue problems on
//! planar triangulated domains.

// `!(x > 0.0)` is the NaN-rejecting form of a positivity guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deformations;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod graphs;
pub mod harness;
pub mod nodal;
pub mod report;
pub mod thickening;
mod unionfind;

pub use error::{Error, Result};
pub use geometry::{BoundaryEdge, BoundaryTag, Mesh2D, Point, SurfaceTopology};
pub use harness::{run, run_and_write, Experiment, ExperimentConfig, ExperimentKind, RunOutput};
pub use report::{Check, ExperimentReport, Relation, Table};
pub use unionfind::UnionFind;
