//! Thin planar domains built around an embedded metric graph: a half-disk of
//! radius `c eps` at each vertex, its diameter on the outer boundary and
//! carrying the Steklov condition, and a strip of half-width `eps` along each
//! edge, Neumann elsewhere.
//!
//! Strips start inside the half-disks and leave them through the arc. The
//! crossing is transversal whenever every edge meets the diameter at an angle
//! `alpha` with `cot(alpha) < sqrt(c^2 - 1)`, which is what `ThickeningSpec`
//! checks; this replaces a bent cylinder end by a junction whose distortion
//! vanishes with `eps`.

mod build;
mod embed;
mod limit;

pub use build::{build_thickened_mesh, expected_area, ThickeningSpec};
pub use embed::{embed_graph, EdgeCurve, Embedding, EmbeddingStyle};
pub use limit::{graph_limit_run, verify_graph_limit, GraphLimit};

/// Dimension of the domain.
pub const DIM: i32 = 2;

/// Volume of the unit ball of dimension `DIM - 1`.
pub const OMEGA: f64 = 2.0;
