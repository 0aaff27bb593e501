//! Nodal sets of piecewise-linear fields and the structural bounds on
//! eigenfunctions: Courant's count, boundary contact, nodal-graph shape and
//! eigenvalue multiplicity.

mod checks;
mod decompose;
mod graph;
mod svg;

pub use checks::{
    courant_check, multiplicity_bound_check, CourantReport, CourantRow, MultiplicityReport, MultiplicityRow,
    ProblemKind,
};
pub use decompose::{boundary_touch_check, decompose_nodal, NodalDecomposition, NodalPoint, Piece};
pub use graph::{nodal_graph_stats, NodalGraphStats};
pub use svg::nodal_svg;

/// Vertices with `|f| <= DEFAULT_ZERO_TOL * max |f|` lie on the nodal set.
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;
