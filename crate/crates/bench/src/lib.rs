//! Fixtures shared by the benchmarks.

use steklov_core::fem::SteklovSolver;
use steklov_core::geometry::make_disk_mesh;
use steklov_core::graphs::MetricGraph;
use steklov_core::thickening::{embed_graph, EmbeddingStyle, ThickeningSpec};
use steklov_core::Mesh2D;

pub fn disk(h: f64) -> Mesh2D {
    make_disk_mesh(1.0, h).expect("disk mesh")
}

/// Sixth disk eigenfunction, a field with several nodal domains.
pub fn disk_eigenfunction(h: f64) -> (Mesh2D, Vec<f64>) {
    let m = disk(h);
    let r = SteklovSolver::new(&m).and_then(|s| s.spectrum(7, None)).expect("spectrum");
    (m, r.extensions[6].clone())
}

pub fn thickened_triangle(eps: f64) -> ThickeningSpec {
    let g = MetricGraph::complete(3, vec![1.0; 3]).expect("graph");
    let e = embed_graph(&g, EmbeddingStyle::ConvexBoundary).expect("embedding");
    ThickeningSpec::new(g, e, eps, 2.0, None).expect("spec")
}
