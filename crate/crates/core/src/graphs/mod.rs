//! Metric graphs, their combinatorial Laplacian, and spectrum prescription
//! on complete graphs by edge lengths.

mod io;
mod metric;
mod prescribe;
mod stability;

pub use io::{graph_to_string, parse_graph, read_graph, write_graph, GRAPH_HEADER};
pub use metric::{graph_laplacian_spectrum, GraphSpectrum, MetricGraph};
pub use prescribe::{eigenvalue_derivatives, prescribe_spectrum, PrescribeOptions};
pub use stability::{stability_probe, StabilityProbe, StabilityTrial};

/// `max_k |got_k - want_k| / |want_k|`.
pub fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs() / w.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}
