//! Weighted problem families that degenerate to simpler spectral problems.
//!
//! The energy and boundary exponents take a virtual dimension `n >= 3`: on a
//! planar mesh the Dirichlet energy of `h^2 g` carries the weight `h^(n-2)`
//! and the boundary measure `h^(n-1)`, as for an `n`-manifold. In 2D proper
//! both collapse to conformal invariance, so this models the mechanism of
//! the higher-dimensional statements rather than discretizing one.

mod collar;
mod density;
mod singular;
mod sweeps;

pub use collar::{
    circle_eigenvalues, collar_convergence_run, cylinder_formula, cylinder_formula_run, MIN_ELEMENTS_ACROSS,
};
pub use density::{density_family_at, edge_angles, DensityFamily, TrigDensity};
pub use singular::{singular_family_at, submesh, upper_half, SingularWeightFamily};
pub use sweeps::{density_sweep, subdomain_sweep, DensitySweep, SubdomainSweep};

/// Whether the last `tail` entries are non-increasing, allowing an absolute
/// slack of `1e-10` for values at round-off level.
pub fn eventually_nonincreasing(xs: &[f64], tail: usize) -> bool {
    let n = xs.len();
    let tail = tail.min(n);
    xs[n - tail..].windows(2).all(|w| w[1] <= w[0] + 1e-10)
}
