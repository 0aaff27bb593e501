//! Domain counts of fixed analytic fields under uniform refinement.

use steklov_core::geometry::{make_annulus_mesh, make_disk_mesh, refine};
use steklov_core::nodal::{decompose_nodal, nodal_graph_stats, DEFAULT_ZERO_TOL};
use steklov_core::Mesh2D;

fn counts(mesh: &Mesh2D, f: impl Fn(f64, f64) -> f64, levels: usize) -> Vec<usize> {
    let mut m = mesh.clone();
    let mut out = Vec::new();
    for level in 0..=levels {
        if level > 0 {
            m = refine(&m).unwrap();
        }
        let field: Vec<f64> = m.vertices().iter().map(|p| f(p[0], p[1])).collect();
        out.push(decompose_nodal(&m, &field, DEFAULT_ZERO_TOL).unwrap().n_domains);
    }
    out
}

fn assert_stable(c: &[usize], expected: usize) {
    assert!(c.windows(2).all(|w| w[1] >= w[0]), "count decreased: {c:?}");
    let n = c.len();
    assert_eq!(c[n - 1], c[n - 2], "not stable over the last two refinements: {c:?}");
    assert_eq!(c[n - 1], expected, "{c:?} expected {expected}");
}

#[test]
fn harmonic_polynomials_on_the_disk() {
    let mesh = make_disk_mesh(1.0, 0.12).unwrap();
    for m in 1..=3i32 {
        for phase in [0.0, 0.3, 1.1] {
            // Re(e^{-i phase} z^m) has 2m sectors
            let f = |x: f64, y: f64| {
                let (r, t) = (x.hypot(y), y.atan2(x));
                r.powi(m) * (m as f64 * t - phase).cos()
            };
            assert_stable(&counts(&mesh, f, 2), 2 * m as usize);
        }
    }
}

#[test]
fn high_order_saddle_at_a_vertex_is_bounded_by_valence() {
    // Re z^4 has 8 sectors meeting at the origin, a vertex of valence 6.
    // Midpoint refinement keeps the angles there, so the piecewise linear
    // interpolant merges sectors at every level; the count is stable and
    // never exceeds the analytic one.
    let mesh = make_disk_mesh(1.0, 0.12).unwrap();
    let c = counts(&mesh, |x, y| x.powi(4) - 6.0 * x * x * y * y + y.powi(4), 2);
    assert!(c.windows(2).all(|w| w[1] >= w[0]), "{c:?}");
    assert_eq!(c[1], c[2], "{c:?}");
    assert!(c[2] < 8, "{c:?}");
}

#[test]
fn closed_level_curve_and_stripes() {
    let mesh = make_disk_mesh(1.0, 0.12).unwrap();
    assert_stable(&counts(&mesh, |x, y| x * x + y * y - 0.3, 2), 2);
    // sin(5x) vanishes on x = 0 and x = +-pi/5 inside the disk
    assert_stable(&counts(&mesh, |x, _| (5.0 * x).sin(), 2), 4);
}

#[test]
fn annulus_radial_and_angular() {
    let mesh = make_annulus_mesh(0.5, 1.0, 0.1).unwrap();
    assert_stable(&counts(&mesh, |x, y| (x * x + y * y).sqrt().ln() - 0.75f64.ln(), 2), 2);
    assert_stable(&counts(&mesh, |x, y| x * y, 2), 4);
}

#[test]
fn nodal_lines_of_harmonic_fields_are_trees() {
    let mut mesh = make_disk_mesh(1.0, 0.12).unwrap();
    for _ in 0..2 {
        mesh = refine(&mesh).unwrap();
        for f in [|x: f64, y: f64| x * x - y * y + 0.2 * x, |x: f64, y: f64| x * x * x - 3.0 * x * y * y + y] {
            let field: Vec<f64> = mesh.vertices().iter().map(|p| f(p[0], p[1])).collect();
            let dec = decompose_nodal(&mesh, &field, DEFAULT_ZERO_TOL).unwrap();
            let s = nodal_graph_stats(&dec, &mesh);
            assert_eq!(s.cycle_rank, 0, "{s:?}");
            assert!(s.endpoints_even, "{s:?}");
        }
    }
}
