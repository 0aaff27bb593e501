use std::f64::consts::TAU;

use super::{BoundaryTag, Mesh2D, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Selects boundary edges by the position of their midpoint.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arc {
    /// Polar angle about the origin in `[start, end)`. `start` is taken
    /// modulo 2pi and `end - start` must lie in `(0, 2pi]`; the interval may wrap.
    Angle { start: f64, end: f64 },
    /// Coordinate along `axis` in the closed interval `[lo, hi]`.
    Band { axis: Axis, lo: f64, hi: f64 },
}

impl Arc {
    fn check(&self) -> Result<()> {
        match *self {
            Arc::Angle { start, end } => {
                let span = end - start;
                if !(span > 0.0 && span <= TAU + 1e-12) {
                    return Err(Error::Tagging(format!(
                        "angular interval [{start}, {end}) must have length in (0, 2pi]"
                    )));
                }
            }
            Arc::Band { lo, hi, .. } => {
                if !(hi >= lo) {
                    return Err(Error::Tagging(format!("empty band [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Arc::Angle { start, end } => {
                let s = start.rem_euclid(TAU);
                let e = s + (end - start);
                let theta = p[1].atan2(p[0]).rem_euclid(TAU);
                (theta >= s && theta < e) || (theta + TAU >= s && theta + TAU < e)
            }
            Arc::Band { axis, lo, hi } => {
                let c = match axis {
                    Axis::X => p[0],
                    Axis::Y => p[1],
                };
                c >= lo && c <= hi
            }
        }
    }

    /// Whether two intervals of the same kind share a set of positive measure.
    fn overlaps(&self, other: &Arc) -> bool {
        match (*self, *other) {
            (Arc::Angle { start: s1, end: e1 }, Arc::Angle { start: s2, end: e2 }) => {
                let a = s1.rem_euclid(TAU);
                let b = s2.rem_euclid(TAU);
                let (la, lb) = (e1 - s1, e2 - s2);
                [-TAU, 0.0, TAU].iter().any(|&shift| a.max(b + shift) < (a + la).min(b + shift + lb) - 1e-12)
            }
            (Arc::Band { axis: x1, lo: l1, hi: h1 }, Arc::Band { axis: x2, lo: l2, hi: h2 }) if x1 == x2 => {
                l1.max(l2) < h1.min(h2)
            }
            _ => false,
        }
    }
}

/// Re-tags boundary edges whose midpoint falls in one of the arcs.
///
/// Edges outside every arc keep their tag. Densities are preserved.
pub fn tag_boundary(mesh: &Mesh2D, arcs: &[(Arc, BoundaryTag)]) -> Result<Mesh2D> {
    for (i, (a, _)) in arcs.iter().enumerate() {
        a.check()?;
        for (b, _) in &arcs[..i] {
            if a.overlaps(b) {
                return Err(Error::Tagging(format!("intervals {a:?} and {b:?} overlap")));
            }
        }
    }
    let mut edges = mesh.boundary_edges().to_vec();
    for e in &mut edges {
        let m = mesh.edge_midpoint(e.vertices[0], e.vertices[1]);
        let mut hits = arcs.iter().filter(|(a, _)| a.contains(m));
        if let Some((_, tag)) = hits.next() {
            if hits.next().is_some() {
                return Err(Error::Tagging(format!("edge {:?} is claimed by more than one interval", e.vertices)));
            }
            e.tag = *tag;
        }
    }
    if !edges.iter().any(|e| e.tag == BoundaryTag::Steklov) {
        return Err(Error::Validation("no Steklov boundary left after tagging".into()));
    }
    mesh.with_boundary_edges(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk_mesh, make_strip_mesh};
    use std::f64::consts::PI;

    #[test]
    fn half_disk_tagging() {
        let m = make_disk_mesh(1.0, 0.05).unwrap();
        let t = tag_boundary(
            &m,
            &[
                (Arc::Angle { start: 0.0, end: PI }, BoundaryTag::Steklov),
                (Arc::Angle { start: PI, end: TAU }, BoundaryTag::Neumann),
            ],
        )
        .unwrap();
        let s = t.boundary_length(BoundaryTag::Steklov);
        assert!((s - PI).abs() < 0.01 * PI, "{s}");
    }

    #[test]
    fn full_circle_is_identity() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let t = tag_boundary(&m, &[(Arc::Angle { start: 0.0, end: TAU }, BoundaryTag::Steklov)]).unwrap();
        assert_eq!(t, m);
    }

    #[test]
    fn strip_both_sides_steklov() {
        let l = 3.0;
        let m = make_strip_mesh(l, 0.5, 0.1, true).unwrap();
        let t = tag_boundary(&m, &[(Arc::Band { axis: Axis::Y, lo: 0.4, hi: 0.6 }, BoundaryTag::Steklov)]).unwrap();
        assert!((t.boundary_length(BoundaryTag::Steklov) - 2.0 * l).abs() < 1e-9);
    }

    #[test]
    fn wrapping_interval() {
        let m = make_disk_mesh(1.0, 0.05).unwrap();
        let t = tag_boundary(&m, &[(Arc::Angle { start: 1.5 * PI, end: 2.5 * PI }, BoundaryTag::Neumann)]).unwrap();
        assert!((t.boundary_length(BoundaryTag::Neumann) - PI).abs() < 0.01 * PI);
    }

    #[test]
    fn overlap_and_empty_steklov_rejected() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let r = tag_boundary(
            &m,
            &[
                (Arc::Angle { start: 0.0, end: 2.0 }, BoundaryTag::Steklov),
                (Arc::Angle { start: 1.0, end: 3.0 }, BoundaryTag::Neumann),
            ],
        );
        assert!(matches!(r, Err(Error::Tagging(_))));
        let r = tag_boundary(&m, &[(Arc::Angle { start: 0.0, end: TAU }, BoundaryTag::Neumann)]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
