use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graphs::MetricGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingStyle {
    ConvexBoundary,
    Path,
    Star,
}

impl std::str::FromStr for EmbeddingStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convex-boundary" => Ok(EmbeddingStyle::ConvexBoundary),
            "path" => Ok(EmbeddingStyle::Path),
            "star" => Ok(EmbeddingStyle::Star),
            _ => Err(Error::Parameter(format!("unknown embedding style `{s}`"))),
        }
    }
}

/// Planar realization of one edge, oriented from `edges[i][0]` to `edges[i][1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeCurve {
    Segment {
        from: Point,
        to: Point,
    },
    /// Points `center + radius (cos t, sin t)` for `t` from `start` to
    /// `start + sweep` (signed).
    Arc {
        center: Point,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl EdgeCurve {
    pub fn length(&self) -> f64 {
        match *self {
            EdgeCurve::Segment { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            EdgeCurve::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at arc length `s`.
    pub fn point(&self, s: f64) -> Point {
        match *self {
            EdgeCurve::Segment { from, to } => {
                let f = s / self.length();
                [from[0] + f * (to[0] - from[0]), from[1] + f * (to[1] - from[1])]
            }
            EdgeCurve::Arc { center, radius, start, sweep } => {
                let t = start + sweep.signum() * s / radius;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
        }
    }

    /// Unit tangent at arc length `s`, in the direction of travel.
    pub fn tangent(&self, s: f64) -> Point {
        match *self {
            EdgeCurve::Segment { from, to } => {
                let l = self.length();
                [(to[0] - from[0]) / l, (to[1] - from[1]) / l]
            }
            EdgeCurve::Arc { radius, start, sweep, .. } => {
                let t = start + sweep.signum() * s / radius;
                let g = sweep.signum();
                [-g * t.sin(), g * t.cos()]
            }
        }
    }

    /// Samples with spacing at most `h` between arc lengths `a` and `b`.
    pub fn sample(&self, a: f64, b: f64, h: f64) -> Vec<(Point, Point)> {
        let n = match self {
            EdgeCurve::Segment { .. } => 1,
            EdgeCurve::Arc { .. } => ((b - a) / h).ceil().max(1.0) as usize,
        };
        (0..=n)
            .map(|k| {
                let s = a + (b - a) * k as f64 / n as f64;
                (self.point(s), self.tangent(s))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub style: EmbeddingStyle,
    pub positions: Vec<Point>,
    /// Unit outward normal of the outer boundary at each vertex.
    pub outward: Vec<Point>,
    pub curves: Vec<EdgeCurve>,
}

/// Lays out `g` with every vertex on the outer face.
///
/// `ConvexBoundary` puts the vertices on a regular polygon in an order for
/// which no two chords cross, scales it until the tightest edge is straight,
/// and bends the other edges into circular arcs of the prescribed length.
/// `Path` is collinear and `Star` fans the leaves over the upper half-plane.
pub fn embed_graph(g: &MetricGraph, style: EmbeddingStyle) -> Result<Embedding> {
    let emb = match style {
        EmbeddingStyle::ConvexBoundary => convex(g)?,
        EmbeddingStyle::Path => path(g)?,
        EmbeddingStyle::Star => star(g)?,
    };
    for (i, (c, l)) in emb.curves.iter().zip(g.lengths()).enumerate() {
        if (c.length() - l).abs() > 1e-9 * l.max(1.0) {
            return Err(Error::Embedding(format!("edge {i} realized with length {} instead of {l}", c.length())));
        }
    }
    check_planar(g, &emb)?;
    Ok(emb)
}

fn convex(g: &MetricGraph) -> Result<Embedding> {
    let n = g.n_vertices();
    let order = outerplanar_order(g).ok_or_else(|| {
        Error::Embedding(format!(
            "no cyclic order of the {n} vertices keeps all edges as non-crossing chords; \
             the graph is not outerplanar (K_4 and K_2,3 are the obstructions) and cannot be \
             thickened with every vertex on the outer boundary"
        ))
    })?;
    let mut unit = vec![[0.0; 2]; n];
    for (slot, &v) in order.iter().enumerate() {
        let t = PI / 2.0 + 2.0 * PI * slot as f64 / n as f64;
        unit[v] = [t.cos(), t.sin()];
    }
    let chord = |[a, b]: [usize; 2]| (unit[b][0] - unit[a][0]).hypot(unit[b][1] - unit[a][1]);
    let scale = g.edges().iter().zip(g.lengths()).map(|(&e, l)| l / chord(e)).fold(f64::INFINITY, f64::min);
    let positions: Vec<Point> = unit.iter().map(|p| [scale * p[0], scale * p[1]]).collect();
    let outward = if n == 2 {
        // the two ends of a single edge face away from each other
        vec![[0.0, 1.0], [0.0, -1.0]]
    } else {
        unit.clone()
    };
    let curves = g
        .edges()
        .iter()
        .zip(g.lengths())
        .map(|(&[a, b], &l)| {
            let (p, q) = (positions[a], positions[b]);
            // bulge away from the layout center
            let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            let away = if mid[0].hypot(mid[1]) > 1e-12 * scale { mid } else { [-(q[1] - p[1]), q[0] - p[0]] };
            curve_between(p, q, l, away)
        })
        .collect();
    Ok(Embedding { style: EmbeddingStyle::ConvexBoundary, positions, outward, curves })
}

/// Straight segment when `|q - p| = l`, otherwise the circular arc of length
/// `l` through `p` and `q` bulging toward `side`.
fn curve_between(p: Point, q: Point, l: f64, side: Point) -> EdgeCurve {
    let d = [q[0] - p[0], q[1] - p[1]];
    let c = d[0].hypot(d[1]);
    if l - c <= 1e-12 * l {
        return EdgeCurve::Segment { from: p, to: q };
    }
    // solve sin(u) / u = c / l for the half-angle u in (0, pi)
    let target = c / l;
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..200 {
        let u = 0.5 * (lo + hi);
        if u.sin() / u > target {
            lo = u;
        } else {
            hi = u;
        }
    }
    let u = 0.5 * (lo + hi);
    let radius = l / (2.0 * u);
    let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
    let mut nrm = [-d[1] / c, d[0] / c];
    if nrm[0] * side[0] + nrm[1] * side[1] < 0.0 {
        nrm = [-nrm[0], -nrm[1]];
    }
    // the bulge points along nrm, so the center sits on the opposite side
    // when the arc is shorter than a half circle
    let off = radius * u.cos();
    let center = [mid[0] - off * nrm[0], mid[1] - off * nrm[1]];
    let start = (p[1] - center[1]).atan2(p[0] - center[0]);
    let end = (q[1] - center[1]).atan2(q[0] - center[0]);
    let apex = [center[0] + radius * nrm[0], center[1] + radius * nrm[1]];
    let apex_t = (apex[1] - center[1]).atan2(apex[0] - center[0]);
    // pick the direction of travel that passes through the apex
    let ccw = |from: f64, to: f64| (to - from).rem_euclid(2.0 * PI);
    let sweep = if ccw(start, apex_t) < ccw(start, end) { ccw(start, end) } else { -ccw(end, start) };
    EdgeCurve::Arc { center, radius, start, sweep: sweep.signum() * 2.0 * u }
}

fn outerplanar_order(g: &MetricGraph) -> Option<Vec<usize>> {
    let n = g.n_vertices();
    if n > 9 {
        return None;
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut found = None;
    permute(&mut rest, 0, &mut |perm| {
        let mut order = vec![0];
        order.extend_from_slice(perm);
        let mut slot = vec![0; n];
        for (s, &v) in order.iter().enumerate() {
            slot[v] = s;
        }
        let chords: Vec<(usize, usize)> =
            g.edges().iter().map(|&[a, b]| (slot[a].min(slot[b]), slot[a].max(slot[b]))).collect();
        let crossing = chords.iter().enumerate().any(|(i, &(a, b))| {
            chords[i + 1..].iter().any(|&(c, d)| (a < c && c < b && b < d) || (c < a && a < d && d < b))
        });
        if crossing {
            false
        } else {
            found = Some(order);
            true
        }
    });
    found
}

/// Calls `f` on permutations of `xs[k..]` until it returns true.
fn permute(xs: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if k == xs.len() {
        return f(xs);
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        if permute(xs, k + 1, f) {
            return true;
        }
        xs.swap(k, i);
    }
    false
}

fn path(g: &MetricGraph) -> Result<Embedding> {
    let n = g.n_vertices();
    if g.edges().len() != n - 1 || (0..n).any(|v| g.degree(v) > 2) {
        return Err(Error::Embedding("path style needs a path graph".into()));
    }
    let start = (0..n).find(|&v| g.degree(v) == 1).expect("a path has an end");
    let mut positions = vec![[0.0; 2]; n];
    let mut visited = vec![false; n];
    let (mut v, mut x) = (start, 0.0);
    visited[v] = true;
    loop {
        let next = g.edges().iter().zip(g.lengths()).find_map(|(&[a, b], &l)| {
            if a == v && !visited[b] {
                Some((b, l))
            } else if b == v && !visited[a] {
                Some((a, l))
            } else {
                None
            }
        });
        let Some((w, l)) = next else { break };
        x += l;
        positions[w] = [x, 0.0];
        visited[w] = true;
        v = w;
    }
    let outward = (0..n)
        .map(|v| match g.degree(v) {
            1 if positions[v][0] == 0.0 => [-1.0, 0.0],
            1 => [1.0, 0.0],
            // interior vertices sit on the lower side of the strip
            _ => [0.0, -1.0],
        })
        .collect();
    let curves = g.edges().iter().map(|&[a, b]| EdgeCurve::Segment { from: positions[a], to: positions[b] }).collect();
    Ok(Embedding { style: EmbeddingStyle::Path, positions, outward, curves })
}

fn star(g: &MetricGraph) -> Result<Embedding> {
    let n = g.n_vertices();
    let center = (0..n).max_by_key(|&v| g.degree(v)).expect("nonempty");
    if g.degree(center) != n - 1 || g.edges().len() != n - 1 {
        return Err(Error::Embedding("star style needs a star graph".into()));
    }
    let m = n - 1;
    let mut positions = vec![[0.0; 2]; n];
    let mut outward = vec![[0.0, -1.0]; n];
    let mut slot = 0;
    for (&[a, b], &l) in g.edges().iter().zip(g.lengths()) {
        let leaf = if a == center { b } else { a };
        slot += 1;
        let t = PI * slot as f64 / (m + 1) as f64;
        positions[leaf] = [l * t.cos(), l * t.sin()];
        outward[leaf] = [t.cos(), t.sin()];
    }
    let curves = g.edges().iter().map(|&[a, b]| EdgeCurve::Segment { from: positions[a], to: positions[b] }).collect();
    Ok(Embedding { style: EmbeddingStyle::Star, positions, outward, curves })
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let orient = |a: Point, b: Point, c: Point| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn check_planar(g: &MetricGraph, emb: &Embedding) -> Result<()> {
    let h = g.lengths().iter().fold(f64::INFINITY, |a, &b| a.min(b)) / 64.0;
    let polys: Vec<Vec<Point>> =
        emb.curves.iter().map(|c| c.sample(0.0, c.length(), h).into_iter().map(|(p, _)| p).collect()).collect();
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            // segments meeting at a shared vertex have a zero orientation there
            for a in polys[i].windows(2) {
                for b in polys[j].windows(2) {
                    if segments_cross(a[0], a[1], b[0], b[1]) {
                        return Err(Error::Embedding(format!("edges {i} and {j} cross")));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_is_equilateral() {
        let g = MetricGraph::complete(3, vec![1.0; 3]).unwrap();
        let e = embed_graph(&g, EmbeddingStyle::ConvexBoundary).unwrap();
        for c in &e.curves {
            assert!(matches!(c, EdgeCurve::Segment { .. }));
            assert!((c.length() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_is_collinear() {
        let g = MetricGraph::path(vec![1.0, 2.0]).unwrap();
        let e = embed_graph(&g, EmbeddingStyle::Path).unwrap();
        assert!(e.positions.iter().all(|p| p[1] == 0.0));
        let xs: Vec<f64> = e.positions.iter().map(|p| p[0]).collect();
        let span = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k4_rejected() {
        let g = MetricGraph::complete(4, vec![1.0; 6]).unwrap();
        let err = embed_graph(&g, EmbeddingStyle::ConvexBoundary).unwrap_err();
        assert!(matches!(err, Error::Embedding(ref m) if m.contains("outerplanar")));
    }

    #[test]
    fn unequal_lengths_become_arcs() {
        let g = MetricGraph::cycle(vec![1.0, 1.3, 1.0, 2.0]).unwrap();
        let e = embed_graph(&g, EmbeddingStyle::ConvexBoundary).unwrap();
        for (c, l) in e.curves.iter().zip(g.lengths()) {
            assert!((c.length() - l).abs() < 1e-9);
            let s = c.sample(0.0, c.length(), 0.01);
            let (first, last) = (s[0].0, s[s.len() - 1].0);
            let [a, b] = g.edges()[e.curves.iter().position(|x| x == c).unwrap()];
            assert!((first[0] - e.positions[a][0]).hypot(first[1] - e.positions[a][1]) < 1e-9);
            assert!((last[0] - e.positions[b][0]).hypot(last[1] - e.positions[b][1]) < 1e-9);
            // sampled length approaches the exact one
            let poly: f64 = s.windows(2).map(|w| (w[1].0[0] - w[0].0[0]).hypot(w[1].0[1] - w[0].0[1])).sum();
            assert!((poly - l).abs() < 1e-3 * l);
        }
        assert!(e.curves.iter().filter(|c| matches!(c, EdgeCurve::Arc { .. })).count() >= 2);
    }

    #[test]
    fn star_layout() {
        let g = MetricGraph::star(vec![1.0, 1.5, 2.0]).unwrap();
        let e = embed_graph(&g, EmbeddingStyle::Star).unwrap();
        assert_eq!(e.positions[0], [0.0, 0.0]);
        for (v, l) in [(1, 1.0), (2, 1.5), (3, 2.0)] {
            assert!((e.positions[v][0].hypot(e.positions[v][1]) - l).abs() < 1e-12);
        }
        assert!(embed_graph(&g, EmbeddingStyle::Path).is_err());
    }
}
