//! Plain-text mesh format.
//!
//! ```text
//! steklov-mesh v1
//! period <L>                 (optional; x-periodic meshes only)
//! vertices <N>
//! <x> <y>                    (N lines)
//! triangles <M>
//! <a> <b> <c>                (M lines, counterclockwise, 0-based)
//! boundary_edges <K>
//! <v0> <v1> <tag> <density>  (K lines; tag is steklov | neumann | dirichlet)
//! weights <M>
//! <w>                        (M lines)
//! ```
//!
//! Reals are written with 17 significant digits, so a write/read cycle is
//! bit-exact. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{BoundaryEdge, BoundaryTag, Mesh2D};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "steklov-mesh v1";

pub fn mesh_to_string(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    writeln!(s, "{MESH_HEADER}").unwrap();
    if let Some(l) = mesh.period() {
        writeln!(s, "period {l:.16e}").unwrap();
    }
    writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
    }
    writeln!(s, "triangles {}", mesh.n_triangles()).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "boundary_edges {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        writeln!(s, "{} {} {} {:.16e}", e.vertices[0], e.vertices[1], e.tag, e.density).unwrap();
    }
    writeln!(s, "weights {}", mesh.n_triangles()).unwrap();
    for w in mesh.tri_weights() {
        writeln!(s, "{w:.16e}").unwrap();
    }
    s
}

pub fn write_mesh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines { inner: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => {
                Err(Error::Parse { line: self.last + 1, message: format!("unexpected end of input, expected {what}") })
            }
        }
    }

    fn peek_starts_with(&mut self, prefix: &str) -> bool {
        self.inner.peek().is_some_and(|(_, l)| l.starts_with(prefix))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (n, l) = self.next(name)?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(Error::Parse { line: n, message: format!("expected section `{name}`") });
        }
        let count = field::<usize>(n, it.next(), "count")?;
        if it.next().is_some() {
            return Err(Error::Parse { line: n, message: "trailing tokens".into() });
        }
        Ok(count)
    }
}

fn field<T: FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, message: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse {what} from `{tok}`") })
}

fn row(line: usize, text: &str, arity: usize) -> Result<Vec<&str>> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != arity {
        return Err(Error::Parse { line, message: format!("expected {arity} fields, found {}", toks.len()) });
    }
    Ok(toks)
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next("header")?;
    if header != MESH_HEADER {
        return Err(Error::Parse { line: n, message: format!("expected header `{MESH_HEADER}`") });
    }
    let mut period = None;
    if lines.peek_starts_with("period") {
        let (n, l) = lines.next("period")?;
        let t = row(n, l, 2)?;
        period = Some(field::<f64>(n, Some(t[1]), "period")?);
    }

    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next("vertex")?;
        let t = row(n, l, 2)?;
        vertices.push([field(n, Some(t[0]), "x")?, field(n, Some(t[1]), "y")?]);
    }

    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = lines.next("triangle")?;
        let t = row(n, l, 3)?;
        triangles.push([
            field(n, Some(t[0]), "index")?,
            field(n, Some(t[1]), "index")?,
            field(n, Some(t[2]), "index")?,
        ]);
    }

    let nb = lines.section("boundary_edges")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, l) = lines.next("boundary edge")?;
        let t = row(n, l, 4)?;
        let tag = BoundaryTag::parse(t[2])
            .ok_or_else(|| Error::Parse { line: n, message: format!("unknown tag `{}`", t[2]) })?;
        boundary.push(BoundaryEdge {
            vertices: [field(n, Some(t[0]), "index")?, field(n, Some(t[1]), "index")?],
            tag,
            density: field(n, Some(t[3]), "density")?,
        });
    }

    let nw = lines.section("weights")?;
    if nw != nt {
        return Err(Error::Parse { line: lines.last, message: format!("{nw} weights for {nt} triangles") });
    }
    let mut weights = Vec::with_capacity(nw);
    for _ in 0..nw {
        let (n, l) = lines.next("weight")?;
        let t = row(n, l, 1)?;
        weights.push(field(n, Some(t[0]), "weight")?);
    }
    if let Ok((n, _)) = lines.next("end") {
        return Err(Error::Parse { line: n, message: "unexpected trailing content".into() });
    }
    Mesh2D::new(vertices, triangles, boundary, weights, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk_mesh, make_strip_mesh};
    use proptest::prelude::*;

    #[test]
    fn round_trip_exact() {
        let m = make_disk_mesh(1.3, 0.2).unwrap();
        let w: Vec<f64> = (0..m.n_triangles()).map(|t| 1.0 + (t as f64).sqrt() / 7.0).collect();
        let m = m.with_tri_weights(w).unwrap();
        let back = parse_mesh(&mesh_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn periodic_round_trip() {
        let m = make_strip_mesh(2.0, 0.5, 0.2, true).unwrap();
        let back = parse_mesh(&mesh_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_round_trip() {
        let m = make_disk_mesh(1.0, 0.3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.msh");
        write_mesh(&m, &p).unwrap();
        assert_eq!(read_mesh(&p).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let m = make_disk_mesh(1.0, 0.5).unwrap();
        let text = mesh_to_string(&m).replacen(" steklov ", " robin ", 1);
        match parse_mesh(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_mesh("steklov-mesh v2\n"), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn reals_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format!("{x:.16e}");
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
