use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{NodalDecomposition, NodalPoint};
use crate::geometry::{edge_key, Mesh2D};
use crate::unionfind::UnionFind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalGraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    /// `edges - nodes + components`.
    pub cycle_rank: usize,
    /// Nodal points on each boundary component, by component index.
    pub boundary_endpoints: Vec<usize>,
    pub endpoints_even: bool,
    /// Nodes of degree at least 3 (junctions of nodal lines).
    pub junctions: usize,
}

/// Shape of the nodal polyline graph.
pub fn nodal_graph_stats(dec: &NodalDecomposition, mesh: &Mesh2D) -> NodalGraphStats {
    let mut ids: BTreeMap<NodalPoint, usize> = BTreeMap::new();
    for s in &dec.segments {
        for p in s {
            let next = ids.len();
            ids.entry(*p).or_insert(next);
        }
    }
    let mut uf = UnionFind::new(ids.len());
    let mut degree = vec![0usize; ids.len()];
    for s in &dec.segments {
        let (a, b) = (ids[&s[0]], ids[&s[1]]);
        uf.union(a, b);
        degree[a] += 1;
        degree[b] += 1;
    }
    let roots: HashSet<usize> = (0..ids.len()).map(|i| uf.find(i)).collect();
    let components = roots.len();

    let boundary_edges: HashMap<(usize, usize), usize> =
        mesh.boundary_edges().iter().map(|e| edge_key(e.vertices[0], e.vertices[1])).zip(0..).collect();
    let vertex_comp = mesh.boundary_component_of_vertex();
    let edge_comp: Vec<usize> = {
        let mut out = vec![0; mesh.boundary_edges().len()];
        for (c, edges) in mesh.boundary_components().iter().enumerate() {
            for &e in edges {
                out[e] = c;
            }
        }
        out
    };
    let mut boundary_endpoints = vec![0; mesh.boundary_components().len()];
    for p in ids.keys() {
        let comp = match *p {
            NodalPoint::Vertex(v) => vertex_comp[v],
            NodalPoint::Edge(a, b) => boundary_edges.get(&(a, b)).map(|&e| edge_comp[e]),
        };
        if let Some(c) = comp {
            boundary_endpoints[c] += 1;
        }
    }
    let edges = dec.segments.len();
    NodalGraphStats {
        nodes: ids.len(),
        edges,
        components,
        cycle_rank: edges + components - ids.len(),
        endpoints_even: boundary_endpoints.iter().all(|n| n % 2 == 0),
        boundary_endpoints,
        junctions: degree.iter().filter(|&&d| d >= 3).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::decompose_nodal;
    use super::*;
    use crate::geometry::{make_annulus_mesh, make_disk_mesh};

    fn stats(m: &Mesh2D, f: impl Fn(f64, f64) -> f64) -> NodalGraphStats {
        let v: Vec<f64> = m.vertices().iter().map(|p| f(p[0], p[1])).collect();
        nodal_graph_stats(&decompose_nodal(m, &v, 1e-7).unwrap(), m)
    }

    #[test]
    fn diameter_is_one_arc() {
        let s = stats(&make_disk_mesh(1.0, 0.1).unwrap(), |x, _| x);
        assert_eq!((s.cycle_rank, s.components), (0, 1));
        assert_eq!(s.boundary_endpoints, vec![2]);
        assert!(s.endpoints_even);
    }

    #[test]
    fn cross_is_a_tree() {
        let s = stats(&make_disk_mesh(1.0, 0.07).unwrap(), |x, y| x * x - y * y);
        assert_eq!(s.cycle_rank, 0);
        assert_eq!(s.boundary_endpoints, vec![4]);
    }

    #[test]
    fn loop_has_a_cycle() {
        let s = stats(&make_disk_mesh(1.0, 0.08).unwrap(), |x, y| x * x + y * y - 0.25);
        assert_eq!(s.cycle_rank, 1);
        assert_eq!(s.boundary_endpoints, vec![0]);
    }

    #[test]
    fn annulus_counts_per_component() {
        let s = stats(&make_annulus_mesh(0.5, 1.0, 0.08).unwrap(), |x, _| x + 1e-3);
        assert_eq!(s.boundary_endpoints.len(), 2);
        assert_eq!(s.boundary_endpoints.iter().sum::<usize>(), 4);
        assert!(s.endpoints_even);
    }
}
