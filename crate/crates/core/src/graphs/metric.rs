use std::collections::HashSet;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::edge_key;
use crate::unionfind::UnionFind;

/// Finite simple connected graph with positive edge lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    n_vertices: usize,
    edges: Vec<[usize; 2]>,
    lengths: Vec<f64>,
}

impl MetricGraph {
    pub fn new(n_vertices: usize, edges: Vec<[usize; 2]>, lengths: Vec<f64>) -> Result<Self> {
        if n_vertices < 2 {
            return Err(Error::Validation("a metric graph needs at least two vertices".into()));
        }
        if edges.len() != lengths.len() {
            return Err(Error::Validation(format!("{} edges but {} lengths", edges.len(), lengths.len())));
        }
        let mut seen = HashSet::new();
        for (i, &[a, b]) in edges.iter().enumerate() {
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::Validation(format!("edge {i} references a missing vertex")));
            }
            if a == b {
                return Err(Error::Validation(format!("edge {i} is a loop")));
            }
            if !seen.insert(edge_key(a, b)) {
                return Err(Error::Validation(format!("edge {i} duplicates an earlier edge")));
            }
            if !(lengths[i] > 0.0 && lengths[i].is_finite()) {
                return Err(Error::Validation(format!("edge {i} has non-positive length {}", lengths[i])));
            }
        }
        let mut uf = UnionFind::new(n_vertices);
        for &[a, b] in &edges {
            uf.union(a, b);
        }
        if (1..n_vertices).any(|v| !uf.connected(0, v)) {
            return Err(Error::Validation("graph is disconnected".into()));
        }
        Ok(MetricGraph { n_vertices, edges, lengths })
    }

    /// Complete graph on `n` vertices, edges in lexicographic order.
    pub fn complete(n: usize, lengths: Vec<f64>) -> Result<Self> {
        MetricGraph::new(n, complete_edges(n), lengths)
    }

    pub fn path(lengths: Vec<f64>) -> Result<Self> {
        let n = lengths.len() + 1;
        MetricGraph::new(n, (0..n - 1).map(|i| [i, i + 1]).collect(), lengths)
    }

    pub fn cycle(lengths: Vec<f64>) -> Result<Self> {
        let n = lengths.len();
        MetricGraph::new(n, (0..n).map(|i| [i, (i + 1) % n]).collect(), lengths)
    }

    /// Star with center 0 and leaves `1..=lengths.len()`.
    pub fn star(lengths: Vec<f64>) -> Result<Self> {
        let n = lengths.len() + 1;
        MetricGraph::new(n, (1..n).map(|i| [0, i]).collect(), lengths)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn with_lengths(&self, lengths: Vec<f64>) -> Result<Self> {
        MetricGraph::new(self.n_vertices, self.edges.clone(), lengths)
    }

    /// Edge weights `1 / l`.
    pub fn weights(&self) -> Vec<f64> {
        self.lengths.iter().map(|l| 1.0 / l).collect()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.n_vertices;
        self.edges.len() == n * (n - 1) / 2
    }

    /// `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.n_vertices
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[0] == v || e[1] == v).count()
    }

    /// Same graph with vertices relabeled by `perm` (old id -> new id).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let edges = self.edges.iter().map(|&[a, b]| [perm[a], perm[b]]).collect();
        MetricGraph::new(self.n_vertices, edges, self.lengths.clone())
    }
}

pub(crate) fn complete_edges(n: usize) -> Vec<[usize; 2]> {
    let mut e = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            e.push([a, b]);
        }
    }
    e
}

/// Weighted Laplacian `sum_i w_i (e_x - e_y)(e_x - e_y)^T`.
pub(crate) fn laplacian(n: usize, edges: &[[usize; 2]], w: &[f64]) -> Mat<f64> {
    let mut l = Mat::zeros(n, n);
    for (&[a, b], &wi) in edges.iter().zip(w) {
        l[(a, a)] += wi;
        l[(b, b)] += wi;
        l[(a, b)] -= wi;
        l[(b, a)] -= wi;
    }
    l
}

/// Ascending eigenvalues and orthonormal eigenvectors (columns).
pub(crate) fn sym_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("symmetric eigensolver failed: {e:?}")))?;
    Ok((evd.S().column_vector().iter().copied().collect(), evd.U().to_owned()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpectrum {
    /// `0 = lambda_0 <= lambda_1 <= ...`.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal in the counting inner product; `eigenvectors[k][v]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Spectrum of `q(f) = sum_edges (f(x) - f(y))^2 / l`.
pub fn graph_laplacian_spectrum(g: &MetricGraph) -> Result<GraphSpectrum> {
    let n = g.n_vertices();
    let l = laplacian(n, g.edges(), &g.weights());
    let (mut vals, vecs) = sym_eigen(&l)?;
    let scale = vals.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let zeros = vals.iter().filter(|v| v.abs() <= 1e-12 * scale).count();
    if zeros != 1 {
        return Err(Error::Validation(format!("eigenvalue 0 has multiplicity {zeros}; the graph is disconnected")));
    }
    vals[0] = 0.0;
    let mut eigenvectors: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|v| vecs[(v, k)]).collect()).collect();
    // fix the sign of the constant mode
    if eigenvectors[0].iter().sum::<f64>() < 0.0 {
        eigenvectors[0].iter_mut().for_each(|x| *x = -*x);
    }
    Ok(GraphSpectrum { eigenvalues: vals, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12 * (1.0 + y.abs()))
    }

    #[test]
    fn small_examples() {
        let g = MetricGraph::path(vec![1.0]).unwrap();
        assert!(close(&graph_laplacian_spectrum(&g).unwrap().eigenvalues, &[0.0, 2.0]));
        let k3 = MetricGraph::complete(3, vec![1.0; 3]).unwrap();
        assert!(close(&graph_laplacian_spectrum(&k3).unwrap().eigenvalues, &[0.0, 3.0, 3.0]));
        let k4 = MetricGraph::complete(4, vec![4.0; 6]).unwrap();
        assert!(close(&graph_laplacian_spectrum(&k4).unwrap().eigenvalues, &[0.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(MetricGraph::new(3, vec![[0, 1]], vec![1.0]).is_err());
        assert!(MetricGraph::new(2, vec![[0, 0]], vec![1.0]).is_err());
        assert!(MetricGraph::new(2, vec![[0, 1], [1, 0]], vec![1.0, 1.0]).is_err());
        assert!(MetricGraph::new(2, vec![[0, 1]], vec![0.0]).is_err());
    }

    #[test]
    fn constant_mode_and_orthonormality() {
        let g = MetricGraph::complete(5, (1..=10).map(|i| i as f64 / 3.0).collect()).unwrap();
        let s = graph_laplacian_spectrum(&g).unwrap();
        assert_eq!(s.eigenvalues[0], 0.0);
        let c = 1.0 / 5f64.sqrt();
        assert!(s.eigenvectors[0].iter().all(|x| (x - c).abs() < 1e-12));
        for i in 0..5 {
            for j in 0..5 {
                let d: f64 = s.eigenvectors[i].iter().zip(&s.eigenvectors[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn relabeling_invariance(lens in proptest::collection::vec(0.1f64..10.0, 10), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let g = MetricGraph::complete(5, lens).unwrap();
            let mut perm: Vec<usize> = (0..5).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = graph_laplacian_spectrum(&g).unwrap().eigenvalues;
            let b = graph_laplacian_spectrum(&g.relabeled(&perm).unwrap()).unwrap().eigenvalues;
            prop_assert!(close(&a, &b));
        }
    }
}
