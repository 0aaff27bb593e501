//! Inverse problem on `K_{N+1}`: find edge lengths whose Laplacian spectrum is
//! `(0, a_1, ..., a_N)`.
//!
//! Unknowns are log-weights `x_i = ln w_i`, so positivity is structural. Each
//! iteration matches sorted eigenvalues to sorted targets. Targets that repeat
//! form a cluster; for a cluster with eigenvector block `V` the residual is the
//! projected matrix `V^T L V - a I`, whose diagonal is `lambda - a` and whose
//! off-diagonal entries vanish at the current point but carry the derivative
//! information that keeps the cluster together. The step is a damped
//! (Levenberg-Marquardt) minimum-norm Gauss-Newton step with Armijo
//! backtracking on `sum_k ((lambda_k - a_k) / a_k)^2`.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metric::{complete_edges, laplacian, sym_eigen};
use super::{graph_laplacian_spectrum, max_relative_error, MetricGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescribeOptions {
    pub max_iters: usize,
    /// Required max relative eigenvalue error.
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for PrescribeOptions {
    fn default() -> Self {
        PrescribeOptions { max_iters: 200, tol: 1e-8, starts: 8, seed: 0 }
    }
}

/// Edge lengths on `K_{N+1}` realizing `(0, targets...)`.
pub fn prescribe_spectrum(targets: &[f64], opts: &PrescribeOptions) -> Result<MetricGraph> {
    check_targets(targets)?;
    if !(opts.tol > 0.0) || opts.starts == 0 || opts.max_iters == 0 {
        return Err(Error::Parameter("tol, starts and max_iters must be positive".into()));
    }
    let n = targets.len();
    if n == 1 {
        return MetricGraph::complete(2, vec![2.0 / targets[0]]);
    }
    let problem = Problem::new(targets);
    let mean = targets.iter().sum::<f64>() / n as f64;
    let x0 = vec![(mean / (n + 1) as f64).ln(); problem.edges.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for start in 0..opts.starts {
        let init: Vec<f64> =
            if start == 0 { x0.clone() } else { x0.iter().map(|x| x + rng.random_range(-1.5..1.5)).collect() };
        let run = problem.solve(init, opts.max_iters, opts.tol);
        let iters = run.iterations;
        if run.error <= opts.tol {
            let g = MetricGraph::complete(n + 1, run.x.iter().map(|x| (-x).exp()).collect())?;
            // the contract includes an independent check
            let got = graph_laplacian_spectrum(&g)?.eigenvalues;
            if max_relative_error(&got[1..], targets) <= opts.tol {
                return Ok(g);
            }
        }
        if best.as_ref().is_none_or(|b| run.error < b.0) {
            best = Some((run.error, run.x, iters));
        }
    }
    let (residual, x, _) = best.expect("at least one start");
    Err(Error::Optimization {
        residual,
        iterations: opts.max_iters * opts.starts,
        best_lengths: x.iter().map(|x| (-x).exp()).collect(),
    })
}

fn check_targets(targets: &[f64]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Parameter("at least one target eigenvalue is required".into()));
    }
    if targets.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::Parameter("targets must be positive and finite".into()));
    }
    if targets.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("targets must be sorted ascending".into()));
    }
    Ok(())
}

pub(crate) struct Run {
    pub x: Vec<f64>,
    pub error: f64,
    pub iterations: usize,
}

pub(crate) struct Problem {
    n: usize,
    edges: Vec<[usize; 2]>,
    targets: Vec<f64>,
    /// Index ranges (into `targets`) of equal target values.
    clusters: Vec<std::ops::Range<usize>>,
}

struct State {
    /// Nonzero eigenvalues, ascending.
    lambda: Vec<f64>,
    /// Columns `1..=N` of the eigenvector matrix.
    vecs: Mat<f64>,
}

impl Problem {
    pub(crate) fn new(targets: &[f64]) -> Self {
        let n = targets.len() + 1;
        let mut clusters = Vec::new();
        let mut start = 0;
        for k in 1..=targets.len() {
            if k == targets.len() || targets[k] - targets[k - 1] > 1e-12 * targets[k] {
                clusters.push(start..k);
                start = k;
            }
        }
        Problem { n, edges: complete_edges(n), targets: targets.to_vec(), clusters }
    }

    fn state(&self, x: &[f64]) -> Option<State> {
        let w: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        if w.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return None;
        }
        let (vals, vecs) = sym_eigen(&laplacian(self.n, &self.edges, &w)).ok()?;
        let vecs = vecs.subcols(1, self.n - 1).to_owned();
        Some(State { lambda: vals[1..].to_vec(), vecs })
    }

    fn merit(&self, s: &State) -> f64 {
        s.lambda.iter().zip(&self.targets).map(|(l, a)| ((l - a) / a).powi(2)).sum::<f64>() * 0.5
    }

    fn max_err(&self, s: &State) -> f64 {
        max_relative_error(&s.lambda, &self.targets)
    }

    /// Residual rows and their Jacobian with respect to log-weights.
    fn linearize(&self, x: &[f64], s: &State) -> (Vec<f64>, Mat<f64>) {
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for c in &self.clusters {
            let a = self.targets[c.start];
            for p in c.clone() {
                rows.push((p, p, a));
                for q in p + 1..c.end {
                    rows.push((p, q, a));
                }
            }
        }
        let m = rows.len();
        let mut r = vec![0.0; m];
        let mut j = Mat::zeros(m, self.edges.len());
        for (row, &(p, q, a)) in rows.iter().enumerate() {
            if p == q {
                r[row] = (s.lambda[p] - self.targets[p]) / a;
            }
            for (i, &[u, v]) in self.edges.iter().enumerate() {
                let dp = s.vecs[(u, p)] - s.vecs[(v, p)];
                let dq = s.vecs[(u, q)] - s.vecs[(v, q)];
                j[(row, i)] = x[i].exp() * dp * dq / a;
            }
        }
        (r, j)
    }

    pub(crate) fn solve(&self, mut x: Vec<f64>, max_iters: usize, tol: f64) -> Run {
        let Some(mut s) = self.state(&x) else {
            return Run { x, error: f64::INFINITY, iterations: 0 };
        };
        // stop a little inside the tolerance so the independent check agrees
        let goal = 0.01 * tol;
        for it in 0..max_iters {
            let err = self.max_err(&s);
            if err <= goal {
                return Run { x, error: err, iterations: it };
            }
            let (r, jac) = self.linearize(&x, &s);
            let phi = self.merit(&s);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let Some(mut step) = lm_step(&jac, &r, rn.min(1.0) * 1e-2) else { break };
            // gradient of the merit (off-diagonal residuals are zero)
            let grad: Vec<f64> = (0..x.len()).map(|i| (0..r.len()).map(|k| jac[(k, i)] * r[k]).sum()).collect();
            let mut slope: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
            if !(slope < 0.0) {
                step = grad.iter().map(|g| -g).collect();
                slope = -grad.iter().map(|g| g * g).sum::<f64>();
            }
            // bounded trust: no log-weight moves by more than 2 in one step
            let big = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut t = if big > 2.0 { 2.0 / big } else { 1.0 };
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + t * d).collect();
                if let Some(ns) = self.state(&trial) {
                    if self.merit(&ns) <= phi + 1e-4 * t * slope {
                        x = trial;
                        s = ns;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let error = self.max_err(&s);
        Run { x, error, iterations: max_iters }
    }
}

/// `d = -J^T (J J^T + mu I)^{-1} r`.
fn lm_step(j: &Mat<f64>, r: &[f64], mu: f64) -> Option<Vec<f64>> {
    let m = j.nrows();
    let mut a = j * j.transpose();
    let scale = (0..m).map(|i| a[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
    for i in 0..m {
        a[(i, i)] += mu * scale + 1e-14 * scale;
    }
    let llt = a.llt(Side::Lower).ok()?;
    let mut rhs = Mat::from_fn(m, 1, |i, _| r[i]);
    faer::linalg::solvers::Solve::solve_in_place(&llt, rhs.as_mut());
    let d = j.transpose() * &rhs;
    let out: Vec<f64> = (0..d.nrows()).map(|i| -d[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// `d lambda_k / d w_i = (v_k(x_i) - v_k(y_i))^2` for every nonzero eigenvalue
/// `k` (rows) and edge `i` (columns). Valid where `lambda_k` is simple.
pub fn eigenvalue_derivatives(g: &MetricGraph) -> Result<Vec<Vec<f64>>> {
    let s = graph_laplacian_spectrum(g)?;
    Ok(s.eigenvectors[1..].iter().map(|v| g.edges().iter().map(|&[a, b]| (v[a] - v[b]).powi(2)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum(g: &MetricGraph) -> Vec<f64> {
        graph_laplacian_spectrum(g).unwrap().eigenvalues
    }

    #[test]
    fn single_target_closed_form() {
        let g = prescribe_spectrum(&[0.8], &PrescribeOptions::default()).unwrap();
        assert_eq!(g.lengths(), &[2.5]);
        assert!((spectrum(&g)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn triple_target_on_k4() {
        let g = prescribe_spectrum(&[1.0, 1.0, 1.0], &PrescribeOptions::default()).unwrap();
        assert_eq!(g.n_vertices(), 4);
        assert!(max_relative_error(&spectrum(&g)[1..], &[1.0; 3]) <= 1e-8);
    }

    #[test]
    fn distinct_targets() {
        let t = [1.0, 2.0, 3.0];
        let g = prescribe_spectrum(&t, &PrescribeOptions::default()).unwrap();
        assert!(max_relative_error(&spectrum(&g)[1..], &t) <= 1e-8);
    }

    #[test]
    fn mixed_clusters() {
        let t = [0.5, 0.5, 2.0, 4.0, 4.0, 4.0];
        let g = prescribe_spectrum(&t, &PrescribeOptions::default()).unwrap();
        assert!(max_relative_error(&spectrum(&g)[1..], &t) <= 1e-8);
    }

    #[test]
    fn homogeneity() {
        let t = [0.7, 1.9, 3.2];
        let g = prescribe_spectrum(&t, &PrescribeOptions::default()).unwrap();
        let c = 2.5;
        let scaled = g.with_lengths(g.lengths().iter().map(|l| l / c).collect()).unwrap();
        let (a, b) = (spectrum(&g), spectrum(&scaled));
        for k in 1..4 {
            assert!((b[k] - c * a[k]).abs() <= 1e-12 * b[k]);
        }
    }

    #[test]
    fn invalid_targets() {
        let o = PrescribeOptions::default();
        assert!(prescribe_spectrum(&[], &o).is_err());
        assert!(prescribe_spectrum(&[2.0, 1.0], &o).is_err());
        assert!(prescribe_spectrum(&[0.0, 1.0], &o).is_err());
    }

    #[test]
    fn failure_carries_best_iterate() {
        let o = PrescribeOptions { max_iters: 1, starts: 1, ..Default::default() };
        match prescribe_spectrum(&[0.5, 1.0, 4.0, 5.0], &o) {
            Err(Error::Optimization { best_lengths, residual, .. }) => {
                assert_eq!(best_lengths.len(), 10);
                assert!(residual > 1e-8);
            }
            other => panic!("expected optimization failure, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn derivatives_match_finite_differences(
            lens in proptest::collection::vec(0.5f64..2.0, 10),
            edge in 0usize..10,
        ) {
            let g = MetricGraph::complete(5, lens).unwrap();
            let d = eigenvalue_derivatives(&g).unwrap();
            let w = g.weights();
            let h = 1e-6 * w[edge];
            let at = |dw: f64| {
                let mut w2 = w.clone();
                w2[edge] += dw;
                spectrum(&g.with_lengths(w2.iter().map(|v| 1.0 / v).collect()).unwrap())
            };
            let base = spectrum(&g);
            prop_assume!(base.windows(2).all(|p| p[1] - p[0] > 1e-3));
            let (p, m) = (at(h), at(-h));
            // cancellation floor of a central difference
            let floor = 100.0 * f64::EPSILON * base[4] / h;
            for k in 1..5 {
                let fd = (p[k] - m[k]) / (2.0 * h);
                let exact = d[k - 1][edge];
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs() + floor,
                    "k={k} fd={fd} exact={}", d[k - 1][edge]);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn returned_graph_realizes_the_targets(
            mut t in proptest::collection::vec(0.5f64..5.0, 1..6),
            seed in 0u64..1000,
        ) {
            t.sort_by(f64::total_cmp);
            let opts = PrescribeOptions { seed, ..Default::default() };
            let g = prescribe_spectrum(&t, &opts).unwrap();
            prop_assert!(g.is_complete() && g.n_vertices() == t.len() + 1);
            let s = spectrum(&g);
            prop_assert!(s[0].abs() < 1e-12);
            prop_assert!(max_relative_error(&s[1..], &t) <= opts.tol);
        }
    }
}
