//! Empirical perturbation study of an eigenvalue cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prescribe::Problem;
use super::{graph_laplacian_spectrum, MetricGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityTrial {
    /// `max - min` of the perturbed eigenvalues over the cluster indices.
    pub spread: f64,
    /// Max relative error against the unperturbed spectrum after
    /// re-optimizing from the perturbed lengths.
    pub reoptimized_error: f64,
    /// Largest `|l_new / l_perturbed - 1|` after re-optimization.
    pub reoptimized_shift: f64,
    pub restored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub k: usize,
    /// Indices `start..end` of the cluster containing `lambda_k`.
    pub cluster: [usize; 2],
    pub eigenvalues: Vec<f64>,
    pub magnitude: f64,
    pub trials: Vec<StabilityTrial>,
    pub max_spread: f64,
    pub restored_fraction: f64,
}

/// Perturbs lengths by `l_i (1 + magnitude u_i)`, `u_i ~ U(-1, 1)`, and
/// re-optimizes back to the original spectrum. A trial counts as restored
/// when the error is within `tol` and no length moved by more than twice the
/// perturbation magnitude, a ball that contains the original lengths.
///
/// Re-optimization acts on `K_{N+1}` only; other graphs report `restored =
/// false` with infinite error.
pub fn stability_probe(
    g: &MetricGraph,
    k: usize,
    n_perturbations: usize,
    magnitude: f64,
    tol: f64,
    seed: u64,
) -> Result<StabilityProbe> {
    let base = graph_laplacian_spectrum(g)?.eigenvalues;
    let n = g.n_vertices();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("eigenvalue index {k} outside 1..{n}")));
    }
    if !(0.0..1.0).contains(&magnitude) {
        return Err(Error::Parameter("perturbation magnitude must lie in [0, 1)".into()));
    }
    let rel = 1e-8;
    let mut start = k;
    while start > 1 && base[start] - base[start - 1] <= rel * base[start] {
        start -= 1;
    }
    let mut end = k + 1;
    while end < n && base[end] - base[end - 1] <= rel * base[end] {
        end += 1;
    }
    let problem = g.is_complete().then(|| Problem::new(&base[1..]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(n_perturbations);
    for _ in 0..n_perturbations {
        let pert: Vec<f64> = g.lengths().iter().map(|l| l * (1.0 + magnitude * rng.random_range(-1.0..1.0))).collect();
        let pg = g.with_lengths(pert.clone())?;
        let ev = graph_laplacian_spectrum(&pg)?.eigenvalues;
        let spread = ev[end - 1] - ev[start];
        let (err, shift) = match &problem {
            Some(p) => {
                let run = p.solve(pert.iter().map(|l| -l.ln()).collect(), 200, tol);
                let shift = run.x.iter().zip(&pert).map(|(x, l)| ((-x).exp() / l - 1.0).abs()).fold(0.0, f64::max);
                (run.error, shift)
            }
            None => (f64::INFINITY, f64::INFINITY),
        };
        trials.push(StabilityTrial {
            spread,
            reoptimized_error: err,
            reoptimized_shift: shift,
            restored: err <= tol && shift <= 2.0 * magnitude + 1e-12,
        });
    }
    let max_spread = trials.iter().map(|t| t.spread).fold(0.0, f64::max);
    let restored_fraction =
        if trials.is_empty() { 1.0 } else { trials.iter().filter(|t| t.restored).count() as f64 / trials.len() as f64 };
    Ok(StabilityProbe { k, cluster: [start, end], eigenvalues: base, magnitude, trials, max_spread, restored_fraction })
}
