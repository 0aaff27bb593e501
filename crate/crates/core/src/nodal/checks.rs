use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::decompose_nodal;
use crate::error::{Error, Result};
use crate::fem::SpectralResult;
use crate::geometry::{Mesh2D, SurfaceTopology};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CourantRow {
    pub k: usize,
    /// `start..end` of the cluster containing `sigma_k`.
    pub cluster: [usize; 2],
    /// Domains of the `k`-th computed eigenvector.
    pub domains: usize,
    /// Worst count over the cluster basis and random combinations.
    pub max_domains: usize,
    /// `start + 1`: the eigenvalue first appears at index `start`.
    pub bound: usize,
    pub vectors_tested: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CourantReport {
    pub rows: Vec<CourantRow>,
}

impl CourantReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Nodal domain counts of eigenfunctions `0..=k_max` against `k + 1`.
///
/// Inside a cluster every eigenfunction belongs to the eigenvalue's first
/// index, so the whole cluster is held to that index's bound; the basis and
/// `n_random` random unit combinations are tested.
pub fn courant_check(
    result: &SpectralResult,
    mesh: &Mesh2D,
    k_max: usize,
    zero_tol: f64,
    n_random: usize,
    seed: u64,
) -> Result<CourantReport> {
    if k_max >= result.len() {
        return Err(Error::Parameter(format!(
            "k_max = {k_max} needs more than the {} computed eigenpairs",
            result.len()
        )));
    }
    let count = |f: &[f64]| decompose_nodal(mesh, f, zero_tol).map(|d| d.n_domains);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut cache: Option<(usize, usize, usize)> = None;
    for k in 0..=k_max {
        let c = result.cluster_of(k);
        let (max_domains, tested) = match cache {
            Some((start, worst, tested)) if start == c.start => (worst, tested),
            _ => {
                let mut worst = 0;
                let mut tested = 0;
                for j in c.clone() {
                    worst = worst.max(count(&result.extensions[j])?);
                    tested += 1;
                }
                if c.len() > 1 {
                    for _ in 0..n_random {
                        let mut w: Vec<f64> = c.clone().map(|_| StandardNormal.sample(&mut rng)).collect();
                        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                        w.iter_mut().for_each(|x| *x /= norm);
                        let mut f = vec![0.0; mesh.vertices().len()];
                        for (wj, j) in w.iter().zip(c.clone()) {
                            for (fi, ei) in f.iter_mut().zip(&result.extensions[j]) {
                                *fi += wj * ei;
                            }
                        }
                        worst = worst.max(count(&f)?);
                        tested += 1;
                    }
                }
                cache = Some((c.start, worst, tested));
                (worst, tested)
            }
        };
        let domains = count(&result.extensions[k])?;
        let bound = c.start + 1;
        rows.push(CourantRow {
            k,
            cluster: [c.start, c.end],
            domains,
            max_domains,
            bound,
            vectors_tested: tested,
            passed: max_domains <= bound && domains <= k + 1,
        });
    }
    Ok(CourantReport { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Steklov,
    SteklovNeumann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityRow {
    pub k: usize,
    pub multiplicity: usize,
    pub bound: usize,
    /// Which bound `bound` is.
    pub label: String,
    /// Second constant, where two versions of the bound are in use.
    pub alternative: Option<usize>,
    pub passed: bool,
    pub margin: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub rows: Vec<MultiplicityRow>,
}

impl MultiplicityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Cluster size of `sigma_k`, `1 <= k <= k_max`, against the topological
/// bound for the problem.
///
/// Orientable genus `g`: `4g + 2k + 1`, tightened on the disk to 2 at `k = 1`
/// and 3 at `k = 2`. Non-orientable with invariant `p`: compared against
/// `4p + 4k + 1`, with `4p + 4k + 3` reported alongside. Steklov-Neumann on
/// the disk: `k + 1`.
pub fn multiplicity_bound_check(
    result: &SpectralResult,
    topology: &SurfaceTopology,
    kind: ProblemKind,
    k_max: usize,
) -> Result<MultiplicityReport> {
    if k_max >= result.len() {
        return Err(Error::Parameter(format!(
            "k_max = {k_max} needs more than the {} computed eigenpairs",
            result.len()
        )));
    }
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let (bound, label, alternative) = match kind {
            ProblemKind::Steklov if topology.is_disk() && k <= 2 => (k + 1, "disk".to_string(), None),
            ProblemKind::Steklov if topology.orientable => {
                (4 * topology.genus as usize + 2 * k + 1, "4g+2k+1".to_string(), None)
            }
            ProblemKind::Steklov => {
                let p = topology.p_invariant as usize;
                (4 * p + 4 * k + 1, "4p+4k+1 (alternative 4p+4k+3)".to_string(), Some(4 * p + 4 * k + 3))
            }
            ProblemKind::SteklovNeumann if topology.is_disk() => (k + 1, "disk k+1".to_string(), None),
            ProblemKind::SteklovNeumann => {
                return Err(Error::Unsupported(
                    "multiplicity bounds for the mixed problem are only known on the disk".into(),
                ))
            }
        };
        let m = result.multiplicity(k);
        rows.push(MultiplicityRow {
            k,
            multiplicity: m,
            bound,
            label,
            alternative,
            passed: m <= bound,
            margin: bound as i64 - m as i64,
        });
    }
    Ok(MultiplicityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::steklov_spectrum;
    use crate::geometry::{make_disk_mesh, tag_boundary, Arc, BoundaryTag};

    #[test]
    fn disk_courant_and_multiplicity() {
        let m = make_disk_mesh(1.0, 0.06).unwrap();
        let r = steklov_spectrum(&m, 8, Some(1e-2)).unwrap();
        let c = courant_check(&r, &m, 5, 1e-7, 20, 1).unwrap();
        assert!(c.passed(), "{c:?}");
        assert_eq!(c.rows[0].max_domains, 1);
        // sigma = 2 branch starts at index 3; r^2 cos 2t has 4 domains
        assert_eq!(c.rows[3].cluster, [3, 5]);
        assert_eq!(c.rows[3].max_domains, 4);
        assert_eq!(c.rows[3].vectors_tested, 22);
        let mb = multiplicity_bound_check(&r, &SurfaceTopology::disk(), ProblemKind::Steklov, 4).unwrap();
        assert!(mb.passed());
        assert_eq!(mb.rows[0].multiplicity, 2);
        assert_eq!(mb.rows[0].margin, 0);
    }

    #[test]
    fn bounds_by_topology() {
        let m = make_disk_mesh(1.0, 0.15).unwrap();
        let r = steklov_spectrum(&m, 6, None).unwrap();
        let a = multiplicity_bound_check(&r, &SurfaceTopology::annulus(), ProblemKind::Steklov, 2).unwrap();
        assert_eq!(a.rows[0].bound, 3);
        let mo = SurfaceTopology::non_orientable(0, 1).unwrap();
        let n = multiplicity_bound_check(&r, &mo, ProblemKind::Steklov, 1).unwrap();
        assert_eq!((n.rows[0].bound, n.rows[0].alternative), (5, Some(7)));
        let sn = multiplicity_bound_check(&r, &SurfaceTopology::disk(), ProblemKind::SteklovNeumann, 2).unwrap();
        assert_eq!(sn.rows[0].bound, 2);
        assert!(matches!(
            multiplicity_bound_check(&r, &SurfaceTopology::annulus(), ProblemKind::SteklovNeumann, 1),
            Err(Error::Unsupported(_))
        ));
        assert!(courant_check(&r, &m, 6, 1e-7, 0, 0).is_err());
    }

    #[test]
    fn mixed_disk_domains_touch_steklov() {
        let m = make_disk_mesh(1.0, 0.06).unwrap();
        let m = tag_boundary(&m, &[(Arc::Angle { start: 3.5, end: 6.0 }, BoundaryTag::Neumann)]).unwrap();
        let r = steklov_spectrum(&m, 6, None).unwrap();
        for k in 0..6 {
            let d = decompose_nodal(&m, &r.extensions[k], 1e-7).unwrap();
            assert!(d.touches_steklov.iter().all(|&t| t), "k = {k}");
        }
    }
}
