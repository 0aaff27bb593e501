use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{edge_angles, DensityFamily, TrigDensity};
use super::singular::{singular_family_at, upper_half, SingularWeightFamily};
use super::{density_family_at, eventually_nonincreasing};
use crate::error::{Error, Result};
use crate::fem::SteklovSolver;
use crate::geometry::make_disk_mesh;
use crate::report::{Check, ExperimentReport, Table};

/// Tail length used for "eventually decreasing" checks.
const TAIL: usize = 3;

/// Density family on a disk: `rho = 1`, `rho_bar` a seeded smooth density
/// with minimum 1, `eps = 2^-j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySweep {
    pub radius: f64,
    pub target_h: f64,
    pub virtual_dim: u32,
    pub j_max: u32,
    pub k_max: usize,
    pub max_mode: usize,
    pub amplitude: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for DensitySweep {
    fn default() -> Self {
        DensitySweep {
            radius: 1.0,
            target_h: 0.02,
            virtual_dim: 3,
            j_max: 7,
            k_max: 5,
            max_mode: 4,
            amplitude: 0.5,
            threshold: 0.02,
            seed: 1,
        }
    }
}

/// Max relative error over `k = 1..=k_max` per sweep point, with tables.
fn compare(
    report: &mut ExperimentReport,
    name: &str,
    param: &str,
    params: &[f64],
    spectra: Vec<Result<Vec<f64>>>,
    reference: &[f64],
    k_max: usize,
) -> Vec<f64> {
    let mut table = Table::new(name, &[param, "k", "sigma", "reference", "abs_err", "rel_err"]);
    let mut errs_table = Table::new(&format!("{name}_errors"), &[param, "max_rel_err"]);
    let mut errs = Vec::new();
    for (&p, s) in params.iter().zip(spectra) {
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                report.failures.push(format!("{param} = {p}: {e}"));
                continue;
            }
        };
        let mut worst = 0.0f64;
        for k in 0..=k_max {
            let abs = (s[k] - reference[k]).abs();
            let rel = if k == 0 { abs } else { abs / reference[k] };
            if k > 0 {
                worst = worst.max(rel);
            }
            table.push(vec![p.into(), k.into(), s[k].into(), reference[k].into(), abs.into(), rel.into()]);
        }
        errs_table.push(vec![p.into(), worst.into()]);
        errs.push(worst);
    }
    report.tables.push(table);
    report.tables.push(errs_table);
    errs
}

pub fn density_sweep(p: &DensitySweep) -> Result<ExperimentReport> {
    if p.k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    let config = serde_json::to_value(p).expect("params serialize");
    let mut report = ExperimentReport::new("density-sweep", config);
    let mesh = make_disk_mesh(p.radius, p.target_h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rho_bar = TrigDensity::random(&mut rng, p.max_mode, p.amplitude)
        .normalized_min(&edge_angles(&mesh), 1.0)
        .sample_edges(&mesh);
    let family = DensityFamily::new(&mesh, rho_bar, p.virtual_dim)?;
    let n = p.k_max + 1;
    let reference = SteklovSolver::new(&family.limit_mesh()?)?.spectrum(n, None)?.eigenvalues;
    let eps: Vec<f64> = (0..=p.j_max).map(|j| 0.5f64.powi(j as i32)).collect();
    let unresolved: Vec<f64> = eps.iter().copied().filter(|&e| !family.resolves(e)).collect();
    let spectra: Vec<Result<Vec<f64>>> = eps
        .par_iter()
        .map(|&e| {
            let m = density_family_at(&family, e)?;
            Ok(SteklovSolver::new(&m)?.spectrum(n, None)?.eigenvalues)
        })
        .collect();

    // monotonicity in eps of each sigma_k, before the spectra are consumed
    let mut monotone = true;
    let ok: Vec<&Vec<f64>> = spectra.iter().filter_map(|s| s.as_ref().ok()).collect();
    for w in ok.windows(2) {
        if w[1][1..n].iter().zip(&w[0][1..n]).any(|(next, prev)| *next > prev * (1.0 + 1e-9)) {
            monotone = false;
        }
    }
    let errs = compare(&mut report, "density_sweep", "eps", &eps, spectra, &reference, p.k_max);
    if let Some(&last) = errs.last() {
        report.checks.push(Check::at_most(
            "density_final_error",
            last,
            p.threshold,
            format!("max_k<={} relative error against the rho_bar disk at eps = 2^-{}", p.k_max, p.j_max),
        ));
        report.checks.push(Check::flag(
            "density_error_eventually_decreasing",
            errs.len() == eps.len() && eventually_nonincreasing(&errs, TAIL),
            format!("errors: {errs:?}"),
        ));
        report.checks.push(Check::flag(
            "density_sweep_resolved",
            unresolved.is_empty(),
            format!("eps values with no triangle centroid inside the layer: {unresolved:?}"),
        ));
        report.checks.push(Check::flag("density_monotone_in_eps", monotone, "sigma_k non-increasing as eps decreases"));
    }
    Ok(report)
}

/// Singular weights off the upper half-disk, `eta = 2^-j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubdomainSweep {
    pub radius: f64,
    pub target_h: f64,
    pub virtual_dim: u32,
    pub j_max: u32,
    pub k_max: usize,
    pub threshold: f64,
}

impl Default for SubdomainSweep {
    fn default() -> Self {
        SubdomainSweep { radius: 1.0, target_h: 0.03, virtual_dim: 3, j_max: 8, k_max: 4, threshold: 0.05 }
    }
}

pub fn subdomain_sweep(p: &SubdomainSweep) -> Result<ExperimentReport> {
    if p.k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    let config = serde_json::to_value(p).expect("params serialize");
    let mut report = ExperimentReport::new("subdomain-sweep", config);
    let mesh = make_disk_mesh(p.radius, p.target_h)?;
    let family = SingularWeightFamily::new(&mesh, upper_half(&mesh), p.virtual_dim)?;
    let n = p.k_max + 1;
    let reference = SteklovSolver::new(&family.limit_mesh()?)?.spectrum(n, None)?.eigenvalues;
    let eta: Vec<f64> = (0..=p.j_max).map(|j| 0.5f64.powi(j as i32)).collect();
    let spectra: Vec<Result<Vec<f64>>> = eta
        .par_iter()
        .map(|&e| {
            let m = singular_family_at(&family, e)?;
            Ok(SteklovSolver::new(&m)?.spectrum(n, None)?.eigenvalues)
        })
        .collect();
    let errs = compare(&mut report, "subdomain_sweep", "eta", &eta, spectra, &reference, p.k_max);
    if let Some(&last) = errs.last() {
        report.checks.push(Check::at_most(
            "subdomain_final_error",
            last,
            p.threshold,
            format!("max_k<={} relative error against the Steklov-Neumann half-disk at eta = 2^-{}", p.k_max, p.j_max),
        ));
        report.checks.push(Check::flag(
            "subdomain_error_eventually_decreasing",
            errs.len() == eta.len() && eventually_nonincreasing(&errs, TAIL),
            format!("errors: {errs:?}"),
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_density_sweep() {
        let p = DensitySweep { target_h: 0.1, j_max: 4, k_max: 3, threshold: 1.0, ..Default::default() };
        let r = density_sweep(&p).unwrap();
        assert!(r.failures.is_empty());
        assert!(r.check("density_monotone_in_eps").unwrap().passed, "{}", r.summary());
        assert!(r.check("density_sweep_resolved").unwrap().passed);
    }

    #[test]
    fn sweep_below_mesh_resolution_is_flagged() {
        // no centroid of an h = 0.1 mesh lies within 2^-7 of the circle
        let p = DensitySweep { target_h: 0.1, j_max: 7, k_max: 2, threshold: 1.0, ..Default::default() };
        let r = density_sweep(&p).unwrap();
        assert!(!r.check("density_sweep_resolved").unwrap().passed);
        assert_eq!(r.check("density_final_error").unwrap().value, 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn coarse_subdomain_sweep() {
        let p = SubdomainSweep { target_h: 0.1, j_max: 5, k_max: 3, threshold: 1.0, ..Default::default() };
        let r = subdomain_sweep(&p).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.table("subdomain_sweep_errors").unwrap().rows.len(), 6);
    }
}
