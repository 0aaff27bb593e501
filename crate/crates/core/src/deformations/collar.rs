use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;

use super::eventually_nonincreasing;
use crate::error::{Error, Result};
use crate::fem::SteklovSolver;
use crate::geometry::{make_strip_mesh_tagged, BoundaryTag, Mesh2D};
use crate::report::{Cell, Check, ExperimentReport, Table};

/// Steklov eigenvalue `sqrt(lambda) tanh(eta sqrt(lambda))` of the flat
/// collar of half-width `eta` over a boundary eigenvalue `lambda`.
pub fn cylinder_formula(lambda: f64, eta: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let s = lambda.sqrt();
    s * (eta * s).tanh()
}

/// Laplace eigenvalues of a circle of length `l` counted with multiplicity:
/// `(2 pi k / l)^2` for `k = 0, 1, 1, 2, 2, ...`.
pub fn circle_eigenvalues(l: f64, count: usize) -> Vec<(usize, f64)> {
    (0..count)
        .map(|j| {
            let k = j.div_ceil(2);
            (k, (2.0 * PI * k as f64 / l).powi(2))
        })
        .collect()
}

fn check_resolution(width: f64, h: f64, min_across: usize) -> Result<()> {
    if width / h < min_across as f64 - 1e-9 {
        return Err(Error::Resolution(format!(
            "mesh size {h} gives fewer than {min_across} elements across width {width}"
        )));
    }
    Ok(())
}

/// Minimum number of elements across a collar.
pub const MIN_ELEMENTS_ACROSS: usize = 8;

/// Steklov-Neumann spectra of flat collars `S^1 x [0, eta]` (Steklov at
/// `y = 0`), rescaled by `1/eta` and compared with the circle spectrum.
///
/// Mesh size is `eta / elements_across`. The error of each width is the max
/// relative error over modes `1..=k_max` counted with multiplicity.
pub fn collar_convergence_run(
    circle_length: f64,
    widths: &[f64],
    k_max: usize,
    elements_across: usize,
    threshold: f64,
) -> Result<ExperimentReport> {
    if !(circle_length > 0.0) || widths.is_empty() || k_max == 0 {
        return Err(Error::Parameter("collar run needs L > 0, widths and k_max >= 1".into()));
    }
    if widths.windows(2).any(|w| !(w[1] < w[0])) || widths.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Parameter("widths must be positive and strictly decreasing".into()));
    }
    if elements_across < MIN_ELEMENTS_ACROSS {
        return Err(Error::Resolution(format!(
            "{elements_across} elements across the collar; at least {MIN_ELEMENTS_ACROSS} required"
        )));
    }
    let config = json!({
        "circle_length": circle_length,
        "widths": widths,
        "k_max": k_max,
        "elements_across": elements_across,
        "threshold": threshold,
    });
    let mut report = ExperimentReport::new("collar-sweep", config);
    let n_idx = 2 * k_max + 1;
    let reference = circle_eigenvalues(circle_length, n_idx);

    let points: Vec<Result<Vec<f64>>> = widths
        .par_iter()
        .map(|&eta| {
            let h = eta / elements_across as f64;
            check_resolution(eta, h, MIN_ELEMENTS_ACROSS)?;
            let mesh = make_strip_mesh_tagged(circle_length, eta, h, true, BoundaryTag::Steklov, BoundaryTag::Neumann)?;
            Ok(SteklovSolver::new(&mesh)?.spectrum(n_idx, None)?.eigenvalues)
        })
        .collect();

    let mut table = Table::new(
        "collar",
        &["eta", "index", "k", "sigma", "sigma_over_eta", "lambda", "cylinder_formula", "rel_err"],
    );
    let mut errs_table = Table::new("collar_errors", &["eta", "max_rel_err"]);
    let mut errs = Vec::new();
    for (&eta, point) in widths.iter().zip(points) {
        let sig = match point {
            Ok(s) => s,
            Err(e) => {
                report.failures.push(format!("eta = {eta}: {e}"));
                continue;
            }
        };
        let mut worst = 0.0f64;
        for (j, (&s, &(k, lam))) in sig.iter().zip(&reference).enumerate() {
            let r = s / eta;
            let rel = if lam == 0.0 { r.abs() } else { (r - lam).abs() / lam };
            if j > 0 {
                worst = worst.max(rel);
            }
            table.push(vec![
                eta.into(),
                j.into(),
                k.into(),
                s.into(),
                r.into(),
                lam.into(),
                cylinder_formula(lam, eta).into(),
                rel.into(),
            ]);
        }
        errs_table.push(vec![eta.into(), worst.into()]);
        errs.push(worst);
    }
    if let Some(&last) = errs.last() {
        report.checks.push(Check::at_most(
            "collar_final_error",
            last,
            threshold,
            format!("max relative error of sigma/eta against (2 pi k / L)^2, k <= {k_max}"),
        ));
        let decreasing = errs.len() == widths.len() && eventually_nonincreasing(&errs, errs.len());
        report.checks.push(Check::flag(
            "collar_error_decreasing",
            decreasing,
            format!("errors along the sweep: {errs:?}"),
        ));
        let zero_row = table
            .rows
            .iter()
            .filter(|r| r[1] == Cell::Int(0))
            .map(|r| r[3].as_f64().unwrap().abs())
            .fold(0.0, f64::max);
        report.checks.push(Check::at_most("collar_zero_mode", zero_row, 1e-9, "sigma_0 vanishes at every width"));
    }
    report.tables.push(table);
    report.tables.push(errs_table);
    Ok(report)
}

/// Vertex pairs `(bottom, top)` with equal `x` on a strip of width `w`.
fn mirror_pairs(mesh: &Mesh2D, w: f64) -> Vec<(usize, usize)> {
    let mut bottom: Vec<(f64, usize)> = Vec::new();
    let mut top: Vec<(f64, usize)> = Vec::new();
    for (i, p) in mesh.vertices().iter().enumerate() {
        if p[1] == 0.0 {
            bottom.push((p[0], i));
        } else if (p[1] - w).abs() <= 1e-12 * w {
            top.push((p[0], i));
        }
    }
    bottom.sort_by(|a, b| a.0.total_cmp(&b.0));
    top.sort_by(|a, b| a.0.total_cmp(&b.0));
    bottom.iter().zip(&top).map(|(b, t)| (b.1, t.1)).collect()
}

/// Flat cylinders of length `l` and width `2 eta` with both circles Steklov.
///
/// Eigenfunctions are split by the correlation between their bottom and top
/// traces; the symmetric family is compared with `k tanh(eta k)` (for
/// `l = 2 pi`, generally `cylinder_formula((2 pi k / l)^2, eta)`).
pub fn cylinder_formula_run(
    circle_length: f64,
    half_widths: &[f64],
    k_max: usize,
    target_h: f64,
    threshold: f64,
) -> Result<ExperimentReport> {
    if half_widths.is_empty() || half_widths.iter().any(|&e| !(e > 0.0)) || k_max == 0 {
        return Err(Error::Parameter("cylinder run needs positive half-widths and k_max >= 1".into()));
    }
    let config = json!({
        "circle_length": circle_length,
        "half_widths": half_widths,
        "k_max": k_max,
        "target_h": target_h,
        "threshold": threshold,
    });
    let mut report = ExperimentReport::new("cylinder-formula", config);
    let n_sym = 2 * k_max + 1;
    let reference = circle_eigenvalues(circle_length, n_sym);

    let points: Vec<Result<Vec<(f64, f64)>>> = half_widths
        .par_iter()
        .map(|&eta| {
            let w = 2.0 * eta;
            let h = target_h.min(w / MIN_ELEMENTS_ACROSS as f64);
            let mesh = make_strip_mesh_tagged(circle_length, w, h, true, BoundaryTag::Steklov, BoundaryTag::Steklov)?;
            let pairs = mirror_pairs(&mesh, w);
            let solver = SteklovSolver::new(&mesh)?;
            let mut n = 4 * n_sym;
            loop {
                let n_eff = n.min(solver.dtn().dim());
                let r = solver.spectrum(n_eff, None)?;
                let classified: Vec<(f64, f64)> = r
                    .eigenvalues
                    .iter()
                    .zip(&r.extensions)
                    .map(|(&s, f)| {
                        let (mut bt, mut bb, mut tt) = (0.0, 0.0, 0.0);
                        for &(b, t) in &pairs {
                            bt += f[b] * f[t];
                            bb += f[b] * f[b];
                            tt += f[t] * f[t];
                        }
                        (s, bt / (bb * tt).sqrt())
                    })
                    .collect();
                let sym = classified.iter().filter(|c| c.1 > 0.0).count();
                if sym >= n_sym || n_eff == solver.dtn().dim() {
                    return Ok(classified);
                }
                n *= 2;
            }
        })
        .collect();

    let mut table =
        Table::new("cylinder", &["eta", "family", "index", "k", "sigma", "formula", "rel_err", "trace_correlation"]);
    let mut worst_all = 0.0f64;
    for (&eta, point) in half_widths.iter().zip(points) {
        let classified = match point {
            Ok(c) => c,
            Err(e) => {
                report.failures.push(format!("eta = {eta}: {e}"));
                continue;
            }
        };
        let sym: Vec<&(f64, f64)> = classified.iter().filter(|c| c.1 > 0.0).collect();
        let anti: Vec<&(f64, f64)> = classified.iter().filter(|c| c.1 <= 0.0).collect();
        if sym.len() < n_sym {
            report.failures.push(format!("eta = {eta}: only {} symmetric modes found", sym.len()));
            continue;
        }
        for (j, (&&(s, corr), &(k, lam))) in sym.iter().zip(&reference).enumerate() {
            let f = cylinder_formula(lam, eta);
            let rel = if f == 0.0 { s.abs() } else { (s - f).abs() / f };
            if j > 0 {
                worst_all = worst_all.max(rel);
            }
            table.push(vec![
                eta.into(),
                "symmetric".into(),
                j.into(),
                k.into(),
                s.into(),
                f.into(),
                rel.into(),
                corr.into(),
            ]);
        }
        // recorded only: antisymmetric modes follow sqrt(lambda) coth(eta sqrt(lambda))
        for (j, &&(s, corr)) in anti.iter().enumerate().take(n_sym) {
            let k = j.div_ceil(2);
            let lam = (2.0 * PI * k as f64 / circle_length).powi(2);
            let f = if k == 0 { 1.0 / eta } else { lam.sqrt() / (eta * lam.sqrt()).tanh() };
            table.push(vec![
                eta.into(),
                "antisymmetric".into(),
                j.into(),
                k.into(),
                s.into(),
                f.into(),
                ((s - f).abs() / f).into(),
                corr.into(),
            ]);
        }
    }
    report.checks.push(Check::at_most(
        "cylinder_symmetric_max_rel_err",
        worst_all,
        threshold,
        format!("symmetric family against sqrt(lambda) tanh(eta sqrt(lambda)), k <= {k_max}"),
    ));
    report.notes.push(
        "antisymmetric family tabulated against sqrt(lambda) coth(eta sqrt(lambda)) (1/eta at k = 0); not asserted"
            .into(),
    );
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formula_values() {
        assert_eq!(cylinder_formula(0.0, 0.3), 0.0);
        assert!((cylinder_formula(1.0, 0.5) - 0.46211715726000974).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn small_eta_expansion(lam in 0.0f64..50.0, eta in 1e-4f64..0.1) {
            let r = cylinder_formula(lam, eta);
            prop_assert!((r - eta * lam).abs() <= eta.powi(3) * lam * lam / 3.0 + 1e-15);
        }

        #[test]
        fn monotone_and_concave(lam in 0.01f64..50.0, eta in 0.01f64..2.0, d in 1e-3f64..0.5) {
            let f = |e: f64| cylinder_formula(lam, e);
            prop_assert!(f(eta + d) >= f(eta));
            prop_assert!(cylinder_formula(lam * (1.0 + d), eta) >= f(eta));
            // midpoint concavity in eta
            prop_assert!(f(eta + d) + 1e-12 >= 0.5 * (f(eta) + f(eta + 2.0 * d)));
        }
    }

    #[test]
    fn circle_spectrum_counts_multiplicity() {
        let e = circle_eigenvalues(2.0 * PI, 5);
        let ks: Vec<usize> = e.iter().map(|x| x.0).collect();
        assert_eq!(ks, vec![0, 1, 1, 2, 2]);
        assert!((e[4].1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn resolution_guard() {
        assert!(matches!(collar_convergence_run(2.0 * PI, &[0.2], 2, 4, 0.02), Err(Error::Resolution(_))));
    }

    #[test]
    fn coarse_collar_run() {
        let r = collar_convergence_run(2.0 * PI, &[0.4, 0.2], 2, 8, 0.2).unwrap();
        assert!(r.failures.is_empty());
        let errs = r.table("collar_errors").unwrap();
        assert_eq!(errs.rows.len(), 2);
        assert!(r.check("collar_zero_mode").unwrap().passed);
    }
}
