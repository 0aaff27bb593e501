use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::mixed_disk;
use super::{Domain, RunOutput};
use crate::deformations::TrigDensity;
use crate::error::{Error, Result};
use crate::fem::SteklovSolver;
use crate::geometry::{Mesh2D, SurfaceTopology};
use crate::nodal::{
    courant_check, decompose_nodal, multiplicity_bound_check, nodal_graph_stats, nodal_svg, ProblemKind,
    DEFAULT_ZERO_TOL,
};
use crate::report::{Check, ExperimentReport, Table};

/// Courant bound, boundary touch and nodal-line shape over random densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodalAudit {
    /// For `mixed-disk` the Steklov arc is redrawn per sample.
    pub domain: Domain,
    pub count: usize,
    pub k_max: usize,
    /// Random combinations tested per multiple eigenvalue.
    pub n_random: usize,
    pub max_mode: usize,
    pub amplitude: f64,
    pub zero_tol: f64,
    pub cluster_tol: Option<f64>,
    pub steklov_fraction_range: [f64; 2],
    /// SVG of every eigenfunction of the first sample.
    pub figures: bool,
}

impl Default for NodalAudit {
    fn default() -> Self {
        NodalAudit {
            domain: Domain::Disk { radius: 1.0, h: 0.05 },
            count: 50,
            k_max: 6,
            n_random: 20,
            max_mode: 4,
            amplitude: 0.5,
            zero_tol: DEFAULT_ZERO_TOL,
            cluster_tol: None,
            steklov_fraction_range: [0.25, 0.75],
            figures: true,
        }
    }
}

struct Sample {
    mesh: Mesh2D,
    density: TrigDensity,
    courant_seed: u64,
    label: String,
}

struct Outcome {
    rows: Vec<Vec<crate::report::Cell>>,
    courant_ok: bool,
    touch_ok: bool,
    shape_ok: bool,
    figures: Vec<(String, String)>,
    dumps: Vec<(String, Mesh2D, Vec<f64>)>,
}

fn audit_sample(p: &NodalAudit, index: usize, s: &Sample, zero_tol: f64, disk: bool) -> Result<Outcome> {
    let mesh = s.mesh.with_edge_densities(&s.density.sample_edges(&s.mesh))?;
    let res = SteklovSolver::new(&mesh)?.spectrum(p.k_max + 2, p.cluster_tol)?;
    let courant = courant_check(&res, &mesh, p.k_max, zero_tol, p.n_random, s.courant_seed)?;
    let mut out = Outcome {
        rows: Vec::new(),
        courant_ok: courant.passed(),
        touch_ok: true,
        shape_ok: true,
        figures: Vec::new(),
        dumps: Vec::new(),
    };
    for row in &courant.rows {
        let f = &res.extensions[row.k];
        let dec = decompose_nodal(&mesh, f, zero_tol)?;
        let touch = dec.touches_steklov.iter().all(|&t| t);
        let stats = nodal_graph_stats(&dec, &mesh);
        // closed nodal loops or odd endpoint counts are impossible on a disk
        let shape = !disk || (stats.cycle_rank == 0 && stats.endpoints_even);
        out.touch_ok &= touch;
        out.shape_ok &= shape;
        if !(row.passed && touch && shape) {
            out.dumps.push((format!("sample_{index:03}_k{}", row.k), mesh.clone(), f.clone()));
        }
        if p.figures && index == 0 {
            out.figures.push((format!("nodal_k{:02}", row.k), nodal_svg(&dec, &mesh)));
        }
        out.rows.push(vec![
            index.into(),
            s.label.clone().into(),
            row.k.into(),
            res.eigenvalues[row.k].into(),
            format!("{}..{}", row.cluster[0], row.cluster[1]).into(),
            row.domains.into(),
            row.max_domains.into(),
            row.bound.into(),
            row.vectors_tested.into(),
            touch.into(),
            stats.cycle_rank.into(),
            stats.endpoints_even.into(),
        ]);
    }
    Ok(out)
}

pub(super) fn nodal_audit(p: &NodalAudit, seed: u64, tol: Option<f64>) -> Result<RunOutput> {
    let zero_tol = tol.unwrap_or(p.zero_tol);
    let [flo, fhi] = p.steklov_fraction_range;
    if p.domain.is_mixed() && !(0.0 < flo && flo <= fhi && fhi < 1.0) {
        return Err(Error::Parameter("steklov_fraction_range must lie inside (0, 1)".into()));
    }
    let base = match &p.domain {
        Domain::MixedDisk { radius, h, .. } => crate::geometry::make_disk_mesh(*radius, *h)?,
        d => d.build()?,
    };
    let disk = SurfaceTopology::of_mesh(&base)?.is_disk();
    // draw sequentially so the samples do not depend on the thread count
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(p.count);
    for _ in 0..p.count {
        let density = TrigDensity::random(&mut rng, p.max_mode, p.amplitude);
        let (mesh, label) = if p.domain.is_mixed() {
            let f = rng.random_range(flo..=fhi);
            let start = rng.random_range(0.0..std::f64::consts::TAU);
            (mixed_disk(&base, f, start)?, format!("steklov {f:.3} from {start:.3}"))
        } else {
            (base.clone(), "full".to_string())
        };
        samples.push(Sample { mesh, density, courant_seed: rng.random(), label });
    }
    let outcomes: Vec<Result<Outcome>> =
        samples.par_iter().enumerate().map(|(i, s)| audit_sample(p, i, s, zero_tol, disk)).collect();

    let mut report = ExperimentReport::new("nodal-audit", serde_json::Value::Null);
    let mut table = Table::new(
        "nodal_audit",
        &[
            "sample",
            "boundary",
            "k",
            "sigma",
            "cluster",
            "domains",
            "max_domains",
            "bound",
            "vectors_tested",
            "touches_steklov",
            "cycle_rank",
            "endpoints_even",
        ],
    );
    let mut out = RunOutput::new(ExperimentReport::new("nodal-audit", serde_json::Value::Null));
    let (mut courant_bad, mut touch_bad, mut shape_bad, mut errors) = (0usize, 0usize, 0usize, 0usize);
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                courant_bad += usize::from(!o.courant_ok);
                touch_bad += usize::from(!o.touch_ok);
                shape_bad += usize::from(!o.shape_ok);
                o.rows.into_iter().for_each(|r| table.push(r));
                out.figures.extend(o.figures);
                out.dumps.extend(o.dumps);
            }
            Err(e) => {
                errors += 1;
                report.failures.push(format!("sample {i}: {e}"));
            }
        }
    }
    report.tables.push(table);
    let n = p.count;
    report.checks.push(Check::flag(
        "nodal_courant",
        courant_bad == 0 && errors == 0 && n > 0,
        format!("{courant_bad} of {n} samples exceed k + 1 domains for some k <= {}", p.k_max),
    ));
    report.checks.push(Check::flag(
        "nodal_boundary_touch",
        touch_bad == 0 && errors == 0 && n > 0,
        format!("{touch_bad} of {n} samples have a nodal domain away from the Steklov boundary"),
    ));
    if disk {
        report.checks.push(Check::flag(
            "nodal_lines_acyclic",
            shape_bad == 0 && errors == 0 && n > 0,
            format!("{shape_bad} of {n} samples have a closed nodal loop or an odd number of boundary endpoints"),
        ));
    }
    out.report = report;
    Ok(out)
}

/// Eigenvalue multiplicities against the topological bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplicityAudit {
    pub domains: Vec<Domain>,
    /// Random densities per domain, after one uniform sample.
    pub count: usize,
    pub k_max: usize,
    pub max_mode: usize,
    pub amplitude: f64,
    pub cluster_tol: Option<f64>,
    /// Non-orientable surfaces are not representable as planar meshes; these
    /// rows are evaluated from the invariants alone, as `[euler_characteristic,
    /// boundary_components]`.
    pub non_orientable: Vec<[i64; 2]>,
}

impl Default for MultiplicityAudit {
    fn default() -> Self {
        MultiplicityAudit {
            domains: vec![
                Domain::Disk { radius: 1.0, h: 0.05 },
                Domain::Annulus { inner: 0.5, outer: 1.0, h: 0.05 },
                Domain::MixedDisk { radius: 1.0, h: 0.05, steklov_fraction: 0.5, start: 0.0 },
            ],
            count: 10,
            k_max: 6,
            max_mode: 4,
            amplitude: 0.5,
            cluster_tol: None,
            non_orientable: vec![[0, 1], [-1, 1]],
        }
    }
}

pub(super) fn multiplicity_audit(p: &MultiplicityAudit, seed: u64, tol: Option<f64>) -> Result<RunOutput> {
    let cluster_tol = tol.or(p.cluster_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for (d, domain) in p.domains.iter().enumerate() {
        let mesh = domain.build()?;
        let kind = if domain.is_mixed() { ProblemKind::SteklovNeumann } else { ProblemKind::Steklov };
        let topology = SurfaceTopology::of_mesh(&mesh)?;
        for s in 0..=p.count {
            // sample 0 is the uniform density
            let density = (s > 0).then(|| TrigDensity::random(&mut rng, p.max_mode, p.amplitude));
            jobs.push((d, s, mesh.clone(), kind, topology, density));
        }
    }
    let results: Vec<Result<crate::nodal::MultiplicityReport>> = jobs
        .par_iter()
        .map(|(_, _, mesh, kind, topology, density)| {
            let mesh = match density {
                Some(t) => mesh.with_edge_densities(&t.sample_edges(mesh))?,
                None => mesh.clone(),
            };
            let res = SteklovSolver::new(&mesh)?.spectrum(p.k_max + 3, cluster_tol)?;
            multiplicity_bound_check(&res, topology, *kind, p.k_max)
        })
        .collect();

    let mut report = ExperimentReport::new("multiplicity-audit", serde_json::Value::Null);
    let mut table = Table::new(
        "multiplicity",
        &["domain", "sample", "k", "multiplicity", "bound", "alternative", "margin", "label"],
    );
    let mut violations = 0usize;
    let mut min_margin = i64::MAX;
    for ((d, s, ..), r) in jobs.iter().zip(results) {
        match r {
            Ok(r) => {
                for row in r.rows {
                    violations += usize::from(!row.passed);
                    min_margin = min_margin.min(row.margin);
                    let alt = row.alternative.map(|a| a.to_string()).unwrap_or_default();
                    table.push(vec![
                        (*d).into(),
                        (*s).into(),
                        row.k.into(),
                        row.multiplicity.into(),
                        row.bound.into(),
                        alt.into(),
                        row.margin.into(),
                        row.label.into(),
                    ]);
                }
            }
            Err(e) => report.failures.push(format!("domain {d} sample {s}: {e}")),
        }
    }
    report.tables.push(table);

    let mut formal = Table::new(
        "multiplicity_bounds_non_orientable",
        &["euler_characteristic", "boundary_components", "p", "k", "bound", "alternative"],
    );
    for &[chi, l] in &p.non_orientable {
        let t = SurfaceTopology::non_orientable(chi, l as u32)?;
        for k in 1..=p.k_max as i64 {
            let b = 4 * t.p_invariant + 4 * k;
            formal.push(vec![chi.into(), l.into(), t.p_invariant.into(), k.into(), (b + 1).into(), (b + 3).into()]);
        }
    }
    report.tables.push(formal);
    report.checks.push(Check::flag(
        "multiplicity_bounds",
        violations == 0 && report.failures.is_empty() && !jobs.is_empty(),
        format!("{violations} violations over {} spectra, minimum margin {min_margin}", jobs.len()),
    ));
    Ok(RunOutput::new(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_nodal_audit_passes_and_is_deterministic() {
        let p = NodalAudit {
            count: 3,
            k_max: 4,
            n_random: 5,
            domain: Domain::Disk { radius: 1.0, h: 0.08 },
            ..Default::default()
        };
        let a = nodal_audit(&p, 3, None).unwrap();
        assert!(a.report.passed(), "{}", a.report.summary());
        assert!(a.dumps.is_empty());
        assert_eq!(a.figures.len(), 5);
        let b = nodal_audit(&p, 3, None).unwrap();
        assert_eq!(a.report.report_hash(), b.report.report_hash());
    }

    #[test]
    fn mixed_nodal_audit() {
        let p = NodalAudit {
            count: 3,
            k_max: 3,
            n_random: 5,
            figures: false,
            domain: Domain::MixedDisk { radius: 1.0, h: 0.08, steklov_fraction: 0.5, start: 0.0 },
            ..Default::default()
        };
        let a = nodal_audit(&p, 1, None).unwrap();
        assert!(a.report.passed(), "{}", a.report.summary());
        let t = a.report.table("nodal_audit").unwrap();
        let c = t.column("boundary").unwrap();
        assert!(t.rows.iter().all(|r| format!("{:?}", r[c]).contains("steklov")));
    }

    #[test]
    fn small_multiplicity_audit() {
        let p = MultiplicityAudit {
            domains: vec![Domain::Disk { radius: 1.0, h: 0.08 }, Domain::Annulus { inner: 0.5, outer: 1.0, h: 0.08 }],
            count: 2,
            k_max: 4,
            ..Default::default()
        };
        let out = multiplicity_audit(&p, 5, None).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.report.table("multiplicity").unwrap().rows.len(), 2 * 3 * 4);
    }
}
