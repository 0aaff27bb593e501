use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, RunOutput};
use crate::deformations::{collar_convergence_run, cylinder_formula_run, TrigDensity};
use crate::error::{Error, Result};
use crate::fem::{multiplicity_clusters, SteklovSolver};
use crate::graphs::{
    graph_laplacian_spectrum, graph_to_string, max_relative_error, prescribe_spectrum, read_graph, MetricGraph,
    PrescribeOptions,
};
use crate::nodal::{decompose_nodal, nodal_svg, DEFAULT_ZERO_TOL};
use crate::report::{Check, ExperimentReport, Table};
use crate::thickening::{graph_limit_run, EmbeddingStyle, GraphLimit};

fn merge(into: &mut ExperimentReport, from: ExperimentReport) {
    into.tables.extend(from.tables);
    into.checks.extend(from.checks);
    into.notes.extend(from.notes);
    into.failures.extend(from.failures);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub domain: Domain,
    pub n_eigs: usize,
    /// Steklov density; uniform when absent.
    pub density: Option<TrigDensity>,
    /// Compare a uniform all-Steklov disk with `sigma = ceil(k/2) / R`.
    pub oracle: bool,
    pub oracle_k: usize,
    pub oracle_threshold: f64,
    pub oracle_cluster_tol: f64,
    /// Nodal picture of every computed eigenfunction.
    pub figures: bool,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            domain: Domain::default(),
            n_eigs: 8,
            density: None,
            oracle: true,
            oracle_k: 4,
            oracle_threshold: 0.01,
            oracle_cluster_tol: 1e-2,
            figures: false,
        }
    }
}

pub(super) fn spectrum(p: &SpectrumParams, cluster_tol: Option<f64>) -> Result<RunOutput> {
    let mut mesh = p.domain.build()?;
    if let Some(d) = &p.density {
        mesh = mesh.with_edge_densities(&d.sample_edges(&mesh))?;
    }
    let res = SteklovSolver::new(&mesh)?.spectrum(p.n_eigs, cluster_tol)?;
    let mut report = ExperimentReport::new("spectrum", serde_json::Value::Null);
    let radius = match p.domain {
        Domain::Disk { radius, .. } if p.density.is_none() && p.oracle => Some(radius),
        _ => None,
    };
    let mut cols = vec!["k", "sigma", "cluster_start", "cluster_size"];
    if radius.is_some() {
        cols.extend(["oracle", "rel_err"]);
    }
    let mut table = Table::new("spectrum", &cols);
    let mut worst: f64 = 0.0;
    for (k, &s) in res.eigenvalues.iter().enumerate() {
        let c = res.cluster_of(k);
        let mut row = vec![k.into(), s.into(), c.start.into(), c.len().into()];
        if let Some(r) = radius {
            let exact = k.div_ceil(2) as f64 / r;
            let err = if k == 0 { s.abs() } else { (s - exact).abs() / exact };
            if (1..=p.oracle_k).contains(&k) {
                worst = worst.max(err);
            }
            row.extend([exact.into(), err.into()]);
        }
        table.push(row);
    }
    report.tables.push(table);
    report.notes.push(format!(
        "{} vertices, {} triangles, cluster tolerance {:.3e}",
        mesh.vertices().len(),
        mesh.triangles().len(),
        res.cluster_rel_tol
    ));
    if radius.is_some() {
        if p.oracle_k >= res.len() {
            return Err(Error::Parameter("oracle_k must be below n_eigs".into()));
        }
        report.checks.push(Check::at_most(
            "disk_oracle_max_rel_err",
            worst,
            p.oracle_threshold,
            format!("max relative error of sigma_1..sigma_{} against ceil(k/2)/R", p.oracle_k),
        ));
        let clusters = multiplicity_clusters(&res.eigenvalues, p.oracle_cluster_tol);
        let sizes: Vec<usize> =
            clusters.iter().filter(|c| c.start >= 1 && c.end <= p.oracle_k + 1).map(|c| c.len()).collect();
        let want = vec![2; p.oracle_k / 2];
        report.checks.push(Check::flag(
            "disk_cluster_pairs",
            sizes == want,
            format!("cluster sizes of sigma_1..sigma_{} at rel_tol {:e}: {sizes:?}", p.oracle_k, p.oracle_cluster_tol),
        ));
    }
    let mut out = RunOutput::new(report);
    if p.figures {
        for k in 0..res.len() {
            if let Ok(d) = decompose_nodal(&mesh, &res.extensions[k], DEFAULT_ZERO_TOL) {
                out.figures.push((format!("nodal_{k:02}"), nodal_svg(&d, &mesh)));
            }
        }
    }
    out.meshes.push(("domain".into(), mesh));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylinderFormula {
    pub circle_length: f64,
    pub half_widths: Vec<f64>,
    pub k_max: usize,
    pub target_h: f64,
    pub threshold: f64,
}

impl Default for CylinderFormula {
    fn default() -> Self {
        CylinderFormula {
            circle_length: std::f64::consts::TAU,
            half_widths: vec![0.5, 0.25, 0.125],
            k_max: 4,
            target_h: 0.02,
            threshold: 0.01,
        }
    }
}

pub(super) fn cylinder(p: &CylinderFormula) -> Result<RunOutput> {
    Ok(RunOutput::new(cylinder_formula_run(p.circle_length, &p.half_widths, p.k_max, p.target_h, p.threshold)?))
}

/// Collar convergence, plus the cylinder table when `cylinder` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollarSweep {
    pub circle_length: f64,
    pub widths: Vec<f64>,
    pub k_max: usize,
    pub elements_across: usize,
    pub threshold: f64,
    pub cylinder: Option<CylinderFormula>,
}

impl Default for CollarSweep {
    fn default() -> Self {
        CollarSweep {
            circle_length: std::f64::consts::TAU,
            widths: vec![0.2, 0.1, 0.05],
            k_max: 3,
            elements_across: 8,
            threshold: 0.02,
            cylinder: Some(CylinderFormula::default()),
        }
    }
}

pub(super) fn collar(p: &CollarSweep) -> Result<RunOutput> {
    let mut report = collar_convergence_run(p.circle_length, &p.widths, p.k_max, p.elements_across, p.threshold)?;
    report.kind = "collar-sweep".into();
    if let Some(c) = &p.cylinder {
        merge(&mut report, cylinder(c)?.report);
    }
    Ok(RunOutput::new(report))
}

/// A metric graph given inline or by a graph file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Complete graph when absent.
    pub edges: Option<Vec<[usize; 2]>>,
    /// One length per edge, or a single length for all.
    pub lengths: Vec<f64>,
    pub file: Option<PathBuf>,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec { vertices: 3, edges: None, lengths: vec![1.0], file: None }
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<MetricGraph> {
        if let Some(f) = &self.file {
            return read_graph(f);
        }
        let edges = self.edges.clone().unwrap_or_else(|| {
            let n = self.vertices;
            (0..n).flat_map(|a| (a + 1..n).map(move |b| [a, b])).collect()
        });
        let lengths = match self.lengths.as_slice() {
            [l] => vec![*l; edges.len()],
            ls => ls.to_vec(),
        };
        MetricGraph::new(self.vertices, edges, lengths)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphLimitParams {
    pub graph: GraphSpec,
    pub style: EmbeddingStyle,
    pub c: f64,
    pub eps: Vec<f64>,
    /// Defaults to `|S| - 1`.
    pub n_eigs: Option<usize>,
    pub spread_threshold: f64,
    pub oscillation_threshold: f64,
    pub write_meshes: bool,
}

impl Default for GraphLimitParams {
    fn default() -> Self {
        GraphLimitParams {
            graph: GraphSpec::default(),
            style: EmbeddingStyle::ConvexBoundary,
            c: 2.0,
            eps: vec![0.08, 0.04, 0.02, 0.01],
            n_eigs: None,
            spread_threshold: 0.05,
            oscillation_threshold: 0.1,
            write_meshes: true,
        }
    }
}

fn limit_output(g: MetricGraph, p: &GraphLimitParams) -> Result<RunOutput> {
    let n_eigs = p.n_eigs.unwrap_or(g.n_vertices() - 1);
    let cfg = GraphLimit {
        graph: g,
        style: p.style,
        c: p.c,
        eps: p.eps.clone(),
        n_eigs,
        spread_threshold: p.spread_threshold,
        oscillation_threshold: p.oscillation_threshold,
    };
    let (report, meshes) = graph_limit_run(&cfg)?;
    let mut out = RunOutput::new(report);
    if p.write_meshes {
        out.meshes = meshes.into_iter().map(|(e, m)| (format!("thickened_eps_{e}"), m)).collect();
    }
    Ok(out)
}

pub(super) fn graph_limit(p: &GraphLimitParams) -> Result<RunOutput> {
    limit_output(p.graph.build()?, p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescriptionPipeline {
    pub targets: Vec<f64>,
    pub prescribe: PrescribeOptions,
    pub limit: GraphLimitParams,
}

impl Default for PrescriptionPipeline {
    fn default() -> Self {
        PrescriptionPipeline {
            targets: vec![1.0, 1.0],
            prescribe: PrescribeOptions::default(),
            limit: GraphLimitParams { write_meshes: false, ..Default::default() },
        }
    }
}

/// Prescribe, embed, thicken, solve, and compare with the limit constant.
pub(super) fn pipeline(p: &PrescriptionPipeline, tol: Option<f64>) -> Result<RunOutput> {
    let mut opts = p.prescribe.clone();
    if let Some(t) = tol {
        opts.tol = t;
    }
    let g = prescribe_spectrum(&p.targets, &opts)?;
    let lambda = graph_laplacian_spectrum(&g)?.eigenvalues;
    let err = max_relative_error(&lambda[1..], &p.targets);
    let mut report = ExperimentReport::new("prescription-pipeline", serde_json::Value::Null);
    let mut edges = Table::new("prescribed_graph", &["edge", "v0", "v1", "length"]);
    for (i, (e, l)) in g.edges().iter().zip(g.lengths()).enumerate() {
        edges.push(vec![i.into(), e[0].into(), e[1].into(), (*l).into()]);
    }
    report.tables.push(edges);
    report.checks.push(Check::at_most(
        "pipeline_prescription_error",
        err,
        opts.tol,
        "max relative error of the prescribed graph spectrum",
    ));
    report.notes.push(format!("prescribed graph:\n{}", graph_to_string(&g)));
    let limit = match limit_output(g, &p.limit) {
        Ok(o) => o,
        Err(e) => {
            report.failures.push(format!("thickening: {e}"));
            return Ok(RunOutput::new(report));
        }
    };
    // ratios against the constant measured at the smallest eps
    if let Some(t) = limit.report.table("graph_limit") {
        let col = |n: &str| t.column(n).expect("graph_limit schema");
        let (ce, ck, cr) = (col("eps"), col("k"), col("ratio"));
        let smallest = *p.limit.eps.last().expect("nonempty");
        let at_last: Vec<f64> =
            t.rows.iter().filter(|r| r[ce].as_f64() == Some(smallest)).filter_map(|r| r[cr].as_f64()).collect();
        let constant = at_last.iter().sum::<f64>() / at_last.len().max(1) as f64;
        let mut cmp = Table::new("pipeline_vs_constant", &["eps", "k", "ratio", "constant", "deviation"]);
        for r in &t.rows {
            let ratio = r[cr].as_f64().unwrap_or(f64::NAN);
            cmp.push(vec![
                r[ce].clone(),
                r[ck].clone(),
                ratio.into(),
                constant.into(),
                ((ratio - constant) / constant).into(),
            ]);
        }
        report.tables.push(cmp);
    }
    merge(&mut report, limit.report);
    let mut out = RunOutput::new(report);
    out.meshes = limit.meshes;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescriberBatch {
    pub count: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub lo: f64,
    pub hi: f64,
    pub prescribe: PrescribeOptions,
    pub homogeneity_tol: f64,
}

impl Default for PrescriberBatch {
    fn default() -> Self {
        PrescriberBatch {
            count: 50,
            n_min: 2,
            n_max: 6,
            lo: 0.5,
            hi: 5.0,
            prescribe: PrescribeOptions::default(),
            homogeneity_tol: 1e-12,
        }
    }
}

/// Random sorted targets, prescription, and the scaling law of the result.
pub(super) fn prescriber_batch(p: &PrescriberBatch, seed: u64, tol: Option<f64>) -> Result<RunOutput> {
    if !(1 <= p.n_min && p.n_min <= p.n_max && 0.0 < p.lo && p.lo < p.hi) {
        return Err(Error::Parameter("need 1 <= n_min <= n_max and 0 < lo < hi".into()));
    }
    let mut opts = p.prescribe.clone();
    if let Some(t) = tol {
        opts.tol = t;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec<f64>, f64, u64)> = (0..p.count)
        .map(|_| {
            let n = rng.random_range(p.n_min..=p.n_max);
            let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(p.lo..=p.hi)).collect();
            t.sort_by(f64::total_cmp);
            (t, rng.random_range(0.1..10.0), rng.random())
        })
        .collect();
    let results: Vec<Result<(f64, f64)>> = draws
        .par_iter()
        .map(|(t, c, s)| {
            let g = prescribe_spectrum(t, &PrescribeOptions { seed: *s, ..opts.clone() })?;
            let base = graph_laplacian_spectrum(&g)?.eigenvalues;
            let err = max_relative_error(&base[1..], t);
            let scaled = g.with_lengths(g.lengths().iter().map(|l| l / c).collect())?;
            let sc = graph_laplacian_spectrum(&scaled)?.eigenvalues;
            let want: Vec<f64> = base[1..].iter().map(|x| c * x).collect();
            Ok((err, max_relative_error(&sc[1..], &want)))
        })
        .collect();
    let mut report = ExperimentReport::new("prescriber-batch", serde_json::Value::Null);
    let mut table = Table::new("prescriber", &["index", "n", "targets", "scale", "max_rel_err", "homogeneity_err"]);
    let (mut worst, mut worst_h) = (0.0f64, 0.0f64);
    for (i, ((t, c, _), r)) in draws.iter().zip(results).enumerate() {
        let ts = t.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
        match r {
            Ok((e, h)) => {
                worst = worst.max(e);
                worst_h = worst_h.max(h);
                table.push(vec![i.into(), t.len().into(), ts.into(), (*c).into(), e.into(), h.into()]);
            }
            Err(e) => report.failures.push(format!("targets [{ts}]: {e}")),
        }
    }
    report.tables.push(table);
    report.checks.push(Check::at_most(
        "prescriber_max_rel_err",
        worst,
        opts.tol,
        "worst max relative eigenvalue error over the batch (direct eigensolve)",
    ));
    report.checks.push(Check::at_most(
        "prescriber_homogeneity",
        worst_h,
        p.homogeneity_tol,
        "lengths l / c must scale the spectrum by c",
    ));
    Ok(RunOutput::new(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_spec_defaults_to_triangle() {
        let g = GraphSpec::default().build().unwrap();
        assert_eq!((g.n_vertices(), g.edges().len()), (3, 3));
        let s = GraphSpec { vertices: 2, edges: Some(vec![[0, 1]]), lengths: vec![2.0], file: None };
        assert_eq!(s.build().unwrap().lengths(), &[2.0]);
    }

    #[test]
    fn coarse_disk_spectrum() {
        let p = SpectrumParams { domain: Domain::Disk { radius: 1.0, h: 0.05 }, figures: true, ..Default::default() };
        let out = spectrum(&p, None).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.figures.len(), 8);
        assert_eq!(out.meshes.len(), 1);
    }

    #[test]
    fn small_batch() {
        let p = PrescriberBatch { count: 5, ..Default::default() };
        let out = prescriber_batch(&p, 9, None).unwrap();
        assert!(out.report.passed(), "{}", out.report.summary());
        assert_eq!(out.report.table("prescriber").unwrap().rows.len(), 5);
    }

    #[test]
    fn pipeline_records_embedding_failure() {
        // K_4 cannot be thickened with every vertex on the outer boundary
        let p = PrescriptionPipeline { targets: vec![1.0, 2.0, 3.0], ..Default::default() };
        let out = pipeline(&p, None).unwrap();
        assert!(!out.report.passed());
        assert!(out.report.failures[0].contains("outerplanar"));
        assert!(out.report.check("pipeline_prescription_error").unwrap().passed);
    }
}
