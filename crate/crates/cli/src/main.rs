use std::fs;
use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use steklov_core::fem::SteklovSolver;
use steklov_core::geometry::{mesh_to_string, refine, write_mesh};
use steklov_core::graphs::{
    graph_laplacian_spectrum, graph_to_string, prescribe_spectrum, read_graph, write_graph, MetricGraph,
    PrescribeOptions,
};
use steklov_core::harness::{Domain, MultiplicityAudit, NodalAudit, SpectrumParams};
use steklov_core::thickening::{build_thickened_mesh, embed_graph, EmbeddingStyle, ThickeningSpec};
use steklov_core::{run, Experiment, ExperimentConfig, ExperimentKind, Mesh2D, RunOutput, SurfaceTopology};

/// Steklov eigenvalue experiments on planar triangulated domains.
#[derive(Parser, Debug)]
#[command(name = "steklov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML); flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance override (cluster, zero or prescriber tolerance, by kind).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mesh; printed to stdout unless --out is given.
    Mesh(MeshArgs),
    /// Steklov spectrum of a generated or stored mesh.
    Spectrum(SpectrumArgs),
    /// Complete graph whose Laplacian spectrum is the given targets.
    Prescribe(PrescribeArgs),
    /// Thickened mesh of a metric graph.
    Thicken(ThickenArgs),
    /// Run any experiment config.
    Run,
    /// Randomized nodal or multiplicity audit.
    Audit(AuditArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Shape {
    Disk,
    Annulus,
    MixedDisk,
}

#[derive(Args, Debug, Clone)]
struct DomainArgs {
    #[arg(long, value_enum, default_value = "disk")]
    shape: Shape,
    /// Outer radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Inner radius of the annulus.
    #[arg(long, default_value_t = 0.5)]
    inner: f64,
    /// Target element size.
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    /// Steklov share of the circle for the mixed disk; the rest is Neumann.
    #[arg(long, default_value_t = 0.5)]
    steklov_fraction: f64,
    /// Read the mesh from a file instead.
    #[arg(long, conflicts_with = "shape")]
    mesh: Option<PathBuf>,
}

impl DomainArgs {
    fn domain(&self) -> Domain {
        if let Some(p) = &self.mesh {
            return Domain::File { path: p.clone() };
        }
        match self.shape {
            Shape::Disk => Domain::Disk { radius: self.radius, h: self.h },
            Shape::Annulus => Domain::Annulus { inner: self.inner, outer: self.radius, h: self.h },
            Shape::MixedDisk => Domain::MixedDisk {
                radius: self.radius,
                h: self.h,
                steklov_fraction: self.steklov_fraction,
                start: 0.0,
            },
        }
    }
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Uniform midpoint refinements applied afterwards.
    #[arg(long, default_value_t = 0)]
    refine: usize,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 8)]
    n_eigs: usize,
    /// Nodal SVG per eigenfunction (written with --out).
    #[arg(long)]
    figures: bool,
}

#[derive(Args, Debug)]
struct PrescribeArgs {
    /// Target eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

#[derive(Args, Debug)]
struct ThickenArgs {
    /// Graph file; the complete graph on --vertices otherwise.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    vertices: usize,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value = "convex-boundary")]
    style: String,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Half-disk radius over strip half-width.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Print this many Steklov-Neumann eigenvalues of the result.
    #[arg(long, default_value_t = 0)]
    eigs: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AuditKind {
    Nodal,
    Multiplicity,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(value_enum)]
    kind: AuditKind,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when an experiment ran but one of its checks failed.
fn dispatch(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    match &cli.command {
        Command::Mesh(a) => mesh(a, c).map(|_| true),
        Command::Spectrum(a) => {
            let cfg = match &c.config {
                Some(_) => load(c, Some(ExperimentKind::Spectrum))?,
                None => ExperimentConfig::new(Experiment::Spectrum(SpectrumParams {
                    domain: a.domain.domain(),
                    n_eigs: a.n_eigs,
                    oracle: matches!(a.domain.shape, Shape::Disk) && a.domain.mesh.is_none(),
                    figures: a.figures,
                    ..Default::default()
                })),
            };
            experiment(cfg, c)
        }
        Command::Prescribe(a) => prescribe(a, c).map(|_| true),
        Command::Thicken(a) => thicken(a, c).map(|_| true),
        Command::Run => {
            if c.config.is_none() {
                bail!("run needs --config");
            }
            experiment(load(c, None)?, c)
        }
        Command::Audit(a) => {
            let kind = match a.kind {
                AuditKind::Nodal => ExperimentKind::NodalAudit,
                AuditKind::Multiplicity => ExperimentKind::MultiplicityAudit,
            };
            let cfg = match &c.config {
                Some(_) => load(c, Some(kind))?,
                None => {
                    let e = match a.kind {
                        AuditKind::Nodal => Experiment::NodalAudit(NodalAudit {
                            domain: a.domain.domain(),
                            count: a.count,
                            k_max: a.k_max,
                            ..Default::default()
                        }),
                        AuditKind::Multiplicity => Experiment::MultiplicityAudit(MultiplicityAudit {
                            domains: vec![a.domain.domain()],
                            count: a.count,
                            k_max: a.k_max,
                            ..Default::default()
                        }),
                    };
                    ExperimentConfig::new(e)
                }
            };
            experiment(cfg, c)
        }
    }
}

fn load(c: &Common, expect: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let path = c.config.as_ref().expect("checked by caller");
    let cfg = ExperimentConfig::load(path)?;
    if let Some(k) = expect {
        if cfg.kind() != k {
            bail!("{} has kind {:?}, expected {k:?}", path.display(), cfg.kind());
        }
    }
    Ok(cfg)
}

fn experiment(mut cfg: ExperimentConfig, c: &Common) -> Result<bool> {
    cfg.seed = c.seed.or(cfg.seed);
    cfg.tol = c.tol.or(cfg.tol);
    cfg.out = c.out.clone().or(cfg.out);
    let out: RunOutput = run(&cfg)?;
    if let Some(dir) = &cfg.out {
        out.write(dir)?;
        eprintln!("wrote {}", dir.display());
    }
    let mut text = out.report.summary();
    if cfg.out.is_none() {
        for t in &out.report.tables {
            text.push_str(&format!("\n# {}\n{}", t.name, t.to_csv()));
        }
    }
    emit(&text)?;
    for (name, ..) in &out.dumps {
        eprintln!("violation dumped: failures/{name}.msh");
    }
    Ok(out.report.passed())
}

fn output_file(c: &Common, name: &str) -> Result<Option<PathBuf>> {
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.join(name)))
        }
        None => Ok(None),
    }
}

fn describe(mesh: &Mesh2D) -> String {
    let topo = SurfaceTopology::of_mesh(mesh)
        .map(|t| format!("genus {}, {} boundary components", t.genus, t.boundary_components))
        .unwrap_or_else(|e| e.to_string());
    format!(
        "{} vertices, {} triangles, h_max {:.4}, area {:.6}, {topo}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.h_max(),
        mesh.area()
    )
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit_mesh(mesh: &Mesh2D, c: &Common, name: &str) -> Result<()> {
    match output_file(c, name)? {
        Some(p) => {
            write_mesh(mesh, &p)?;
            eprintln!("wrote {}", p.display());
        }
        None => emit(&mesh_to_string(mesh))?,
    }
    Ok(())
}

fn mesh(a: &MeshArgs, c: &Common) -> Result<()> {
    let mut m = a.domain.domain().build()?;
    for _ in 0..a.refine {
        m = refine(&m)?;
    }
    eprintln!("{}", describe(&m));
    emit_mesh(&m, c, "mesh.msh")
}

fn prescribe(a: &PrescribeArgs, c: &Common) -> Result<()> {
    let mut opts = PrescribeOptions { starts: a.starts, max_iters: a.max_iters, ..Default::default() };
    if let Some(s) = c.seed {
        opts.seed = s;
    }
    if let Some(t) = c.tol {
        opts.tol = t;
    }
    let mut targets = a.targets.clone();
    targets.sort_by(f64::total_cmp);
    let g = prescribe_spectrum(&targets, &opts)?;
    let lambda = graph_laplacian_spectrum(&g)?.eigenvalues;
    eprintln!("spectrum {:?}", &lambda[1..]);
    match output_file(c, "graph.txt")? {
        Some(p) => {
            write_graph(&g, &p)?;
            eprintln!("wrote {}", p.display());
        }
        None => emit(&graph_to_string(&g))?,
    }
    Ok(())
}

fn thicken(a: &ThickenArgs, c: &Common) -> Result<()> {
    let g = match &a.graph {
        Some(p) => read_graph(p)?,
        None => MetricGraph::complete(a.vertices, vec![a.length; a.vertices * (a.vertices - 1) / 2])?,
    };
    let style: EmbeddingStyle = a.style.parse()?;
    let e = embed_graph(&g, style)?;
    let spec = ThickeningSpec::new(g.clone(), e, a.eps, a.c, None)?;
    let m = build_thickened_mesh(&spec)?;
    eprintln!("{}", describe(&m));
    if a.eigs > 0 {
        let s = SteklovSolver::new(&m)?.spectrum(a.eigs, c.tol)?;
        let lambda = graph_laplacian_spectrum(&g)?.eigenvalues;
        let mut text = String::from("k,sigma,lambda,ratio\n");
        for (k, sigma) in s.eigenvalues.iter().enumerate() {
            text.push_str(&match lambda.get(k).filter(|_| k > 0) {
                Some(l) => format!("{k},{sigma:.10e},{l:.10e},{:.6}\n", sigma / l),
                None => format!("{k},{sigma:.10e},,\n"),
            });
        }
        emit(&text)?;
    }
    if a.eigs == 0 || c.out.is_some() {
        emit_mesh(&m, c, "thickened.msh")?;
    }
    Ok(())
}
