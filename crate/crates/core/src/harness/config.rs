use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    CollarSweep, CylinderFormula, GraphLimitParams, MultiplicityAudit, NodalAudit, PrescriberBatch,
    PrescriptionPipeline, SpectrumParams,
};
use crate::deformations::{DensitySweep, SubdomainSweep};
use crate::error::{Error, Result};
use crate::geometry::{make_annulus_mesh, make_disk_mesh, read_mesh, tag_boundary, Arc, BoundaryTag, Mesh2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    DensitySweep,
    SubdomainSweep,
    CollarSweep,
    CylinderFormula,
    GraphLimit,
    PrescriptionPipeline,
    PrescriberBatch,
    NodalAudit,
    MultiplicityAudit,
}

impl ExperimentKind {
    pub fn randomized(self) -> bool {
        matches!(
            self,
            ExperimentKind::DensitySweep
                | ExperimentKind::PrescriberBatch
                | ExperimentKind::NodalAudit
                | ExperimentKind::MultiplicityAudit
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum(SpectrumParams),
    DensitySweep(DensitySweep),
    SubdomainSweep(SubdomainSweep),
    CollarSweep(CollarSweep),
    CylinderFormula(CylinderFormula),
    GraphLimit(GraphLimitParams),
    PrescriptionPipeline(PrescriptionPipeline),
    PrescriberBatch(PrescriberBatch),
    NodalAudit(NodalAudit),
    MultiplicityAudit(MultiplicityAudit),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Spectrum(_) => ExperimentKind::Spectrum,
            Experiment::DensitySweep(_) => ExperimentKind::DensitySweep,
            Experiment::SubdomainSweep(_) => ExperimentKind::SubdomainSweep,
            Experiment::CollarSweep(_) => ExperimentKind::CollarSweep,
            Experiment::CylinderFormula(_) => ExperimentKind::CylinderFormula,
            Experiment::GraphLimit(_) => ExperimentKind::GraphLimit,
            Experiment::PrescriptionPipeline(_) => ExperimentKind::PrescriptionPipeline,
            Experiment::PrescriberBatch(_) => ExperimentKind::PrescriberBatch,
            Experiment::NodalAudit(_) => ExperimentKind::NodalAudit,
            Experiment::MultiplicityAudit(_) => ExperimentKind::MultiplicityAudit,
        }
    }

    /// Defaults for `kind`.
    pub fn default_for(kind: ExperimentKind) -> Self {
        Self::from_params(kind, toml::Table::new()).expect("defaults are valid")
    }

    fn from_params(kind: ExperimentKind, params: toml::Table) -> Result<Self> {
        fn parse<T: serde::de::DeserializeOwned>(t: toml::Table) -> Result<T> {
            toml::Value::Table(t).try_into().map_err(|e| Error::Config(format!("params: {e}")))
        }
        Ok(match kind {
            ExperimentKind::Spectrum => Experiment::Spectrum(parse(params)?),
            ExperimentKind::DensitySweep => Experiment::DensitySweep(parse(params)?),
            ExperimentKind::SubdomainSweep => Experiment::SubdomainSweep(parse(params)?),
            ExperimentKind::CollarSweep => Experiment::CollarSweep(parse(params)?),
            ExperimentKind::CylinderFormula => Experiment::CylinderFormula(parse(params)?),
            ExperimentKind::GraphLimit => Experiment::GraphLimit(parse(params)?),
            ExperimentKind::PrescriptionPipeline => Experiment::PrescriptionPipeline(parse(params)?),
            ExperimentKind::PrescriberBatch => Experiment::PrescriberBatch(parse(params)?),
            ExperimentKind::NodalAudit => Experiment::NodalAudit(parse(params)?),
            ExperimentKind::MultiplicityAudit => Experiment::MultiplicityAudit(parse(params)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: ExperimentKind,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
    #[serde(default)]
    params: toml::Table,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig { seed: None, out: None, tol: None, experiment }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = ExperimentConfig {
            seed: raw.seed,
            out: raw.out,
            tol: raw.tol,
            experiment: Experiment::from_params(raw.kind, raw.params)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind().randomized() && self.seed.is_none() {
            return Err(Error::Config(format!("{:?} is randomized and needs a seed", self.kind())));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("tol must lie in (0, 1), got {t}")));
            }
        }
        Ok(())
    }

    pub(super) fn seed_required(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("this experiment needs a seed".into()))
    }
}

/// Planar domain for spectra and audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Disk {
        radius: f64,
        h: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
        h: f64,
    },
    /// Disk that is Steklov on the polar-angle arc `[start, start + 2 pi
    /// fraction)` and Neumann elsewhere.
    MixedDisk {
        radius: f64,
        h: f64,
        steklov_fraction: f64,
        #[serde(default)]
        start: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Default for Domain {
    fn default() -> Self {
        Domain::Disk { radius: 1.0, h: 0.02 }
    }
}

impl Domain {
    pub fn build(&self) -> Result<Mesh2D> {
        match self {
            Domain::Disk { radius, h } => make_disk_mesh(*radius, *h),
            Domain::Annulus { inner, outer, h } => make_annulus_mesh(*inner, *outer, *h),
            Domain::MixedDisk { radius, h, steklov_fraction, start } => {
                mixed_disk(&make_disk_mesh(*radius, *h)?, *steklov_fraction, *start)
            }
            Domain::File { path } => read_mesh(path),
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, Domain::MixedDisk { .. })
    }
}

/// Retags a disk so that only the arc `[start, start + 2 pi fraction)` is Steklov.
pub(super) fn mixed_disk(disk: &Mesh2D, fraction: f64, start: f64) -> Result<Mesh2D> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!("Steklov fraction must lie in (0, 1), got {fraction}")));
    }
    let tau = std::f64::consts::TAU;
    let s = start + fraction * tau;
    tag_boundary(disk, &[(Arc::Angle { start: s, end: start + tau }, BoundaryTag::Neumann)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_and_without_params() {
        let c = ExperimentConfig::from_toml("kind = \"spectrum\"\n").unwrap();
        assert_eq!(c.kind(), ExperimentKind::Spectrum);
        let c = ExperimentConfig::from_toml(
            "kind = \"nodal-audit\"\nseed = 3\n[params]\ncount = 4\n[params.domain]\nshape = \"annulus\"\ninner = 0.5\nouter = 1.0\nh = 0.1\n",
        )
        .unwrap();
        match c.experiment {
            Experiment::NodalAudit(p) => {
                assert_eq!(p.count, 4);
                assert!(matches!(p.domain, Domain::Annulus { .. }));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(ExperimentConfig::from_toml("kind = \"nope\""), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("kind = \"spectrum\"\ncolour = 1").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"spectrum\"\n[params]\nn_eig = 3").is_err());
        // randomized kinds need a seed
        assert!(ExperimentConfig::from_toml("kind = \"nodal-audit\"").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"spectrum\"\ntol = 2.0").is_err());
    }

    #[test]
    fn echo_round_trips_kind() {
        let c = ExperimentConfig::new(Experiment::default_for(ExperimentKind::GraphLimit));
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["kind"], "graph-limit");
        assert!(v["params"].is_object());
    }

    #[test]
    fn mixed_disk_fraction() {
        let d = Domain::MixedDisk { radius: 1.0, h: 0.05, steklov_fraction: 0.25, start: 1.0 };
        let m = d.build().unwrap();
        let s = m.boundary_length(BoundaryTag::Steklov) / m.total_boundary_length();
        assert!((s - 0.25).abs() < 0.02, "{s}");
    }
}
