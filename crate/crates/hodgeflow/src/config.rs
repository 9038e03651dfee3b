//! JSON-backed run configuration for the `hodgeflow` binary.
//!
//! A config file fully determines a run: mesh source, input field, parameter
//! grids, tolerances, seed, and output settings. The same config always
//! produces byte-identical output files, and every emitted table carries the
//! config hash in its header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{MeshKind, SimplicialManifold};

/// Mesh source: one of the built-in generators or an OFF file on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Disk { rings: usize, sectors: usize },
    Annulus { rings: usize, sectors: usize },
    Rectangle { nx: usize, ny: usize },
    Torus { nx: usize, ny: usize },
    Sphere { subdiv: usize },
    Off { path: PathBuf },
}

impl MeshSpec {
    pub fn build(&self) -> Result<SimplicialManifold> {
        match self {
            MeshSpec::Disk { rings, sectors } => {
                SimplicialManifold::generate(MeshKind::Disk { rings: *rings, sectors: *sectors })
            }
            MeshSpec::Annulus { rings, sectors } => SimplicialManifold::generate(
                MeshKind::Annulus { rings: *rings, sectors: *sectors },
            ),
            MeshSpec::Rectangle { nx, ny } => {
                SimplicialManifold::generate(MeshKind::Rectangle { nx: *nx, ny: *ny })
            }
            MeshSpec::Torus { nx, ny } => {
                SimplicialManifold::generate(MeshKind::Torus { nx: *nx, ny: *ny })
            }
            MeshSpec::Sphere { subdiv } => {
                SimplicialManifold::generate(MeshKind::Sphere { subdiv: *subdiv })
            }
            MeshSpec::Off { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read OFF file {}: {e}", path.display()))
                })?;
                SimplicialManifold::from_off_str(&text)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |n: usize, what: &str| {
            if n == 0 {
                Err(Error::Config(format!("{what} must be positive")))
            } else {
                Ok(())
            }
        };
        match self {
            MeshSpec::Disk { rings, sectors } | MeshSpec::Annulus { rings, sectors } => {
                positive(*rings, "rings")?;
                positive(*sectors, "sectors")
            }
            MeshSpec::Rectangle { nx, ny } | MeshSpec::Torus { nx, ny } => {
                positive(*nx, "nx")?;
                positive(*ny, "ny")
            }
            MeshSpec::Sphere { .. } => Ok(()),
            MeshSpec::Off { path } => {
                if path.is_file() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("OFF file {} does not exist", path.display())))
                }
            }
        }
    }
}

/// Input 1-field used by `decompose` and `onsager`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    /// Seeded uniform random edge values.
    #[default]
    Random,
    /// Rigid rotation (disk or annulus meshes).
    RigidRotation,
    /// Taylor-Green vortex (torus meshes).
    TaylorGreen,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn default_t_list() -> Vec<f64> {
    (0..6).map(|j| 0.1 * 0.5f64.powi(j)).collect()
}

fn default_s_list() -> Vec<f64> {
    (0..6).map(|j| 0.05 * 0.5f64.powi(j)).collect()
}

fn default_eps_list() -> Vec<f64> {
    (0..4).map(|j| 0.02 * 0.5f64.powi(j)).collect()
}

fn default_r_list() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}

fn default_tol() -> f64 {
    1e-8
}

/// One experiment run, fully specified.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub field: FieldSpec,
    /// Heat-flow times.
    #[serde(default = "default_t_list")]
    pub t_list: Vec<f64>,
    /// Commutator / vanishing-profile scales.
    #[serde(default = "default_s_list")]
    pub s_list: Vec<f64>,
    /// Mollification scales for the energy ledger.
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    /// Strip widths for coarea and product-estimate sweeps.
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Spectral truncation; `None` keeps every mode.
    #[serde(default)]
    pub modes: Option<usize>,
    /// Output directory; `None` writes to the current directory.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        for (name, grid) in [
            ("t_list", &self.t_list),
            ("s_list", &self.s_list),
            ("eps_list", &self.eps_list),
            ("r_list", &self.r_list),
        ] {
            if grid.is_empty() {
                return Err(Error::Config(format!("{name} must be non-empty")));
            }
            if grid.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Config(format!("{name} entries must be positive and finite")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.modes == Some(0) {
            return Err(Error::Config("modes must be positive when given".into()));
        }
        Ok(())
    }

    /// FNV-1a over the canonical JSON serialization; stable across runs and
    /// printed into every output header. Output location and format are
    /// excluded: the hash identifies the experiment, not where it is written.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = None;
        canon.format = OutputFormat::Csv;
        let text = serde_json::to_string(&canon).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
