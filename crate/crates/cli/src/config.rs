//! Run configuration: one JSON document per run, validated before any work.

use std::fs;
use std::path::{Path, PathBuf};

use cosserat_core::constitutive::{MaterialConstants, SymmetryClass};
use cosserat_core::forms::BodyGrid;
use cosserat_core::solver::{Method, Preset};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Option<GridSpec>,
    pub configuration: Option<ConfigurationSpec>,
    pub displacement: Option<DisplacementSpec>,
    pub compat: Option<CompatSpec>,
    pub material: Option<PathBuf>,
    pub loads: Option<LoadSpec>,
    pub solve: Option<SolveSpec>,
    pub verify: Option<VerifySpec>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 3],
    /// Defaults to the unit cube.
    pub spacing: Option<[f64; 3]>,
    #[serde(default)]
    pub origin: [f64; 3],
}

impl GridSpec {
    pub fn build(&self) -> Result<BodyGrid, CliError> {
        let spacing = self.spacing.unwrap_or_else(|| self.dims.map(|n| 1.0 / n.max(1) as f64));
        BodyGrid::new(self.dims, spacing, self.origin).map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConfigurationSpec {
    Identity,
    Rigid {
        #[serde(default)]
        translation: [f64; 3],
        #[serde(default)]
        rotation: [f64; 3],
    },
    /// `y = x + amount·x₁·e₂`.
    Shear {
        #[serde(default = "one")]
        amount: f64,
    },
    /// Rotation about `e₃` by `rate·x₃` of both placement and frame.
    Twist { rate: f64 },
    /// Vertex CSV with `y` and the rotation vector of `Q`.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisplacementSpec {
    Rigid,
    Sine,
    Full,
    Csv { path: PathBuf },
}

impl DisplacementSpec {
    pub fn analytic(&self) -> Option<Preset> {
        match self {
            DisplacementSpec::Rigid => Some(Preset::Rigid),
            DisplacementSpec::Sine => Some(Preset::Sine),
            DisplacementSpec::Full => Some(Preset::Full),
            DisplacementSpec::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatSpec {
    pub source: StrainSource,
    #[serde(rename = "loop")]
    pub circuit: Option<LoopSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum StrainSource {
    /// Strain of a displacement preset.
    Integrable {
        #[serde(default = "sine")]
        field: Preset,
    },
    /// Unit translational defect on the `x₃` line through face `(i, j)`.
    Impulse { at: [usize; 2] },
    Csv { path: PathBuf, kind: CsvKind },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvKind {
    /// Vertex-sampled 1-form.
    Field,
    /// Edge cochain.
    Cochain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum LoopSpec {
    /// Boundary of the faces `[i0, i1) × [j0, j1)` in the plane `x₃ = k`.
    Rectangle { i: [usize; 2], j: [usize; 2], k: usize },
    /// Vertex path; consecutive vertices must be grid neighbours.
    Path(Vec<[usize; 3]>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoadSpec {
    Zero,
    Uniform {
        #[serde(default)]
        force: [f64; 3],
        #[serde(default)]
        torque: [f64; 3],
    },
    /// Manufactured loads for a displacement preset, with the exact field as
    /// boundary data.
    Mms { field: Preset, grids: Option<Vec<usize>> },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub criteria: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub class: SymmetryClass,
    #[serde(default)]
    pub constants: MaterialConstants,
}

fn one() -> f64 {
    1.0
}

fn sine() -> Preset {
    Preset::Sine
}

/// Parsed configuration together with the directory relative paths refer to.
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
    pub source: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

impl Loaded {
    pub fn read(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { config: empty(), base: PathBuf::from("."), source: None, bytes: Vec::new() });
        };
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base, source: Some(path.to_path_buf()), bytes })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn grid(&self) -> Result<BodyGrid, CliError> {
        self.config.grid.as_ref().ok_or_else(|| CliError::Config("config has no grid section".into()))?.build()
    }

    pub fn material(&self) -> Result<(PathBuf, MaterialFile), CliError> {
        let rel = self.config.material.as_ref().ok_or_else(|| CliError::Config("config names no material file".into()))?;
        let path = self.resolve(rel);
        let text = fs::read(&path)
            .map_err(|e| CliError::Config(format!("cannot read material file {}: {e}", path.display())))?;
        let m = serde_json::from_slice(&text)
            .map_err(|e| CliError::Config(format!("invalid material file {}: {e}", path.display())))?;
        Ok((path, m))
    }
}

fn empty() -> RunConfig {
    RunConfig {
        grid: None,
        configuration: None,
        displacement: None,
        compat: None,
        material: None,
        loads: None,
        solve: None,
        verify: None,
        output_dir: None,
    }
}
