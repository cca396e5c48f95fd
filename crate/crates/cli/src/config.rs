use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vortexlab::geometry::{SurfaceModel, SurfaceSpec};
use vortexlab::gl::{Functional, Potential, ProfileKind};
use vortexlab::harmonic::VortexConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSpec {
    /// (x, y) on the flat torus, (x, y, z) on embedded surfaces.
    pub at: Vec<f64>,
    pub degree: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiRule {
    NearestLattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Rule(PhiRule),
    Explicit(Vec<f64>),
}

impl Default for PhiSpec {
    fn default() -> Self {
        PhiSpec::Rule(PhiRule::NearestLattice)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormOptions {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
}

fn default_radii() -> Vec<f64> {
    vec![4e-2, 1e-2, 2.5e-3]
}

impl Default for RenormOptions {
    fn default() -> Self {
        RenormOptions { radii: default_radii() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeWOptions {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_w_iter")]
    pub max_iter: usize,
}

fn default_runs() -> usize {
    10
}

fn default_w_iter() -> usize {
    5000
}

impl Default for MinimizeWOptions {
    fn default() -> Self {
        MinimizeWOptions { runs: default_runs(), max_iter: default_w_iter() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Random,
    Planted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlRunOptions {
    #[serde(default = "default_functional")]
    pub functional: Functional,
    #[serde(default = "default_init")]
    pub init: InitKind,
    #[serde(default = "default_gl_iter")]
    pub max_iter: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_functional() -> Functional {
    Functional::Intrinsic
}

fn default_init() -> InitKind {
    InitKind::Random
}

fn default_gl_iter() -> usize {
    20_000
}

fn default_rel_tol() -> f64 {
    1e-6
}

impl Default for GlRunOptions {
    fn default() -> Self {
        GlRunOptions {
            functional: default_functional(),
            init: default_init(),
            max_iter: default_gl_iter(),
            rel_tol: default_rel_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOptions {
    #[serde(default = "default_profile_kind")]
    pub kind: ProfileKind,
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_profile_kind() -> ProfileKind {
    ProfileKind::Intrinsic
}

fn default_ts() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025, 0.0125]
}

fn default_grid() -> usize {
    2000
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { kind: default_profile_kind(), ts: default_ts(), grid: default_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectOptions {
    /// Field checkpoint, relative to the config file.
    pub checkpoint: String,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub budget: Option<usize>,
}

fn default_sigma() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionOptions {
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// ι_F; computed from the radial profiles when absent.
    #[serde(default)]
    pub iota: Option<f64>,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { sigma: default_sigma(), iota: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default = "default_potential")]
    pub potential: String,
    #[serde(default)]
    pub vortices: Vec<VortexSpec>,
    #[serde(default)]
    pub phi: PhiSpec,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub renorm: Option<RenormOptions>,
    #[serde(default)]
    pub minimize_w: Option<MinimizeWOptions>,
    #[serde(default)]
    pub gl: Option<GlRunOptions>,
    #[serde(default)]
    pub profile: Option<ProfileOptions>,
    #[serde(default)]
    pub detect: Option<DetectOptions>,
    #[serde(default)]
    pub expansion: Option<ExpansionOptions>,
}

fn default_potential() -> String {
    "gl".into()
}

/// A parsed config plus the directory that relative paths refer to.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(data: &[u8]) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_slice(data).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.check_static()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Loaded, CliError> {
        let data = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = RunConfig::from_json(&data)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(SurfaceSpec::Mesh { path: p }) = &mut config.surface {
            if Path::new(p.as_str()).is_relative() {
                *p = base_dir.join(&*p).to_string_lossy().into_owned();
            }
        }
        Ok(Loaded { config, base_dir })
    }

    /// Checks that need no surface.
    fn check_static(&self) -> Result<(), CliError> {
        self.potential()?;
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(CliError::Config(format!("epsilon {e} must be positive")));
        }
        for v in &self.vortices {
            if !(v.at.len() == 2 || v.at.len() == 3) || !v.at.iter().all(|x| x.is_finite()) {
                return Err(CliError::Config("vortex positions need 2 or 3 finite coordinates".into()));
            }
            if v.degree == 0 {
                return Err(CliError::Config("vortex degrees must be nonzero".into()));
            }
        }
        if let PhiSpec::Explicit(phi) = &self.phi {
            if !phi.iter().all(|x| x.is_finite()) {
                return Err(CliError::Config("phi entries must be finite".into()));
            }
        }
        if let Some(p) = &self.profile {
            if p.ts.is_empty() || !p.ts.iter().all(|t| *t > 0.0 && *t < 0.5) {
                return Err(CliError::Config("profile ratios t must lie in (0, 1/2)".into()));
            }
        }
        if let Some(r) = &self.renorm {
            if !r.radii.iter().all(|r| *r > 0.0 && r.is_finite()) {
                return Err(CliError::Config("renorm radii must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        Potential::from_name(&self.potential).map_err(|e| CliError::Config(format!("potential: {e}")))
    }

    pub fn surface(&self) -> Result<SurfaceModel, CliError> {
        let spec = self.surface.as_ref().ok_or_else(|| CliError::Config("this command needs a surface".into()))?;
        vortexlab::geometry::make_surface(spec).map_err(|e| CliError::Config(format!("surface: {e}")))
    }

    /// Vortices on `s`, with Σd = χ(S) enforced.
    pub fn vortices(&self, s: &SurfaceModel) -> Result<VortexConfig, CliError> {
        let total: i64 = self.vortices.iter().map(|v| v.degree as i64).sum();
        if total != s.euler_char {
            return Err(CliError::Config(format!(
                "vortex degrees sum to {total}, but they must sum to the Euler characteristic χ = {}",
                s.euler_char
            )));
        }
        let points = self
            .vortices
            .iter()
            .map(|v| Vector3::new(v.at[0], v.at[1], v.at.get(2).copied().unwrap_or(0.0)))
            .collect();
        let cfg = VortexConfig::new(points, self.vortices.iter().map(|v| v.degree).collect())
            .and_then(|c| c.validated(s))
            .map_err(|e| CliError::Config(format!("vortices: {e}")))?;
        Ok(cfg)
    }

    pub fn epsilons(&self) -> Result<Vec<f64>, CliError> {
        if self.epsilon.is_empty() {
            return Err(CliError::Config("this command needs a nonempty epsilon list".into()));
        }
        let mut e = self.epsilon.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        Ok(e)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config("this command is stochastic and needs a seed".into()))
    }

    /// SHA-256 of the canonical JSON form (sorted keys).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}
