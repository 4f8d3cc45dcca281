use std::path::{Path, PathBuf};
use std::sync::Arc;

use lamedn::geometry::{build_layered_cube, MeshFile, PartitionedMesh};
use lamedn::lame::{AdmissibleBox, LameVector};
use lamedn::rongved::GammaVariant;
use serde::{Deserialize, Serialize};

/// Everything a run depends on. Every section has defaults, so `{}` is a
/// valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub mesh: MeshSpec,
    pub bounds: AdmissibleBox,
    pub seed: u64,
    pub solver: SolverSpec,
    /// Parameters for `forward`; uniform `(0.5, 1.0)` when absent.
    pub lame: Option<LamePairs>,
    pub thresholds: Thresholds,
    pub identity: IdentitySpec,
    pub derivative: DerivativeSpec,
    pub kernels: KernelSpec,
    pub q0: Q0Spec,
    pub probe: ProbeSpec,
    pub reconstruct: ReconstructSpec,
    pub ucp: UcpSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            mesh: MeshSpec::default(),
            bounds: AdmissibleBox::default(),
            seed: 0,
            solver: SolverSpec::Direct,
            lame: None,
            thresholds: Thresholds::default(),
            identity: IdentitySpec::default(),
            derivative: DerivativeSpec::default(),
            kernels: KernelSpec::default(),
            q0: Q0Spec::default(),
            probe: ProbeSpec::default(),
            reconstruct: ReconstructSpec::default(),
            ucp: UcpSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        AdmissibleBox::new(self.bounds.alpha0, self.bounds.beta0).map_err(|e| e.to_string())?;
        if let Some(l) = &self.lame {
            l.to_vector()?;
        }
        if let Some(l) = &self.reconstruct.truth {
            l.to_vector()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub layers: usize,
    pub cells: usize,
    pub margin: f64,
    /// A mesh file overrides the layered cube.
    pub file: Option<PathBuf>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { layers: 2, cells: 8, margin: 0.25, file: None }
    }
}

impl MeshSpec {
    pub fn build(&self) -> Result<Arc<PartitionedMesh>, String> {
        let mesh = match &self.file {
            Some(p) => MeshFile::read(p),
            None => build_layered_cube(self.layers, self.cells, self.margin),
        };
        mesh.map(Arc::new).map_err(|e| format!("mesh: {e}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverSpec {
    Direct,
    Cg { rel_tol: f64 },
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Direct
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LamePairs {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
}

impl LamePairs {
    pub fn to_vector(&self) -> Result<LameVector, String> {
        LameVector::new(self.lambdas.clone(), self.mus.clone()).map_err(|e| e.to_string())
    }
}

/// Acceptance thresholds; a violated one makes the command exit with 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub alessandrini: f64,
    pub frechet_fd: f64,
    pub remainder_slope: f64,
    pub dgamma_fd: f64,
    pub q0_min: f64,
    pub lipschitz_max: Option<f64>,
    pub reconstruct_error: f64,
    pub three_sphere_violation: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            alessandrini: 1e-8,
            frechet_fd: 1e-5,
            remainder_slope: 0.2,
            dgamma_fd: 1e-6,
            q0_min: 0.0,
            lipschitz_max: None,
            reconstruct_error: 1e-4,
            three_sphere_violation: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitySpec {
    pub pairs: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        Self { pairs: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativeSpec {
    pub base_points: usize,
    pub h: f64,
    pub remainder_steps: Vec<f64>,
}

impl Default for DerivativeSpec {
    fn default() -> Self {
        Self { base_points: 3, h: 1e-4, remainder_steps: vec![1e-2, 1e-3, 1e-4] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    /// Source height `c` on the `x3` axis.
    pub c: f64,
    pub upper: (f64, f64),
    pub lower: (f64, f64),
    pub variant: GammaVariant,
    /// Grid in the `x1, x3` plane: `x1 ∈ [-extent, extent]`, `x3 ∈ (0, 2 extent]`.
    pub extent: f64,
    pub points: usize,
    /// Lower-phase direction `(h, k)` for the derivative check.
    pub direction: (f64, f64),
    pub fd_step: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            c: 0.5,
            upper: (0.5, 1.0),
            lower: (0.8, 1.6),
            variant: GammaVariant::AsPrinted,
            extent: 2.0,
            points: 21,
            direction: (0.3, -0.2),
            fd_step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Q0Spec {
    pub samples: usize,
}

impl Default for Q0Spec {
    fn default() -> Self {
        Self { samples: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    pub pairs: usize,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { pairs: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSpec {
    /// Random admissible truth when absent.
    pub truth: Option<LamePairs>,
    /// Half-width of the uniform perturbation of the truth used as start.
    pub perturbation: f64,
    /// `‖Δ‖⋆ / ‖F(L_true)‖⋆` of the added noise.
    pub noise: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ReconstructSpec {
    fn default() -> Self {
        Self { truth: None, perturbation: 0.2, noise: 0.0, max_iters: 30, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcpSpec {
    pub fit: usize,
    pub test: usize,
    pub radii: [f64; 3],
    /// Source distances from the ball center.
    pub source_distance: (f64, f64),
    pub caccioppoli: (f64, f64),
    pub cone_rho: f64,
    pub cone_gamma3: f64,
    /// `r` as a fraction of `χ t0`.
    pub cone_r_fraction: f64,
    pub cone_members: usize,
    pub eps_small: f64,
    pub theta_bar: f64,
}

impl Default for UcpSpec {
    fn default() -> Self {
        Self {
            fit: 200,
            test: 200,
            radii: [0.25, 0.5, 1.0],
            source_distance: (1.25, 3.0),
            caccioppoli: (0.5, 1.0),
            cone_rho: 1.0,
            cone_gamma3: 0.5f64.atan(),
            cone_r_fraction: 0.3,
            cone_members: 50,
            eps_small: 10.0,
            theta_bar: 0.5,
        }
    }
}
