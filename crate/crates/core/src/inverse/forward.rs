use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{DnMatrix, FemSystem, Operators, SigmaGram, SolverKind};
use crate::geometry::PartitionedMesh;
use crate::lame::LameVector;

/// Everything that does not depend on `L`: the mesh, the per-subdomain
/// stiffness parts and the `Σ` Gram matrix. Immutable and shareable.
#[derive(Clone)]
pub struct ForwardContext {
    ops: Arc<Operators>,
    solver: SolverKind,
}

impl ForwardContext {
    pub fn new(mesh: Arc<PartitionedMesh>) -> Result<Self> {
        Ok(Self::from_operators(Arc::new(Operators::new(mesh)?)))
    }

    pub fn from_operators(ops: Arc<Operators>) -> Self {
        Self { ops, solver: SolverKind::Direct }
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    pub fn mesh(&self) -> &PartitionedMesh {
        self.ops.mesh()
    }

    pub fn gram(&self) -> &Arc<SigmaGram> {
        self.ops.gram()
    }

    pub fn n_subdomains(&self) -> usize {
        self.ops.mesh().n_subdomains()
    }

    pub fn system(&self, l: &LameVector) -> Result<FemSystem> {
        if l.len() != self.n_subdomains() {
            return Err(Error::InvalidInput(format!(
                "{} Lamé pairs for {} subdomains",
                l.len(),
                self.n_subdomains()
            )));
        }
        FemSystem::assemble_with(&self.ops, l, self.solver)
    }
}

/// `F(L)`, the discrete local DN map. Inadmissible `L` are accepted as long as
/// the stiffness stays positive definite.
pub fn forward(ctx: &ForwardContext, l: &LameVector) -> Result<DnMatrix> {
    ctx.system(l)?.dn_matrix()
}

/// `J_p = ∂Λ/∂L_p` at a base point, in the flat order `λ_1..λ_N, μ_1..μ_N`.
#[derive(Clone, Debug)]
pub struct Jacobian {
    base: LameVector,
    columns: Vec<DMatrix<f64>>,
}

impl Jacobian {
    pub fn base(&self) -> &LameVector {
        &self.base
    }

    pub fn columns(&self) -> &[DMatrix<f64>] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `F'(L)[H] = Σ_p H_p J_p`.
    pub fn directional(&self, h: &[f64]) -> Result<DMatrix<f64>> {
        if h.len() != self.columns.len() {
            return Err(Error::InvalidInput(format!(
                "direction has length {}, expected {}",
                h.len(),
                self.columns.len()
            )));
        }
        let m = self.columns[0].nrows();
        Ok(self.columns.iter().zip(h).fold(DMatrix::zeros(m, m), |acc, (j, &c)| acc + j * c))
    }

    /// Columns `vec(W J_p W)` with `W = G^{-1/2}`.
    pub fn whitened_stack(&self, gram: &SigmaGram) -> DMatrix<f64> {
        let cols: Vec<DMatrix<f64>> = self.columns.iter().map(|j| gram.whiten(j)).collect();
        let m = cols[0].nrows();
        DMatrix::from_fn(m * m, cols.len(), |r, p| cols[p].as_slice()[r])
    }
}

pub(crate) fn derivative_of(sys: &FemSystem) -> Result<Vec<DMatrix<f64>>> {
    let ops = sys.operators();
    let np = 2 * ops.mesh().n_subdomains();
    sys.harmonic_extensions()?;
    (0..np).into_par_iter().map(|p| sys.project(&ops.derivative_values(p))).collect()
}

/// Discrete Fréchet derivative `J_p = Pᵀ (∂K/∂L_p) P`.
pub fn frechet_derivative(ctx: &ForwardContext, l: &LameVector) -> Result<Jacobian> {
    let sys = ctx.system(l)?;
    Ok(Jacobian { base: l.clone(), columns: derivative_of(&sys)? })
}

pub(crate) fn forward_and_derivative(ctx: &ForwardContext, l: &LameVector) -> Result<(DnMatrix, Jacobian)> {
    let sys = ctx.system(l)?;
    let columns = derivative_of(&sys)?;
    Ok((sys.dn_matrix()?, Jacobian { base: l.clone(), columns }))
}
