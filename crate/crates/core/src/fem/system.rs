use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;

use super::element::{element_gradient, element_matrices, p1_gradients, sym};
use super::gram::SigmaGram;
use super::sparse::{conjugate_gradient, EnvelopeCholesky, Pattern};
use super::DnMatrix;
use crate::error::{invalid, Error, Result};
use crate::geometry::PartitionedMesh;
use crate::lame::{check_admissible, AdmissibleBox, LameVector};

/// Role of a displacement unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofClass {
    /// Interior vertex, solved for.
    Free(usize),
    /// Carries Dirichlet data on `Σ`; the index is its position in the trace vector.
    Sigma(usize),
    /// Boundary vertex off `Σ`, held at zero for DN data.
    Clamped,
}

/// Parameter-independent pieces of the discretization: sparsity pattern,
/// the per-subdomain matrices `A_j^λ` and `A_j^μ`, dof classes and the
/// `Σ` Gram matrix.
pub struct Operators {
    mesh: Arc<PartitionedMesh>,
    pattern: Pattern,
    lambda_parts: Vec<Vec<f64>>,
    mu_parts: Vec<Vec<f64>>,
    gradients: Vec<(f64, [[f64; 3]; 4])>,
    class: Vec<DofClass>,
    free: Vec<usize>,
    free_map: Vec<Option<usize>>,
    sigma: Vec<usize>,
    gram: Arc<SigmaGram>,
}

impl Operators {
    pub fn new(mesh: Arc<PartitionedMesh>) -> Result<Self> {
        let nv = mesh.n_vertices();
        let pattern = Pattern::from_tets(nv, mesh.tets());
        let gradients: Vec<(f64, [[f64; 3]; 4])> = mesh
            .tets()
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let p = t.map(|v| &mesh.vertices()[v]);
                p1_gradients(p).map_err(|_| Error::DegenerateTet { index: i, volume: 0.0 })
            })
            .collect::<Result<_>>()?;
        let ns = mesh.n_subdomains();
        let mut lambda_parts = vec![vec![0.0; pattern.nnz()]; ns];
        let mut mu_parts = vec![vec![0.0; pattern.nnz()]; ns];
        let locals: Vec<_> = gradients.par_iter().map(|(vol, g)| element_matrices(*vol, g)).collect();
        for ((t, &label), (al, am)) in mesh.tets().iter().zip(mesh.labels()).zip(&locals) {
            let j = label as usize - 1;
            for a in 0..4 {
                for b in 0..4 {
                    for i in 0..3 {
                        for k in 0..3 {
                            let pos = pattern.position(t[a], i, t[b], k);
                            lambda_parts[j][pos] += al[3 * a + i][3 * b + k];
                            mu_parts[j][pos] += am[3 * a + i][3 * b + k];
                        }
                    }
                }
            }
        }

        let mut class = vec![DofClass::Clamped; 3 * nv];
        let mut free = Vec::new();
        for v in 0..nv {
            if !mesh.is_boundary_vertex(v) {
                for i in 0..3 {
                    class[3 * v + i] = DofClass::Free(free.len());
                    free.push(3 * v + i);
                }
            }
        }
        let mut sigma = Vec::new();
        for &v in mesh.sigma_vertices() {
            for i in 0..3 {
                class[3 * v + i] = DofClass::Sigma(sigma.len());
                sigma.push(3 * v + i);
            }
        }
        if free.is_empty() {
            return invalid("mesh has no interior vertices");
        }
        let mut free_map = vec![None; 3 * nv];
        for (li, &g) in free.iter().enumerate() {
            free_map[g] = Some(li);
        }
        let gram = Arc::new(SigmaGram::new(&mesh)?);
        Ok(Self {
            mesh,
            pattern,
            lambda_parts,
            mu_parts,
            gradients,
            class,
            free,
            free_map,
            sigma,
            gram,
        })
    }

    pub fn mesh(&self) -> &Arc<PartitionedMesh> {
        &self.mesh
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn n_dofs(&self) -> usize {
        self.class.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Number of `Σ` trace unknowns (three per data vertex).
    pub fn n_sigma(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_dofs(&self) -> &[usize] {
        &self.sigma
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn dof_class(&self, dof: usize) -> DofClass {
        self.class[dof]
    }

    pub fn gram(&self) -> &Arc<SigmaGram> {
        &self.gram
    }

    /// Volume and barycentric gradients of tet `t`.
    pub fn element(&self, t: usize) -> &(f64, [[f64; 3]; 4]) {
        &self.gradients[t]
    }

    /// Values of `∂K/∂L_p` in the flat layout `(λ_1..λ_N, μ_1..μ_N)`:
    /// `A_j^λ` for `p < N`, `2 A_j^μ` after.
    pub fn derivative_values(&self, p: usize) -> Vec<f64> {
        let n = self.lambda_parts.len();
        if p < n {
            self.lambda_parts[p].clone()
        } else {
            self.mu_parts[p - n].iter().map(|v| 2.0 * v).collect()
        }
    }

    pub fn lambda_part(&self, j: usize) -> &[f64] {
        &self.lambda_parts[j]
    }

    pub fn mu_part(&self, j: usize) -> &[f64] {
        &self.mu_parts[j]
    }

    /// `Σ_j λ_j A_j^λ + 2 μ_j A_j^μ`.
    pub fn stiffness_values(&self, lame: &LameVector) -> Result<Vec<f64>> {
        if lame.len() != self.lambda_parts.len() {
            return invalid(format!(
                "{} parameter pairs for {} subdomains",
                lame.len(),
                self.lambda_parts.len()
            ));
        }
        let mut vals = vec![0.0; self.pattern.nnz()];
        for j in 0..lame.len() {
            let (l, m) = (lame.lambdas()[j], 2.0 * lame.mus()[j]);
            vals.par_iter_mut()
                .zip(self.lambda_parts[j].par_iter().zip(&self.mu_parts[j]))
                .for_each(|(v, (a, b))| *v += l * a + m * b);
        }
        Ok(vals)
    }

    /// Constant strain of a full displacement vector on every element.
    pub fn strains(&self, u: &[f64]) -> Vec<Matrix3<f64>> {
        self.mesh
            .tets()
            .par_iter()
            .zip(&self.gradients)
            .map(|(t, (_, g))| sym(&element_gradient(g, t, u)))
            .collect()
    }

    /// `∫_U ℂ ∇̂u : ∇̂v` by elementwise integration over the subdomains in
    /// `labels` (all of them when empty), with `ℂ` given per subdomain.
    pub fn element_pairing(&self, lame: &LameVector, u: &[f64], v: &[f64], labels: &[u32]) -> f64 {
        let eu = self.strains(u);
        let ev = self.strains(v);
        let mesh = &self.mesh;
        (0..mesh.tets().len())
            .filter(|&t| labels.is_empty() || labels.contains(&mesh.labels()[t]))
            .map(|t| {
                let j = mesh.labels()[t] as usize - 1;
                let (l, m) = (lame.lambdas()[j], lame.mus()[j]);
                let (a, b) = (&eu[t], &ev[t]);
                self.gradients[t].0 * (l * a.trace() * b.trace() + 2.0 * m * a.dot(b))
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverKind {
    /// Envelope Cholesky of the interior block.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient { rel_tol: f64 },
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Direct
    }
}

enum Solver {
    Direct(EnvelopeCholesky),
    Cg { rel_tol: f64 },
}

/// Stiffness for one parameter vector together with a factorization of its
/// interior block.
pub struct FemSystem {
    ops: Arc<Operators>,
    lame: LameVector,
    values: Vec<f64>,
    solver: Solver,
    admissible: bool,
    extensions: OnceLock<DMatrix<f64>>,
}

impl FemSystem {
    pub fn assemble(ops: &Arc<Operators>, lame: &LameVector) -> Result<Self> {
        Self::assemble_with(ops, lame, SolverKind::Direct)
    }

    pub fn assemble_with(ops: &Arc<Operators>, lame: &LameVector, kind: SolverKind) -> Result<Self> {
        let values = ops.stiffness_values(lame)?;
        let solver = match kind {
            SolverKind::Direct => Solver::Direct(EnvelopeCholesky::factor(
                &ops.pattern,
                &values,
                &ops.free_map,
                &ops.free,
            )?),
            SolverKind::ConjugateGradient { rel_tol } => Solver::Cg { rel_tol },
        };
        let (admissible, _) = check_admissible(lame, &AdmissibleBox::default());
        Ok(Self {
            ops: Arc::clone(ops),
            lame: lame.clone(),
            values,
            solver,
            admissible,
            extensions: OnceLock::new(),
        })
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    pub fn mesh(&self) -> &PartitionedMesh {
        &self.ops.mesh
    }

    pub fn lame(&self) -> &LameVector {
        &self.lame
    }

    pub fn stiffness_values(&self) -> &[f64] {
        &self.values
    }

    /// Whether the parameters lie in the default admissible box; assembly
    /// proceeds either way.
    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        self.ops.pattern.matvec(&self.values, u, &mut y);
        y
    }

    /// `uᵀ K v`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        self.apply(u).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn solve_free(&self, rhs: &mut [f64]) -> Result<()> {
        match &self.solver {
            Solver::Direct(chol) => {
                chol.solve_in_place(rhs);
                Ok(())
            }
            Solver::Cg { rel_tol } => {
                let b = rhs.to_vec();
                rhs.iter_mut().for_each(|v| *v = 0.0);
                conjugate_gradient(
                    &self.ops.pattern,
                    &self.values,
                    &self.ops.free_map,
                    &self.ops.free,
                    &b,
                    rhs,
                    *rel_tol,
                    20 * self.ops.free.len().max(100),
                )
                .map(|_| ())
            }
        }
    }

    /// Solves `K u = f` at interior dofs with `u = g` prescribed on every
    /// boundary dof. `g` and `load` are full-length; entries of `g` at
    /// interior dofs are ignored.
    pub fn solve(&self, g: &[f64], load: Option<&[f64]>) -> Result<Vec<f64>> {
        let ops = &self.ops;
        if g.len() != ops.n_dofs() || load.is_some_and(|f| f.len() != ops.n_dofs()) {
            return invalid("boundary or load vector has the wrong length");
        }
        let mut u = g.to_vec();
        for &d in &ops.free {
            u[d] = 0.0;
        }
        let ku = self.apply(&u);
        let mut rhs: Vec<f64> = ops
            .free
            .iter()
            .map(|&d| load.map_or(0.0, |f| f[d]) - ku[d])
            .collect();
        self.solve_free(&mut rhs)?;
        for (li, &d) in ops.free.iter().enumerate() {
            u[d] = rhs[li];
        }
        Ok(u)
    }

    /// Displacement with trace `psi` on `Σ` and zero on the rest of `∂Ω`.
    pub fn solve_dirichlet(&self, psi: &[f64]) -> Result<Vec<f64>> {
        if psi.len() != self.ops.n_sigma() {
            return invalid(format!(
                "trace vector has length {}, expected {}",
                psi.len(),
                self.ops.n_sigma()
            ));
        }
        let mut g = vec![0.0; self.ops.n_dofs()];
        for (k, &d) in self.ops.sigma.iter().enumerate() {
            g[d] = psi[k];
        }
        self.solve(&g, None)
    }

    /// Discrete harmonic extensions of the unit `Σ` traces, one column per
    /// trace unknown, over all dofs: the prolongation `P`.
    pub fn harmonic_extensions(&self) -> Result<&DMatrix<f64>> {
        if let Some(u) = self.extensions.get() {
            return Ok(u);
        }
        let ops = &self.ops;
        let (nf, ns, nd) = (ops.n_free(), ops.n_sigma(), ops.n_dofs());
        let mut cols: Vec<Vec<f64>> = vec![vec![0.0; nf]; ns];
        for (li, &d) in ops.free.iter().enumerate() {
            for p in ops.pattern.row(d) {
                if let DofClass::Sigma(k) = ops.class[ops.pattern.cols[p]] {
                    cols[k][li] = -self.values[p];
                }
            }
        }
        cols.par_iter_mut().try_for_each(|c| self.solve_free(c))?;
        let mut u = DMatrix::zeros(nd, ns);
        for (k, c) in cols.iter().enumerate() {
            for (li, &d) in ops.free.iter().enumerate() {
                u[(d, k)] = c[li];
            }
            u[(ops.sigma[k], k)] = 1.0;
        }
        Ok(self.extensions.get_or_init(|| u))
    }

    /// Schur complement of the stiffness onto the `Σ` trace unknowns.
    pub fn dn_matrix(&self) -> Result<DnMatrix> {
        let u = self.harmonic_extensions()?;
        let ops = &self.ops;
        let ns = ops.n_sigma();
        let rows: Vec<Vec<f64>> = ops
            .sigma
            .par_iter()
            .map(|&d| {
                let mut row = vec![0.0; ns];
                for p in ops.pattern.row(d) {
                    let c = ops.pattern.cols[p];
                    if ops.class[c] == DofClass::Clamped {
                        continue;
                    }
                    let kv = self.values[p];
                    for (k, r) in row.iter_mut().enumerate() {
                        *r += kv * u[(c, k)];
                    }
                }
                row
            })
            .collect();
        let entries = DMatrix::from_fn(ns, ns, |i, j| rows[i][j]);
        Ok(DnMatrix::new(entries, Arc::clone(&ops.gram)))
    }

    /// `Pᵀ A P` for a matrix `A` sharing the stiffness pattern.
    pub fn project(&self, vals: &[f64]) -> Result<DMatrix<f64>> {
        let u = self.harmonic_extensions()?;
        let ops = &self.ops;
        let ns = ops.n_sigma();
        let active: Vec<usize> = (0..ops.n_dofs())
            .filter(|&d| ops.class[d] != DofClass::Clamped)
            .collect();
        // A U on the active rows
        let au: Vec<Vec<f64>> = active
            .par_iter()
            .map(|&d| {
                let mut row = vec![0.0; ns];
                for p in ops.pattern.row(d) {
                    let c = ops.pattern.cols[p];
                    if ops.class[c] == DofClass::Clamped {
                        continue;
                    }
                    let a = vals[p];
                    for (k, r) in row.iter_mut().enumerate() {
                        *r += a * u[(c, k)];
                    }
                }
                row
            })
            .collect();
        let ua = DMatrix::from_fn(active.len(), ns, |r, k| u[(active[r], k)]);
        let aum = DMatrix::from_fn(active.len(), ns, |r, k| au[r][k]);
        Ok(ua.transpose() * aum)
    }
}
