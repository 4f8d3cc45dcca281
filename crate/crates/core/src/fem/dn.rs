use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::gram::SigmaGram;
use super::system::{FemSystem, Operators};
use crate::error::{invalid, Result};
use crate::lame::LameVector;

/// Discrete local DN map on the `Σ` trace unknowns together with the Gram
/// matrix that defines `‖·‖⋆`.
#[derive(Clone, Debug)]
pub struct DnMatrix {
    entries: DMatrix<f64>,
    gram: Arc<SigmaGram>,
}

impl DnMatrix {
    pub fn new(entries: DMatrix<f64>, gram: Arc<SigmaGram>) -> Self {
        Self { entries, gram }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn gram(&self) -> &Arc<SigmaGram> {
        &self.gram
    }

    pub fn gram_half(&self) -> DMatrix<f64> {
        self.gram.gram_half()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `‖Λ − Λᵀ‖_F / ‖Λ‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.entries - self.entries.transpose()).norm() / self.entries.norm()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        let s = (&self.entries + self.entries.transpose()) * 0.5;
        SymmetricEigen::new(s).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    pub fn star_norm(&self) -> f64 {
        self.gram.star_norm(&self.entries)
    }

    /// `‖self − other‖⋆`.
    pub fn star_distance(&self, other: &DnMatrix) -> f64 {
        self.gram.star_norm(&(&self.entries - &other.entries))
    }

    pub fn with_entries(&self, entries: DMatrix<f64>) -> Self {
        Self { entries, gram: Arc::clone(&self.gram) }
    }
}

/// `⟨Λψ, φ⟩` evaluated as the energy pairing `∫ ℂ∇̂u_ψ : ∇̂u_φ` of the two
/// discrete solutions.
pub fn dn_bilinear(sys: &FemSystem, psi: &[f64], phi: &[f64]) -> Result<f64> {
    let u = sys.solve_dirichlet(psi)?;
    let v = sys.solve_dirichlet(phi)?;
    Ok(sys.energy(&u, &v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlessandriniResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of `∫(ℂ¹−ℂ²)∇̂u1:∇̂u2 = ⟨(Λ1−Λ2)u2, u1⟩`, where `u1` solves with
/// `L1` and trace `psi`, `u2` with `L2` and trace `phi`.
pub fn alessandrini_residual(
    ops: &Arc<Operators>,
    l1: &LameVector,
    l2: &LameVector,
    psi: &[f64],
    phi: &[f64],
) -> Result<AlessandriniResidual> {
    let s1 = FemSystem::assemble(ops, l1)?;
    let s2 = FemSystem::assemble(ops, l2)?;
    let d1 = s1.dn_matrix()?;
    let d2 = s2.dn_matrix()?;
    alessandrini_with(&s1, &s2, &d1, &d2, psi, phi)
}

/// As [`alessandrini_residual`] with systems and DN matrices already built.
pub fn alessandrini_with(
    s1: &FemSystem,
    s2: &FemSystem,
    d1: &DnMatrix,
    d2: &DnMatrix,
    psi: &[f64],
    phi: &[f64],
) -> Result<AlessandriniResidual> {
    let ops = s1.operators();
    if !Arc::ptr_eq(ops, s2.operators()) {
        return invalid("systems are built on different operators");
    }
    let u1 = s1.solve_dirichlet(psi)?;
    let u2 = s2.solve_dirichlet(phi)?;
    let diff = LameVector::new(
        s1.lame().lambdas().iter().zip(s2.lame().lambdas()).map(|(a, b)| a - b).collect(),
        s1.lame().mus().iter().zip(s2.lame().mus()).map(|(a, b)| a - b).collect(),
    )?;
    let lhs = ops.element_pairing(&diff, &u1, &u2, &[]);
    let delta = d1.entries() - d2.entries();
    let rhs = (DVector::from_column_slice(phi).transpose() * delta * DVector::from_column_slice(psi))[(0, 0)];
    let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::EPSILON);
    Ok(AlessandriniResidual { lhs, rhs, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layered_cube;
    use crate::lame::AdmissibleBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(n_layers: usize, n: usize) -> Arc<Operators> {
        Arc::new(Operators::new(Arc::new(build_layered_cube(n_layers, n, 0.0).unwrap())).unwrap())
    }

    #[test]
    fn dn_is_symmetric_positive_and_homogeneous() {
        let ops = ops(2, 4);
        let l = LameVector::new(vec![0.2, 1.4], vec![0.7, 1.9]).unwrap();
        let d = FemSystem::assemble(&ops, &l).unwrap().dn_matrix().unwrap();
        assert!(d.symmetry_defect() < 1e-10);
        assert!(d.min_eigenvalue() > 0.0);
        let d3 = FemSystem::assemble(&ops, &l.scaled(3.0)).unwrap().dn_matrix().unwrap();
        let gap = (d3.entries() - d.entries() * 3.0).amax();
        assert!(gap <= 1e-12 * d3.entries().amax());
    }

    #[test]
    fn bilinear_form_properties() {
        let ops = ops(2, 4);
        let l = LameVector::new(vec![0.2, 1.4], vec![0.7, 1.9]).unwrap();
        let sys = FemSystem::assemble(&ops, &l).unwrap();
        let dn = sys.dn_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi: Vec<f64> = (0..ops.n_sigma()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi: Vec<f64> = (0..ops.n_sigma()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let zero = vec![0.0; ops.n_sigma()];
        assert_eq!(dn_bilinear(&sys, &psi, &zero).unwrap(), 0.0);
        let a = dn_bilinear(&sys, &psi, &phi).unwrap();
        let b = dn_bilinear(&sys, &phi, &psi).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
        let m = (DVector::from_vec(psi.clone()).transpose() * dn.entries() * DVector::from_vec(phi.clone()))[(0, 0)];
        assert!((a - m).abs() <= 1e-10 * a.abs());
        let u = sys.solve_dirichlet(&psi).unwrap();
        let e = ops.element_pairing(&l, &u, &u, &[]);
        assert!((dn_bilinear(&sys, &psi, &psi).unwrap() - e).abs() <= 1e-10 * e);
    }

    #[test]
    fn dn_monotone_in_mu() {
        let ops = ops(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lo = FemSystem::assemble(&ops, &LameVector::uniform(1, 0.5, 1.0).unwrap()).unwrap();
        let hi = FemSystem::assemble(&ops, &LameVector::uniform(1, 0.5, 1.3).unwrap()).unwrap();
        let (dl, dh) = (lo.dn_matrix().unwrap(), hi.dn_matrix().unwrap());
        for _ in 0..20 {
            let psi = DVector::from_fn(ops.n_sigma(), |_, _| rng.gen_range(-1.0..1.0));
            let a = (psi.transpose() * dl.entries() * &psi)[(0, 0)];
            let b = (psi.transpose() * dh.entries() * &psi)[(0, 0)];
            assert!(b > a);
        }
    }

    #[test]
    fn alessandrini_identity() {
        let ops = ops(2, 4);
        let bx = AdmissibleBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let l1 = bx.sample(2, &mut rng);
        let l2 = bx.sample(2, &mut rng);
        let psi: Vec<f64> = (0..ops.n_sigma()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi: Vec<f64> = (0..ops.n_sigma()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = alessandrini_residual(&ops, &l1, &l2, &psi, &phi).unwrap();
        assert!(r.residual <= 1e-8, "{r:?}");
        let same = alessandrini_residual(&ops, &l1, &l1, &psi, &phi).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(same.rhs.abs() < 1e-12);
        let swapped = alessandrini_residual(&ops, &l2, &l1, &phi, &psi).unwrap();
        assert!((swapped.lhs + r.lhs).abs() <= 1e-10 * r.lhs.abs());
        assert!((swapped.rhs + r.rhs).abs() <= 1e-10 * r.rhs.abs());
    }
}
