use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{cross, norm, sub, PartitionedMesh};

/// Name of the discrete `H^{1/2}(Σ)` construction, carried in reports.
pub const GRAM_KIND: &str = "spectral-half";

/// Discrete `H^{1/2}(Σ)` Gram matrix on the `Σ` data vertices,
///
/// ```text
/// G = M^{1/2} (M^{-1/2} (M + r0² S) M^{-1/2})^{1/2} M^{1/2}
/// ```
///
/// with `M`, `S` the P1 surface mass and stiffness on `Σ`. Vector fields use
/// `G ⊗ I3`.
#[derive(Clone, Debug)]
pub struct SigmaGram {
    r0: f64,
    scalar: DMatrix<f64>,
    whitener: DMatrix<f64>,
    hash: String,
}

pub(crate) fn sym_power(a: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(bad) = eig.eigenvalues.iter().find(|&&v| !(v > 1e-14 * max)) {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: *bad });
    }
    let d = eig.eigenvalues.map(|v| v.powf(p));
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// `A ⊗ I3` in the interleaved dof layout `3a + i`.
pub fn expand3(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    DMatrix::from_fn(3 * m, 3 * m, |r, c| if r % 3 == c % 3 { a[(r / 3, c / 3)] } else { 0.0 })
}

impl SigmaGram {
    pub fn new(mesh: &PartitionedMesh) -> Result<Self> {
        let index: HashMap<usize, usize> =
            mesh.sigma_vertices().iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let m = index.len();
        let mut mass = DMatrix::zeros(m, m);
        let mut stiff = DMatrix::zeros(m, m);
        for f in mesh.sigma_faces() {
            let p = f.vertices.map(|v| mesh.vertices()[v]);
            let area = 0.5 * norm(&cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0])));
            let e = [sub(&p[2], &p[1]), sub(&p[0], &p[2]), sub(&p[1], &p[0])];
            for a in 0..3 {
                let Some(&ia) = index.get(&f.vertices[a]) else { continue };
                for b in 0..3 {
                    let Some(&ib) = index.get(&f.vertices[b]) else { continue };
                    mass[(ia, ib)] += area / 12.0 * if a == b { 2.0 } else { 1.0 };
                    let eab = e[a][0] * e[b][0] + e[a][1] * e[b][1] + e[a][2] * e[b][2];
                    stiff[(ia, ib)] += eab / (4.0 * area);
                }
            }
        }
        let r0 = mesh.r0();
        let m_half = sym_power(&mass, 0.5)?;
        let m_mhalf = sym_power(&mass, -0.5)?;
        let b = symmetrize(&m_mhalf * (&mass + &stiff * (r0 * r0)) * &m_mhalf);
        let scalar = symmetrize(&m_half * sym_power(&b, 0.5)? * &m_half);
        let whitener = symmetrize(sym_power(&scalar, -0.5)?);

        let mut h = Sha256::new();
        h.update(GRAM_KIND.as_bytes());
        h.update(r0.to_le_bytes());
        h.update((m as u64).to_le_bytes());
        for v in scalar.iter() {
            h.update(v.to_le_bytes());
        }
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { r0, scalar, whitener, hash })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Scalar Gram on the `Σ` data vertices.
    pub fn scalar(&self) -> &DMatrix<f64> {
        &self.scalar
    }

    /// `G ⊗ I3` on the trace unknowns.
    pub fn gram_half(&self) -> DMatrix<f64> {
        expand3(&self.scalar)
    }

    /// SHA-256 of the construction name, `r0` and the scalar Gram entries.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `(W ⊗ I3) T (W ⊗ I3)` with `W = G^{-1/2}`.
    pub fn whiten(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.scalar.nrows();
        assert_eq!(t.nrows(), 3 * m, "matrix does not match the trace space");
        let w = &self.whitener;
        // apply per displacement component pair (i, j)
        let mut out = DMatrix::zeros(3 * m, 3 * m);
        for i in 0..3 {
            for j in 0..3 {
                let block = DMatrix::from_fn(m, m, |a, b| t[(3 * a + i, 3 * b + j)]);
                let wb = w * block * w;
                for a in 0..m {
                    for b in 0..m {
                        out[(3 * a + i, 3 * b + j)] = wb[(a, b)];
                    }
                }
            }
        }
        out
    }

    /// `‖T‖⋆ = ‖G^{-1/2} T G^{-1/2}‖₂`.
    pub fn star_norm(&self, t: &DMatrix<f64>) -> f64 {
        spectral_norm(&self.whiten(t))
    }
}

/// Largest singular value; symmetric input goes through the eigensolver.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let asym = (a - a.transpose()).amax();
    if asym <= 1e-14 * scale {
        SymmetricEigen::new(symmetrize(a.clone()))
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        a.clone().svd(false, false).singular_values.max()
    }
}

/// `‖G^{-1/2} Δ G^{-1/2}‖₂` for an arbitrary SPD `gram_half` on the same
/// unknowns as `delta`.
pub fn dn_operator_norm(delta: &DMatrix<f64>, gram_half: &DMatrix<f64>) -> Result<f64> {
    if delta.shape() != gram_half.shape() || !gram_half.is_square() {
        return Err(Error::InvalidInput("shape mismatch between operator and Gram".into()));
    }
    let asym = (gram_half - gram_half.transpose()).amax();
    if asym > 1e-12 * gram_half.amax() {
        return Err(Error::InvalidInput("Gram matrix is not symmetric".into()));
    }
    let w = sym_power(&symmetrize(gram_half.clone()), -0.5)?;
    Ok(spectral_norm(&(&w * delta * &w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layered_cube;

    #[test]
    fn gram_is_spd_and_whitens_to_identity() {
        let mesh = build_layered_cube(1, 4, 0.0).unwrap();
        let g = SigmaGram::new(&mesh).unwrap();
        let gh = g.gram_half();
        let eig = SymmetricEigen::new(gh.clone());
        assert!(eig.eigenvalues.min() > 0.0);
        assert!((g.star_norm(&gh) - 1.0).abs() < 1e-10);
        assert!((g.star_norm(&(&gh * -2.5)) - 2.5).abs() < 1e-10);
        assert_eq!(g.star_norm(&DMatrix::zeros(gh.nrows(), gh.nrows())), 0.0);
        assert!((dn_operator_norm(&gh, &gh).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(g.hash().len(), 64);
    }

    #[test]
    fn gram_lies_between_l2_and_h1() {
        // the half power interpolates: M <= G <= M + r0² S in the Loewner order
        let mesh = build_layered_cube(1, 6, 0.0).unwrap();
        let g = SigmaGram::new(&mesh).unwrap();
        let m = mesh.sigma_vertices().len();
        let x = DMatrix::from_fn(m, 1, |i, _| ((i * 7 % 11) as f64 - 5.0) / 5.0);
        let gx = (x.transpose() * g.scalar() * &x)[(0, 0)];
        let mut mass = 0.0;
        // recompute mass quadratic form directly from the faces
        let idx: HashMap<usize, usize> =
            mesh.sigma_vertices().iter().enumerate().map(|(k, &v)| (v, k)).collect();
        for f in mesh.sigma_faces() {
            let p = f.vertices.map(|v| mesh.vertices()[v]);
            let area = 0.5 * norm(&cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0])));
            let val = f.vertices.map(|v| idx.get(&v).map_or(0.0, |&k| x[(k, 0)]));
            let s: f64 = val.iter().sum();
            let s2: f64 = val.iter().map(|v| v * v).sum();
            mass += area / 12.0 * (s * s + s2);
        }
        assert!(gx >= mass * (1.0 - 1e-12));
    }

    #[test]
    fn non_spd_gram_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(dn_operator_norm(&a, &a).is_err());
    }
}
