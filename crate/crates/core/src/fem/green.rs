use std::sync::Arc;

use nalgebra::Matrix3;
use rayon::prelude::*;

use super::element::{element_gradient, sym};
use super::system::{FemSystem, Operators};
use crate::error::{Error, Result};
use crate::geometry::{PointLocator, Point3};
use crate::lame::{poisson_ratio, LameVector};
use crate::quadrature::tet_rule;
use crate::rongved::{kelvin_displacement_gradient, kelvin_matrix};

/// Where the point force sits relative to `Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourcePlacement {
    /// Inside a subdomain, away from interfaces and `∂Ω`: `G = Γ + w`.
    Interior,
    /// Outside `Ω` above `Σ`, in the glued layer where `ℂ` is extended by
    /// `λ = 0, μ = 1`. Restricted to `Ω` the singular solution is realized as
    /// the discrete solution whose `Σ` trace is the Kelvin field of the
    /// extension tensor.
    Exterior,
}

/// Lamé pair of the tensor used to extend `ℂ` above `Σ`.
pub const EXTENSION_LAME: (f64, f64) = (0.0, 1.0);

/// Singular solution `G(·, y) l`.
#[derive(Clone)]
pub struct GreenFunction {
    ops: Arc<Operators>,
    y: Point3,
    l: [f64; 3],
    placement: SourcePlacement,
    mu_y: f64,
    nu_y: f64,
    field: Vec<f64>,
}

/// Edge of a cube cell with the volume of the largest tetrahedron.
fn cell_size(ops: &Operators) -> f64 {
    let vmax = ops.mesh().volumes().iter().fold(0.0f64, |m, &v| m.max(v));
    (6.0 * vmax).cbrt()
}

impl GreenFunction {
    pub fn source(&self) -> Point3 {
        self.y
    }

    pub fn direction(&self) -> [f64; 3] {
        self.l
    }

    pub fn placement(&self) -> SourcePlacement {
        self.placement
    }

    /// The finite element part: the correction `w` for interior sources, the
    /// whole field for exterior ones.
    pub fn field(&self) -> &[f64] {
        &self.field
    }

    /// Value at `x`, which must lie in `Ω`.
    pub fn value(&self, locator: &PointLocator, x: &Point3) -> Result<[f64; 3]> {
        let (t, bary) = locator
            .locate(x)
            .ok_or_else(|| Error::InvalidInput(format!("point {x:?} is outside the mesh")))?;
        let tet = self.ops.mesh().tets()[t];
        let mut v = [0.0; 3];
        for (a, &vert) in tet.iter().enumerate() {
            for i in 0..3 {
                v[i] += bary[a] * self.field[3 * vert + i];
            }
        }
        if self.placement == SourcePlacement::Interior {
            let g = kelvin_matrix(x, &self.y, self.mu_y, self.nu_y)?;
            for i in 0..3 {
                v[i] += (0..3).map(|j| g[(i, j)] * self.l[j]).sum::<f64>();
            }
        }
        Ok(v)
    }

    /// Strain at `x` in tet `t`.
    pub fn strain(&self, t: usize, x: &Point3) -> Result<Matrix3<f64>> {
        let (_, g) = self.ops.element(t);
        let mut e = sym(&element_gradient(g, &self.ops.mesh().tets()[t], &self.field));
        if self.placement == SourcePlacement::Interior {
            e += sym(&kelvin_displacement_gradient(x, &self.y, &self.l, self.mu_y, self.nu_y)?);
        }
        Ok(e)
    }
}

/// `Σ` trace of the Kelvin field of the extension tensor for a source `y`
/// outside `Ω`.
pub fn exterior_trace(ops: &Operators, y: &Point3, l: &[f64; 3]) -> Result<Vec<f64>> {
    let (lam, mu) = EXTENSION_LAME;
    let nu = poisson_ratio(lam, mu)?;
    let mesh = ops.mesh();
    let mut psi = vec![0.0; ops.n_sigma()];
    for (k, &v) in mesh.sigma_vertices().iter().enumerate() {
        let g = kelvin_matrix(&mesh.vertices()[v], y, mu, nu)?;
        for i in 0..3 {
            psi[3 * k + i] = (0..3).map(|j| g[(i, j)] * l[j]).sum();
        }
    }
    Ok(psi)
}

/// Green function of `div(ℂ∇̂·)` on `Ω` with zero Dirichlet data, for a
/// source inside a subdomain at distance at least two cells from every
/// interface and from `∂Ω`.
pub fn green_function(sys: &FemSystem, y: &Point3, l: &[f64; 3]) -> Result<GreenFunction> {
    let ops = sys.operators();
    let mesh = ops.mesh();
    let locator = PointLocator::new(mesh);
    let (ty, _) = locator
        .locate(y)
        .ok_or_else(|| Error::InvalidSource(*y, "outside the mesh".into()))?;
    let h = cell_size(ops);
    let dist = mesh.distance_to_interfaces_and_boundary(y);
    if dist < 2.0 * h {
        return Err(Error::InvalidSource(
            *y,
            format!("distance {dist:.4} to interfaces or boundary is below two cells ({:.4})", 2.0 * h),
        ));
    }
    let jy = mesh.labels()[ty] as usize - 1;
    let lame = sys.lame();
    let (lam_y, mu_y) = (lame.lambdas()[jy], lame.mus()[jy]);
    let nu_y = poisson_ratio(lam_y, mu_y)?;
    let n = ops.n_dofs();

    // load: −∫(ℂ−ℂ_y)∇̂(Γl):∇̂φ
    let contributions: Vec<(usize, [f64; 12])> = (0..mesh.tets().len())
        .into_par_iter()
        .filter_map(|t| {
            let j = mesh.labels()[t] as usize - 1;
            let (dl, dm) = (lame.lambdas()[j] - lam_y, lame.mus()[j] - mu_y);
            if dl == 0.0 && dm == 0.0 {
                return None;
            }
            let tet = mesh.tets()[t];
            let p = tet.map(|v| &mesh.vertices()[v]);
            let mut e = Matrix3::zeros();
            for (x, w) in tet_rule(p, 3) {
                let du = kelvin_displacement_gradient(&x, y, l, mu_y, nu_y).ok()?;
                e += sym(&du) * w;
            }
            let s = e * (2.0 * dm) + Matrix3::identity() * (dl * e.trace());
            let (_, g) = ops.element(t);
            let mut out = [0.0; 12];
            for a in 0..4 {
                for i in 0..3 {
                    out[3 * a + i] = -(0..3).map(|k| s[(i, k)] * g[a][k]).sum::<f64>();
                }
            }
            Some((t, out))
        })
        .collect();
    let mut load = vec![0.0; n];
    for (t, c) in contributions {
        for (a, &v) in mesh.tets()[t].iter().enumerate() {
            for i in 0..3 {
                load[3 * v + i] += c[3 * a + i];
            }
        }
    }
    let mut g = vec![0.0; n];
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            let k = kelvin_matrix(&mesh.vertices()[v], y, mu_y, nu_y)?;
            for i in 0..3 {
                g[3 * v + i] = -(0..3).map(|j| k[(i, j)] * l[j]).sum::<f64>();
            }
        }
    }
    let field = sys.solve(&g, Some(&load))?;
    Ok(GreenFunction {
        ops: Arc::clone(ops),
        y: *y,
        l: *l,
        placement: SourcePlacement::Interior,
        mu_y,
        nu_y,
        field,
    })
}

/// Singular solution for a source outside `Ω` (see [`SourcePlacement::Exterior`]).
pub fn exterior_singular_solution(sys: &FemSystem, y: &Point3, l: &[f64; 3]) -> Result<GreenFunction> {
    let ops = sys.operators();
    if PointLocator::new(ops.mesh()).locate(y).is_some() {
        return Err(Error::InvalidSource(*y, "exterior source lies inside the mesh".into()));
    }
    let psi = exterior_trace(ops, y, l)?;
    let field = sys.solve_dirichlet(&psi)?;
    let (lam, mu) = EXTENSION_LAME;
    Ok(GreenFunction {
        ops: Arc::clone(ops),
        y: *y,
        l: *l,
        placement: SourcePlacement::Exterior,
        mu_y: mu,
        nu_y: poisson_ratio(lam, mu)?,
        field,
    })
}

fn singular(sys: &FemSystem, y: &Point3, l: &[f64; 3], placement: SourcePlacement) -> Result<GreenFunction> {
    match placement {
        SourcePlacement::Interior => green_function(sys, y, l),
        SourcePlacement::Exterior => exterior_singular_solution(sys, y, l),
    }
}

const E: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// `S(y,z)_{ab} = ∫_U (ℂ−ℂ̄) ∇̂G(·,y)e_a : ∇̂Ḡ(·,z)e_b` over the subdomains in
/// `labels` (all when empty). `sys` carries `ℂ`, `sys_bar` carries `ℂ̄`.
pub fn sensitivity_kernel_with(
    sys: &FemSystem,
    sys_bar: &FemSystem,
    y: &Point3,
    z: &Point3,
    labels: &[u32],
    placement: SourcePlacement,
) -> Result<Matrix3<f64>> {
    if y == z {
        return Err(Error::InvalidSource(*y, "y and z coincide".into()));
    }
    let ops = sys.operators();
    let mesh = ops.mesh();
    let (l, lb) = (sys.lame(), sys_bar.lame());
    let active: Vec<usize> = (0..mesh.tets().len())
        .filter(|&t| {
            let j = mesh.labels()[t] as usize - 1;
            (labels.is_empty() || labels.contains(&mesh.labels()[t]))
                && (l.lambdas()[j] != lb.lambdas()[j] || l.mus()[j] != lb.mus()[j])
        })
        .collect();
    if active.is_empty() {
        return Ok(Matrix3::zeros());
    }
    if placement == SourcePlacement::Interior {
        let locator = PointLocator::new(mesh);
        for p in [y, z] {
            if let Some((t, _)) = locator.locate(p) {
                if active.contains(&t) {
                    return Err(Error::InvalidSource(*p, "source lies where the tensors differ".into()));
                }
            }
        }
    }
    let g: Vec<GreenFunction> = (0..3).map(|a| singular(sys, y, &E[a], placement)).collect::<Result<_>>()?;
    let gb: Vec<GreenFunction> =
        (0..3).map(|b| singular(sys_bar, z, &E[b], placement)).collect::<Result<_>>()?;
    let order = if placement == SourcePlacement::Interior { 3 } else { 2 };
    let parts: Vec<Matrix3<f64>> = active
        .par_iter()
        .map(|&t| -> Result<Matrix3<f64>> {
            let j = mesh.labels()[t] as usize - 1;
            let (dl, dm) = (l.lambdas()[j] - lb.lambdas()[j], l.mus()[j] - lb.mus()[j]);
            let p = mesh.tets()[t].map(|v| &mesh.vertices()[v]);
            let mut s = Matrix3::zeros();
            for (x, w) in tet_rule(p, order) {
                let ea: Vec<Matrix3<f64>> = g.iter().map(|f| f.strain(t, &x)).collect::<Result<_>>()?;
                let eb: Vec<Matrix3<f64>> = gb.iter().map(|f| f.strain(t, &x)).collect::<Result<_>>()?;
                for a in 0..3 {
                    let sig = ea[a] * (2.0 * dm) + Matrix3::identity() * (dl * ea[a].trace());
                    for b in 0..3 {
                        s[(a, b)] += w * sig.dot(&eb[b]);
                    }
                }
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold(Matrix3::zeros(), |acc, p| acc + p))
}

pub fn sensitivity_kernel(
    ops: &Arc<Operators>,
    l: &LameVector,
    lbar: &LameVector,
    y: &Point3,
    z: &Point3,
    labels: &[u32],
    placement: SourcePlacement,
) -> Result<Matrix3<f64>> {
    let sys = FemSystem::assemble(ops, l)?;
    let sys_bar = FemSystem::assemble(ops, lbar)?;
    sensitivity_kernel_with(&sys, &sys_bar, y, z, labels, placement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::system::Operators;
    use crate::geometry::build_layered_cube;
    use nalgebra::DVector;

    fn ops(n_layers: usize, n: usize) -> Arc<Operators> {
        Arc::new(Operators::new(Arc::new(build_layered_cube(n_layers, n, 0.0).unwrap())).unwrap())
    }

    #[test]
    fn zero_direction_gives_zero_field() {
        let ops = ops(1, 6);
        let sys = FemSystem::assemble(&ops, &LameVector::uniform(1, 0.5, 1.0).unwrap()).unwrap();
        let g = green_function(&sys, &[0.5, 0.5, 0.5], &[0.0; 3]).unwrap();
        assert!(g.field().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_sources_near_interfaces() {
        let ops = ops(2, 8);
        let sys = FemSystem::assemble(&ops, &LameVector::new(vec![0.5, 0.3], vec![1.0, 1.5]).unwrap()).unwrap();
        assert!(green_function(&sys, &[0.5, 0.5, 0.55], &E[0]).is_err());
        assert!(green_function(&sys, &[0.5, 0.5, 0.95], &E[0]).is_err());
        assert!(green_function(&sys, &[0.5, 0.5, 0.75], &E[0]).is_ok());
        assert!(exterior_singular_solution(&sys, &[0.5, 0.5, 0.5], &E[0]).is_err());
    }

    #[test]
    fn correction_is_small_in_a_large_box() {
        // unit cube scaled up around the source: w → 0 near y relative to Γ
        let base = build_layered_cube(1, 8, 0.0).unwrap();
        let mut file = crate::geometry::MeshFile::from_mesh(&base);
        file.vertices.iter_mut().for_each(|v| *v = 8.0 * (*v - 0.5));
        let big = Arc::new(Operators::new(Arc::new(file.into_mesh().unwrap())).unwrap());
        let sys = FemSystem::assemble(&big, &LameVector::uniform(1, 0.5, 1.0).unwrap()).unwrap();
        let g = green_function(&sys, &[0.0, 0.0, 0.0], &E[2]).unwrap();
        let loc = PointLocator::new(big.mesh());
        let x = [0.5, 0.0, 0.3];
        let total = g.value(&loc, &x).unwrap();
        let nu = poisson_ratio(0.5, 1.0).unwrap();
        let k = kelvin_matrix(&x, &[0.0; 3], 1.0, nu).unwrap();
        let corr = (total[2] - k[(2, 2)]).abs();
        assert!(corr < 0.2 * k[(2, 2)], "{corr} vs {}", k[(2, 2)]);
    }

    #[test]
    fn green_symmetry() {
        let ops = ops(2, 12);
        let l = LameVector::new(vec![0.5, 0.3], vec![1.0, 1.6]).unwrap();
        let sys = FemSystem::assemble(&ops, &l).unwrap();
        let loc = PointLocator::new(ops.mesh());
        let y = [0.4, 0.5, 0.75];
        let x = [0.6, 0.45, 0.25];
        for (a, b) in [(0, 0), (2, 2), (0, 2)] {
            let gy = green_function(&sys, &y, &E[b]).unwrap();
            let gx = green_function(&sys, &x, &E[a]).unwrap();
            let lhs = gy.value(&loc, &x).unwrap()[a];
            let rhs = gx.value(&loc, &y).unwrap()[b];
            assert!((lhs - rhs).abs() < 0.05 * lhs.abs().max(rhs.abs()), "{a}{b}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn exterior_kernel_equals_dn_pairing() {
        let ops = ops(2, 8);
        let l = LameVector::new(vec![0.5, 0.3], vec![1.0, 1.6]).unwrap();
        let lb = LameVector::new(vec![0.5, 0.9], vec![1.0, 1.1]).unwrap();
        let s1 = FemSystem::assemble(&ops, &l).unwrap();
        let s2 = FemSystem::assemble(&ops, &lb).unwrap();
        let y = [0.45, 0.5, 1.06];
        let z = [0.55, 0.52, 1.07];
        let s = sensitivity_kernel_with(&s1, &s2, &y, &z, &[], SourcePlacement::Exterior).unwrap();
        let delta = s1.dn_matrix().unwrap().entries() - s2.dn_matrix().unwrap().entries();
        for a in 0..3 {
            for b in 0..3 {
                let py = DVector::from_vec(exterior_trace(&ops, &y, &E[a]).unwrap());
                let pz = DVector::from_vec(exterior_trace(&ops, &z, &E[b]).unwrap());
                let pair = (pz.transpose() * &delta * py)[(0, 0)];
                assert!((s[(a, b)] - pair).abs() <= 1e-6 * pair.abs().max(s.amax() * 1e-3), "{a}{b}: {} vs {pair}", s[(a, b)]);
            }
        }
        let zero = sensitivity_kernel_with(&s1, &s1, &y, &z, &[], SourcePlacement::Exterior).unwrap();
        assert_eq!(zero, Matrix3::zeros());
    }
}
