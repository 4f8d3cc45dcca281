use std::collections::HashMap;

use super::mesh::{point_triangle_distance, PartitionedMesh};
use super::{cross, dot, norm, sub, Point3};
use crate::error::{invalid, Result};

/// `ρ1 = r0 / C_L` with `C_L = 3√(1+L²)/L`.
pub fn rho1(r0: f64, lipschitz: f64) -> f64 {
    r0 * lipschitz / (3.0 * (1.0 + lipschitz * lipschitz).sqrt())
}

/// Height of the bump glued on top of `Σ`, as a function of the tangential
/// offset `x'` from its center.
pub fn augmented_layer_profile(xprime: [f64; 2], r0: f64, lipschitz: f64) -> f64 {
    let rho = rho1(r0, lipschitz);
    let s = xprime[0].hypot(xprime[1]);
    if s <= rho / (4.0 * lipschitz) {
        rho / 2.0
    } else if s <= rho / (2.0 * lipschitz) {
        rho - 2.0 * lipschitz * s
    } else {
        0.0
    }
}

pub fn walkway_h0(r0: f64, lipschitz: f64, cprime_l: f64) -> f64 {
    let rho = rho1(r0, lipschitz);
    (r0 / 6.0)
        .min(r0 / cprime_l)
        .min(rho / (8.0 * (1.0 + 4.0 * lipschitz * lipschitz).sqrt()))
}

/// `Ω` extended by the bump `D0` above `Σ`, exposed through membership tests.
///
/// Local coordinates put `P1` (the centroid of `Σ`) at the origin with the
/// outward normal of `Σ` as the third axis.
pub struct AugmentedDomain<'a> {
    mesh: &'a PartitionedMesh,
    p1: Point3,
    normal: Point3,
    t1: Point3,
    t2: Point3,
    /// Faces bounding each subdomain, indexed by label - 1.
    region_faces: Vec<Vec<[usize; 3]>>,
}

impl<'a> AugmentedDomain<'a> {
    pub fn new(mesh: &'a PartitionedMesh) -> Result<Self> {
        let mut area = 0.0;
        let mut p1 = [0.0; 3];
        let mut normal = [0.0; 3];
        for f in mesh.sigma_faces() {
            let [a, b, c] = f.vertices.map(|v| mesh.vertices()[v]);
            let n = cross(&sub(&b, &a), &sub(&c, &a));
            let w = 0.5 * norm(&n);
            for k in 0..3 {
                p1[k] += w * (a[k] + b[k] + c[k]) / 3.0;
            }
            area += w;
            normal = n;
        }
        if !(area > 0.0) {
            return invalid("sigma has zero area");
        }
        p1 = p1.map(|c| c / area);
        let nn = norm(&normal);
        normal = normal.map(|c| c / nn);
        // orient outward: the mesh centroid lies on the inner side
        let mut centroid = [0.0; 3];
        for p in mesh.vertices() {
            for k in 0..3 {
                centroid[k] += p[k] / mesh.n_vertices() as f64;
            }
        }
        if dot(&sub(&centroid, &p1), &normal) > 0.0 {
            normal = normal.map(|c| -c);
        }
        let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let t1 = cross(&normal, &helper);
        let t1 = t1.map(|c| c / norm(&t1));
        let t2 = cross(&normal, &t1);

        let mut faces: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        for (i, t) in mesh.tets().iter().enumerate() {
            for skip in 0..4 {
                let mut f = [0usize; 3];
                let mut m = 0;
                for (a, &v) in t.iter().enumerate() {
                    if a != skip {
                        f[m] = v;
                        m += 1;
                    }
                }
                f.sort_unstable();
                faces.entry(f).or_default().push(i);
            }
        }
        let mut region_faces = vec![Vec::new(); mesh.n_subdomains()];
        for (f, owners) in faces {
            let labels: Vec<u32> = owners.iter().map(|&t| mesh.labels()[t]).collect();
            if labels.len() == 1 {
                region_faces[labels[0] as usize - 1].push(f);
            } else if labels[0] != labels[1] {
                region_faces[labels[0] as usize - 1].push(f);
                region_faces[labels[1] as usize - 1].push(f);
            }
        }
        Ok(Self { mesh, p1, normal, t1, t2, region_faces })
    }

    pub fn p1(&self) -> Point3 {
        self.p1
    }

    /// Outward unit normal of `Σ`.
    pub fn normal(&self) -> Point3 {
        self.normal
    }

    pub fn rho1(&self) -> f64 {
        rho1(self.mesh.r0(), self.mesh.lipschitz())
    }

    /// Tangential and normal coordinates of `x` relative to `P1`.
    pub fn local(&self, x: &Point3) -> ([f64; 2], f64) {
        let d = sub(x, &self.p1);
        ([dot(&d, &self.t1), dot(&d, &self.t2)], dot(&d, &self.normal))
    }

    pub fn global(&self, xprime: [f64; 2], x3: f64) -> Point3 {
        [0, 1, 2].map(|k| {
            self.p1[k] + xprime[0] * self.t1[k] + xprime[1] * self.t2[k] + x3 * self.normal[k]
        })
    }

    pub fn in_d0(&self, x: &Point3) -> bool {
        let (r0, l) = (self.mesh.r0(), self.mesh.lipschitz());
        let (xp, x3) = self.local(x);
        let s = xp[0].hypot(xp[1]);
        s < r0 / 3.0 && x3 >= 0.0 && x3 < augmented_layer_profile(xp, r0, l)
    }

    pub fn dist_to_boundary(&self, x: &Point3) -> f64 {
        self.mesh
            .boundary_faces()
            .iter()
            .map(|f| point_triangle_distance(x, f.vertices.map(|v| &self.mesh.vertices()[v])))
            .fold(f64::INFINITY, f64::min)
    }

    /// `K0 = {x ∈ D0 : dist(x, ∂Ω) > ρ1/8}`.
    pub fn in_k0(&self, x: &Point3) -> bool {
        self.in_d0(x) && self.dist_to_boundary(x) > self.rho1() / 8.0
    }

    /// Distance from `x` to the boundary of subdomain `label`, or `None` when
    /// `x` lies outside that subdomain.
    pub fn depth_in_subdomain(&self, x: &Point3, label: u32) -> Option<f64> {
        let j = label as usize;
        if j == 0 || j > self.region_faces.len() {
            return None;
        }
        let inside = self
            .mesh
            .tets()
            .iter()
            .zip(self.mesh.labels())
            .filter(|(_, &l)| l == label)
            .any(|(t, _)| contains(t.map(|v| &self.mesh.vertices()[v]), x));
        if !inside {
            return None;
        }
        Some(
            self.region_faces[j - 1]
                .iter()
                .map(|f| point_triangle_distance(x, f.map(|v| &self.mesh.vertices()[v])))
                .fold(f64::INFINITY, f64::min),
        )
    }

    /// Membership in `𝒦_h`, the union of the `h`-interiors of the first
    /// `chain.len()` subdomains of a chain starting at subdomain 1, together
    /// with `D0` at depth `h`.
    pub fn in_walkway(&self, x: &Point3, chain: &[u32], h: f64) -> bool {
        if self.in_d0(x) {
            let (xp, x3) = self.local(x);
            let top = augmented_layer_profile(xp, self.mesh.r0(), self.mesh.lipschitz());
            if x3 > h && top - x3 > h {
                return true;
            }
        }
        chain
            .iter()
            .any(|&l| self.depth_in_subdomain(x, l).is_some_and(|d| d > h))
    }
}

fn contains(p: [&Point3; 4], x: &Point3) -> bool {
    use super::mesh::tet_volume;
    let vol = tet_volume(p);
    let parts = [
        tet_volume([x, p[1], p[2], p[3]]),
        tet_volume([p[0], x, p[2], p[3]]),
        tet_volume([p[0], p[1], x, p[3]]),
        tet_volume([p[0], p[1], p[2], x]),
    ];
    parts.iter().all(|&v| v >= -1e-14 * vol.abs())
}
