use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{cross, dot, norm, sub, Point3};
use crate::error::{invalid, Error, Result};

/// Minimum admissible tetrahedron volume.
pub const MIN_TET_VOLUME: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    /// The accessible portion where Dirichlet data are prescribed.
    Sigma,
    /// The remainder of the boundary, where data vanish.
    Rest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub tag: BoundaryTag,
}

/// A flat interface between subdomains `labels[0]` and `labels[1]`, lying in
/// the plane through `point` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub labels: [u32; 2],
    pub point: Point3,
    pub normal: Point3,
}

impl Interface {
    pub fn signed_distance(&self, x: &Point3) -> f64 {
        dot(&sub(x, &self.point), &self.normal)
    }
}

/// The scale at which a layered cube satisfies the flat-portion requirement:
/// every flat patch contains a disc of radius `r0/3` whose cylinder of
/// half-height `L·r0/3` stays inside the two adjacent layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshCertificate {
    pub r0: f64,
    pub lipschitz: f64,
    /// `|Ω| / r0³`.
    pub volume_bound: f64,
}

/// Tetrahedral mesh of `Ω` with subdomain labels `1..=N`, tagged boundary
/// faces and declared flat interfaces.
#[derive(Clone, Debug)]
pub struct PartitionedMesh {
    vertices: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    labels: Vec<u32>,
    boundary_faces: Vec<BoundaryFace>,
    interfaces: Vec<Interface>,
    n_subdomains: usize,
    r0: f64,
    lipschitz: f64,
    volumes: Vec<f64>,
    on_boundary: Vec<bool>,
    sigma_vertices: Vec<usize>,
    /// Cells per axis for meshes built from the layered cube.
    cells_per_axis: Option<usize>,
    sigma_margin: Option<f64>,
}

fn face_key(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub(crate) fn tet_volume(p: [&Point3; 4]) -> f64 {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    dot(&a, &cross(&b, &c)) / 6.0
}

const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl PartitionedMesh {
    /// Validates and assembles a mesh. Negatively oriented tetrahedra are
    /// reordered; degenerate ones are rejected.
    pub fn new(
        vertices: Vec<Point3>,
        mut tets: Vec<[usize; 4]>,
        labels: Vec<u32>,
        boundary_faces: Vec<BoundaryFace>,
        interfaces: Vec<Interface>,
        r0: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("no tetrahedra".into()));
        }
        if labels.len() != tets.len() {
            return Err(Error::InvalidMesh(format!(
                "{} labels for {} tetrahedra",
                labels.len(),
                tets.len()
            )));
        }
        if !(r0 > 0.0) || !(lipschitz >= 1.0) {
            return invalid(format!("need r0 > 0 and L >= 1, got r0={r0}, L={lipschitz}"));
        }
        let nv = vertices.len();
        let mut volumes = Vec::with_capacity(tets.len());
        for (i, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("tet {i} references a missing vertex")));
            }
            let mut vol = tet_volume([&vertices[t[0]], &vertices[t[1]], &vertices[t[2]], &vertices[t[3]]]);
            if vol < 0.0 {
                t.swap(2, 3);
                vol = -vol;
            }
            if vol <= MIN_TET_VOLUME {
                return Err(Error::DegenerateTet { index: i, volume: vol });
            }
            volumes.push(vol);
        }

        let n_subdomains = *labels.iter().max().unwrap() as usize;
        if labels.iter().any(|&l| l == 0) {
            return Err(Error::InvalidMesh("labels are one based".into()));
        }
        let mut used = vec![false; n_subdomains];
        labels.iter().for_each(|&l| used[l as usize - 1] = true);
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("subdomain {} has no cells", j + 1)));
        }

        // face incidence
        let mut faces: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        for (i, t) in tets.iter().enumerate() {
            for f in TET_FACES {
                faces
                    .entry(face_key([t[f[0]], t[f[1]], t[f[2]]]))
                    .or_default()
                    .push(i);
            }
        }
        let mut declared: HashMap<[usize; 3], BoundaryTag> = HashMap::new();
        for bf in &boundary_faces {
            if declared.insert(face_key(bf.vertices), bf.tag).is_some() {
                return Err(Error::InvalidMesh(format!("boundary face {:?} listed twice", bf.vertices)));
            }
        }
        let mut on_boundary = vec![false; nv];
        for (key, owners) in &faces {
            match owners.len() {
                1 => {
                    if !declared.contains_key(key) {
                        return Err(Error::InvalidMesh(format!("boundary face {key:?} has no tag")));
                    }
                    key.iter().for_each(|&v| on_boundary[v] = true);
                }
                2 => {
                    if declared.contains_key(key) {
                        return Err(Error::InvalidMesh(format!("interior face {key:?} tagged as boundary")));
                    }
                }
                k => {
                    return Err(Error::InvalidMesh(format!("face {key:?} shared by {k} tetrahedra")));
                }
            }
        }
        if declared.len() != faces.values().filter(|o| o.len() == 1).count() {
            return Err(Error::InvalidMesh("tagged faces that are not on the boundary".into()));
        }

        // flat interfaces: every face between the declared label pair lies in the plane
        let mut interfaces = interfaces;
        for itf in interfaces.iter_mut() {
            let nn = norm(&itf.normal);
            if !(nn > 0.0) {
                return Err(Error::InvalidMesh("interface normal is zero".into()));
            }
            itf.normal = itf.normal.map(|c| c / nn);
            let mut count = 0usize;
            for (key, owners) in &faces {
                if owners.len() != 2 {
                    continue;
                }
                let mut pair = [labels[owners[0]], labels[owners[1]]];
                pair.sort_unstable();
                let mut want = itf.labels;
                want.sort_unstable();
                if pair != want {
                    continue;
                }
                count += 1;
                for &v in key {
                    let d = itf.signed_distance(&vertices[v]);
                    if d.abs() > 1e-12 {
                        return Err(Error::InvalidMesh(format!(
                            "interface {:?}: vertex {v} is {d:e} off its plane",
                            itf.labels
                        )));
                    }
                }
            }
            if count == 0 {
                return Err(Error::InvalidMesh(format!(
                    "interface {:?} has no faces",
                    itf.labels
                )));
            }
        }

        // Σ: at least one face, owned by subdomain 1, coplanar
        let sigma_faces: Vec<&BoundaryFace> =
            boundary_faces.iter().filter(|f| f.tag == BoundaryTag::Sigma).collect();
        if sigma_faces.is_empty() {
            return Err(Error::InvalidMesh("no boundary face is tagged sigma".into()));
        }
        if !sigma_faces
            .iter()
            .any(|f| labels[faces[&face_key(f.vertices)][0]] == 1)
        {
            return Err(Error::InvalidMesh("subdomain 1 does not touch sigma".into()));
        }
        let f0 = sigma_faces[0].vertices;
        let n0 = cross(&sub(&vertices[f0[1]], &vertices[f0[0]]), &sub(&vertices[f0[2]], &vertices[f0[0]]));
        let n0n = norm(&n0);
        for f in &sigma_faces {
            for &v in &f.vertices {
                let d = dot(&sub(&vertices[v], &vertices[f0[0]]), &n0) / n0n;
                if d.abs() > 1e-12 {
                    return Err(Error::InvalidMesh("sigma is not flat".into()));
                }
            }
        }

        // chain condition
        let mut adj = vec![Vec::new(); n_subdomains];
        for itf in &interfaces {
            let (a, b) = (itf.labels[0] as usize - 1, itf.labels[1] as usize - 1);
            if a >= n_subdomains || b >= n_subdomains {
                return Err(Error::InvalidMesh(format!("interface {:?} names an unknown label", itf.labels)));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n_subdomains];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(j) = stack.pop() {
            for &k in &adj[j] {
                if !seen[k] {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidMesh(format!(
                "subdomain {} is not chained to subdomain 1 through flat interfaces",
                j + 1
            )));
        }

        // Σ vertices: every incident boundary face is tagged sigma
        let mut sigma_count = vec![0usize; nv];
        let mut rest_count = vec![0usize; nv];
        for f in &boundary_faces {
            for &v in &f.vertices {
                match f.tag {
                    BoundaryTag::Sigma => sigma_count[v] += 1,
                    BoundaryTag::Rest => rest_count[v] += 1,
                }
            }
        }
        let sigma_vertices: Vec<usize> =
            (0..nv).filter(|&v| sigma_count[v] > 0 && rest_count[v] == 0).collect();
        if sigma_vertices.is_empty() {
            return Err(Error::InvalidMesh("sigma has no interior vertices".into()));
        }

        Ok(Self {
            vertices,
            tets,
            labels,
            boundary_faces,
            interfaces,
            n_subdomains,
            r0,
            lipschitz,
            volumes,
            on_boundary,
            sigma_vertices,
            cells_per_axis: None,
            sigma_margin: None,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    /// One-based subdomain label per tetrahedron.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_subdomains
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    /// Vertices carrying Dirichlet data: boundary vertices all of whose
    /// incident boundary faces lie on `Σ`.
    pub fn sigma_vertices(&self) -> &[usize] {
        &self.sigma_vertices
    }

    pub fn sigma_faces(&self) -> impl Iterator<Item = &BoundaryFace> {
        self.boundary_faces.iter().filter(|f| f.tag == BoundaryTag::Sigma)
    }

    pub fn cells_per_axis(&self) -> Option<usize> {
        self.cells_per_axis
    }

    /// Longest edge over all tetrahedra.
    pub fn max_edge(&self) -> f64 {
        self.tets
            .iter()
            .flat_map(|t| {
                (0..4).flat_map(move |a| (a + 1..4).map(move |b| (t[a], t[b])))
            })
            .map(|(a, b)| norm(&sub(&self.vertices[a], &self.vertices[b])))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, tet: usize) -> Point3 {
        let t = self.tets[tet];
        let mut c = [0.0; 3];
        for &v in &t {
            for k in 0..3 {
                c[k] += 0.25 * self.vertices[v][k];
            }
        }
        c
    }

    /// Flat-portion certificate for a layered cube; `None` for meshes read
    /// from files.
    pub fn certificate(&self) -> Option<MeshCertificate> {
        let n_layers = self.n_subdomains as f64;
        let margin = self.sigma_margin?;
        let r0 = 3.0 * (0.5 - margin).min(1.0 / n_layers);
        Some(MeshCertificate {
            r0,
            lipschitz: 1.0,
            volume_bound: self.total_volume() / r0.powi(3),
        })
    }

    /// Distance from `x` to the nearest declared interface plane or to the
    /// boundary faces, computed over the mesh faces.
    pub fn distance_to_interfaces_and_boundary(&self, x: &Point3) -> f64 {
        let mut d = f64::INFINITY;
        for f in &self.boundary_faces {
            d = d.min(point_triangle_distance(x, f.vertices.map(|v| &self.vertices[v])));
        }
        for itf in &self.interfaces {
            d = d.min(itf.signed_distance(x).abs());
        }
        d
    }
}

/// Euclidean distance from a point to a triangle.
pub(crate) fn point_triangle_distance(p: &Point3, tri: [&Point3; 3]) -> f64 {
    // Ericson, closest point on triangle
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    let closest: Point3 = if d1 <= 0.0 && d2 <= 0.0 {
        *a
    } else {
        let bp = sub(p, b);
        let d3 = dot(&ab, &bp);
        let d4 = dot(&ac, &bp);
        if d3 >= 0.0 && d4 <= d3 {
            *b
        } else {
            let vc = d1 * d4 - d3 * d2;
            if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
                let v = d1 / (d1 - d3);
                [a[0] + v * ab[0], a[1] + v * ab[1], a[2] + v * ab[2]]
            } else {
                let cp = sub(p, c);
                let d5 = dot(&ab, &cp);
                let d6 = dot(&ac, &cp);
                if d6 >= 0.0 && d5 <= d6 {
                    *c
                } else {
                    let vb = d5 * d2 - d1 * d6;
                    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
                        let w = d2 / (d2 - d6);
                        [a[0] + w * ac[0], a[1] + w * ac[1], a[2] + w * ac[2]]
                    } else {
                        let va = d3 * d6 - d5 * d4;
                        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
                            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
                            let bc = sub(c, b);
                            [b[0] + w * bc[0], b[1] + w * bc[1], b[2] + w * bc[2]]
                        } else {
                            let denom = 1.0 / (va + vb + vc);
                            let v = vb * denom;
                            let w = vc * denom;
                            [
                                a[0] + ab[0] * v + ac[0] * w,
                                a[1] + ab[1] * v + ac[1] * w,
                                a[2] + ab[2] * v + ac[2] * w,
                            ]
                        }
                    }
                }
            }
        }
    };
    norm(&sub(p, &closest))
}

/// The unit cube split into `n_layers` horizontal layers, meshed by an
/// `n × n × n` grid of cubes with six Kuhn tetrahedra each.
///
/// Layer 1 is the top layer; `Σ` is the part of the top face at distance at
/// least `sigma_margin` from its edges.
pub fn build_layered_cube(n_layers: usize, n: usize, sigma_margin: f64) -> Result<PartitionedMesh> {
    if n_layers < 1 {
        return invalid("need at least one layer");
    }
    if n < 2 {
        return invalid("need at least two cells per axis");
    }
    if n % n_layers != 0 {
        return invalid(format!("{n} cells per axis not divisible into {n_layers} layers"));
    }
    if !(0.0..0.5).contains(&sigma_margin) {
        return invalid(format!("sigma margin {sigma_margin} outside [0, 0.5)"));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let per_layer = n / n_layers;
    let mut tets = Vec::with_capacity(6 * n * n * n);
    let mut labels = Vec::with_capacity(6 * n * n * n);
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for k in 0..n {
        let label = (n_layers - k / per_layer) as u32;
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut idx = [i, j, k];
                    let mut t = [vid(i, j, k), 0, 0, 0];
                    for (s, &axis) in perm.iter().enumerate() {
                        idx[axis] += 1;
                        t[s + 1] = vid(idx[0], idx[1], idx[2]);
                    }
                    let vol = tet_volume([&vertices[t[0]], &vertices[t[1]], &vertices[t[2]], &vertices[t[3]]]);
                    if vol < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                    labels.push(label);
                }
            }
        }
    }

    let mut boundary_faces = Vec::new();
    let in_sigma = |p: &Point3| {
        let m = p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]);
        m >= sigma_margin - 1e-12
    };
    for t in &tets {
        for f in TET_FACES {
            let tri = [t[f[0]], t[f[1]], t[f[2]]];
            for axis in 0..3 {
                for side in [0.0, 1.0] {
                    if tri.iter().all(|&v| vertices[v][axis] == side) {
                        let top = axis == 2 && side == 1.0;
                        let tag = if top && tri.iter().all(|&v| in_sigma(&vertices[v])) {
                            BoundaryTag::Sigma
                        } else {
                            BoundaryTag::Rest
                        };
                        boundary_faces.push(BoundaryFace { vertices: tri, tag });
                    }
                }
            }
        }
    }

    let interfaces = (1..n_layers)
        .map(|j| Interface {
            labels: [j as u32, j as u32 + 1],
            point: [0.5, 0.5, 1.0 - j as f64 / n_layers as f64],
            normal: [0.0, 0.0, 1.0],
        })
        .collect();

    let mut mesh = PartitionedMesh::new(vertices, tets, labels, boundary_faces, interfaces, 1.0, 1.0)?;
    mesh.cells_per_axis = Some(n);
    mesh.sigma_margin = Some(sigma_margin);
    Ok(mesh)
}

/// Bucket grid over tetrahedron bounding boxes for point location.
pub struct PointLocator<'a> {
    mesh: &'a PartitionedMesh,
    lo: Point3,
    cell: Point3,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a PartitionedMesh) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in mesh.vertices() {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let per_axis = ((mesh.tets().len() as f64).cbrt() / 2.0).ceil().max(1.0) as usize;
        let dims = [per_axis; 3];
        let cell = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / per_axis as f64).max(1e-300));
        let mut buckets = vec![Vec::new(); per_axis.pow(3)];
        for (ti, t) in mesh.tets().iter().enumerate() {
            let mut tlo = [usize::MAX; 3];
            let mut thi = [0usize; 3];
            for &v in t {
                for k in 0..3 {
                    let c = (((mesh.vertices()[v][k] - lo[k]) / cell[k]).floor().max(0.0) as usize).min(dims[k] - 1);
                    tlo[k] = tlo[k].min(c);
                    thi[k] = thi[k].max(c);
                }
            }
            for i in tlo[0]..=thi[0] {
                for j in tlo[1]..=thi[1] {
                    for k in tlo[2]..=thi[2] {
                        buckets[i + dims[0] * (j + dims[1] * k)].push(ti);
                    }
                }
            }
        }
        Self { mesh, lo, cell, dims, buckets }
    }

    /// Containing tetrahedron and barycentric coordinates of `x`.
    pub fn locate(&self, x: &Point3) -> Option<(usize, [f64; 4])> {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let f = (x[k] - self.lo[k]) / self.cell[k];
            if f < -1e-9 || f > self.dims[k] as f64 + 1e-9 {
                return None;
            }
            c[k] = (f.floor().max(0.0) as usize).min(self.dims[k] - 1);
        }
        let tol = -1e-12;
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &ti in &self.buckets[c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])] {
            let b = self.barycentric(ti, x);
            let worst = b.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= tol {
                return Some((ti, b));
            }
            if best.as_ref().map_or(true, |(_, _, w)| worst > *w) {
                best = Some((ti, b, worst));
            }
        }
        best.filter(|(_, _, w)| *w > -1e-9).map(|(t, b, _)| (t, b))
    }

    pub fn barycentric(&self, tet: usize, x: &Point3) -> [f64; 4] {
        let t = self.mesh.tets()[tet];
        let p = t.map(|v| &self.mesh.vertices()[v]);
        let vol = tet_volume([p[0], p[1], p[2], p[3]]);
        let b1 = tet_volume([p[0], x, p[2], p[3]]) / vol;
        let b2 = tet_volume([p[0], p[1], x, p[3]]) / vol;
        let b3 = tet_volume([p[0], p[1], p[2], x]) / vol;
        [1.0 - b1 - b2 - b3, b1, b2, b3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_cube_counts() {
        let m = build_layered_cube(1, 2, 0.0).unwrap();
        assert_eq!(m.tets().len(), 48);
        assert_eq!(m.n_subdomains(), 1);
        assert_eq!(m.sigma_vertices().len(), 1);
        assert_eq!(m.sigma_faces().count(), 8);

        let m = build_layered_cube(2, 4, 0.1).unwrap();
        assert_eq!(m.tets().len(), 384);
        assert_eq!(m.interfaces().len(), 1);
        assert_eq!(m.interfaces()[0].point[2], 0.5);
        assert_eq!(m.interfaces()[0].normal, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn volume_is_one() {
        for (nl, n, mg) in [(1, 2, 0.0), (2, 4, 0.1), (3, 6, 0.2), (4, 8, 0.0)] {
            let m = build_layered_cube(nl, n, mg).unwrap();
            assert!((m.total_volume() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn layer_labels_follow_depth() {
        let m = build_layered_cube(3, 6, 0.0).unwrap();
        for (t, &l) in m.labels().iter().enumerate() {
            let z = m.centroid(t)[2];
            let expected = 3 - (z * 3.0).floor() as u32;
            assert_eq!(l, expected);
        }
    }

    #[test]
    fn sigma_margin_shrinks_data_support() {
        let full = build_layered_cube(1, 8, 0.0).unwrap();
        let cut = build_layered_cube(1, 8, 0.2).unwrap();
        assert_eq!(full.sigma_vertices().len(), 49);
        assert!(cut.sigma_vertices().len() < 49);
        for &v in cut.sigma_vertices() {
            let p = cut.vertices()[v];
            assert!(p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]) > 0.2);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(build_layered_cube(3, 4, 0.0).is_err());
        assert!(build_layered_cube(1, 1, 0.0).is_err());
        assert!(build_layered_cube(1, 2, 0.5).is_err());
    }

    #[test]
    fn degenerate_tet_rejected() {
        let m = build_layered_cube(1, 2, 0.0).unwrap();
        let mut verts = m.vertices().to_vec();
        let t0 = m.tets()[0];
        verts[t0[3]] = verts[t0[0]];
        let r = PartitionedMesh::new(
            verts,
            m.tets().to_vec(),
            m.labels().to_vec(),
            m.boundary_faces().to_vec(),
            vec![],
            1.0,
            1.0,
        );
        assert!(matches!(r, Err(Error::DegenerateTet { .. })));
    }

    #[test]
    fn broken_chain_rejected() {
        let m = build_layered_cube(2, 4, 0.0).unwrap();
        let r = PartitionedMesh::new(
            m.vertices().to_vec(),
            m.tets().to_vec(),
            m.labels().to_vec(),
            m.boundary_faces().to_vec(),
            vec![],
            1.0,
            1.0,
        );
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn locator_finds_points() {
        let m = build_layered_cube(2, 4, 0.0).unwrap();
        let loc = PointLocator::new(&m);
        for p in [[0.1, 0.2, 0.3], [0.5, 0.5, 0.5], [0.99, 0.01, 0.7], [1.0, 1.0, 1.0]] {
            let (t, b) = loc.locate(&p).unwrap();
            let mut q = [0.0; 3];
            for (a, &v) in m.tets()[t].iter().enumerate() {
                for k in 0..3 {
                    q[k] += b[a] * m.vertices()[v][k];
                }
            }
            assert!(norm(&sub(&p, &q)) < 1e-12);
        }
        assert!(loc.locate(&[1.5, 0.5, 0.5]).is_none());
    }

    #[test]
    fn certificate_scale() {
        let m = build_layered_cube(2, 4, 0.1).unwrap();
        let c = m.certificate().unwrap();
        assert!((c.r0 - 1.2).abs() < 1e-12);
    }
}
