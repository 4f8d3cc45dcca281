//! Partitioned tetrahedral meshes, the augmented-domain and walkway
//! constructions near the accessible boundary, and the cone chain of nested
//! balls used for smallness propagation.

mod cone;
mod mesh;
mod mesh_io;
mod walkway;

pub use cone::{eta_r, tau_r, ConeChain, NestingMargins};
pub use mesh::{
    build_layered_cube, BoundaryFace, BoundaryTag, Interface, MeshCertificate, PartitionedMesh,
    PointLocator,
};
pub use mesh_io::{InterfaceRecord, MeshFile, TaggedFace};
pub use walkway::{augmented_layer_profile, rho1, walkway_h0, AugmentedDomain};

pub type Point3 = [f64; 3];

pub(crate) fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

