use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mesh::{BoundaryFace, BoundaryTag, Interface, PartitionedMesh};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedFace {
    pub face: [usize; 3],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceRecord {
    pub labels: [u32; 2],
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

fn one() -> f64 {
    1.0
}

/// On-disk mesh: flat coordinate and connectivity arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<f64>,
    pub tets: Vec<i32>,
    pub labels: Vec<i32>,
    pub boundary_tags: Vec<TaggedFace>,
    pub interfaces: Vec<InterfaceRecord>,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default = "one")]
    pub lipschitz: f64,
}

impl MeshFile {
    pub fn from_mesh(mesh: &PartitionedMesh) -> Self {
        Self {
            vertices: mesh.vertices().iter().flatten().copied().collect(),
            tets: mesh.tets().iter().flatten().map(|&v| v as i32).collect(),
            labels: mesh.labels().iter().map(|&l| l as i32).collect(),
            boundary_tags: mesh
                .boundary_faces()
                .iter()
                .map(|f| TaggedFace { face: f.vertices, tag: f.tag })
                .collect(),
            interfaces: mesh
                .interfaces()
                .iter()
                .map(|i| InterfaceRecord { labels: i.labels, point: i.point, normal: i.normal })
                .collect(),
            r0: mesh.r0(),
            lipschitz: mesh.lipschitz(),
        }
    }

    pub fn into_mesh(self) -> Result<PartitionedMesh> {
        if self.vertices.len() % 3 != 0 {
            return Err(Error::InvalidMesh("vertex array length not a multiple of 3".into()));
        }
        if self.tets.len() % 4 != 0 {
            return Err(Error::InvalidMesh("tet array length not a multiple of 4".into()));
        }
        if self.tets.iter().any(|&v| v < 0) || self.labels.iter().any(|&l| l < 1) {
            return Err(Error::InvalidMesh("negative index or non-positive label".into()));
        }
        let vertices = self.vertices.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let tets = self
            .tets
            .chunks_exact(4)
            .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize, c[3] as usize])
            .collect();
        let labels = self.labels.iter().map(|&l| l as u32).collect();
        let faces = self
            .boundary_tags
            .into_iter()
            .map(|t| BoundaryFace { vertices: t.face, tag: t.tag })
            .collect();
        let interfaces = self
            .interfaces
            .into_iter()
            .map(|i| Interface { labels: i.labels, point: i.point, normal: i.normal })
            .collect();
        PartitionedMesh::new(vertices, tets, labels, faces, interfaces, self.r0, self.lipschitz)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<PartitionedMesh> {
        let text = std::fs::read_to_string(path)?;
        let file: MeshFile = serde_json::from_str(&text)?;
        file.into_mesh()
    }

    pub fn write(mesh: &PartitionedMesh, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(&Self::from_mesh(mesh))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
