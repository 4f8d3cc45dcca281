use serde::{Deserialize, Serialize};

use super::forward::ForwardContext;
use super::reconstruct::Iterate;
use crate::fem::GRAM_KIND;

/// Resolution data carried by every report so that trends across meshes can
/// be compared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub n_subdomains: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_per_axis: Option<usize>,
    pub n_vertices: usize,
    pub n_tets: usize,
    pub n_sigma_dofs: usize,
    pub max_edge: f64,
    pub gram_hash: String,
}

impl MeshSummary {
    pub fn new(ctx: &ForwardContext) -> Self {
        let mesh = ctx.mesh();
        Self {
            n_subdomains: mesh.n_subdomains(),
            cells_per_axis: mesh.cells_per_axis(),
            n_vertices: mesh.n_vertices(),
            n_tets: mesh.tets().len(),
            n_sigma_dofs: ctx.operators().n_sigma(),
            max_edge: mesh.max_edge(),
            gram_hash: ctx.gram().hash().to_string(),
        }
    }
}

/// The JSON document written by the inverse commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InverseReport {
    pub mesh: MeshSummary,
    pub gram: String,
    pub q0: Option<f64>,
    pub ratios: Vec<f64>,
    pub iterates: Vec<Iterate>,
}

impl InverseReport {
    pub fn new(ctx: &ForwardContext) -> Self {
        Self {
            mesh: MeshSummary::new(ctx),
            gram: GRAM_KIND.to_string(),
            q0: None,
            ratios: Vec::new(),
            iterates: Vec::new(),
        }
    }
}
