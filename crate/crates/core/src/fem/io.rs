//! Dense matrix JSON and boundary trace CSV.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dn::DnMatrix;
use super::gram::GRAM_KIND;
use crate::error::{Error, Result};

/// Dense matrix with a shape header, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrixJson {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram_hash: Option<String>,
}

impl DenseMatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        DenseMatrixJson { shape: [m.nrows(), m.ncols()], data, gram: None, gram_hash: None }
    }

    pub fn from_dn(dn: &DnMatrix) -> Self {
        let mut out = Self::from_matrix(dn.entries());
        out.gram = Some(GRAM_KIND.to_string());
        out.gram_hash = Some(dn.gram().hash().to_string());
        out
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let [r, c] = self.shape;
        if r * c != self.data.len() {
            return Err(Error::InvalidInput(format!(
                "shape {r}x{c} does not match {} entries",
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r, c, &self.data))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Trace on the `Σ` vertices as CSV rows `vertex,ux,uy,uz`.
pub fn trace_csv(sigma_vertices: &[usize], psi: &[f64]) -> Result<String> {
    if psi.len() != 3 * sigma_vertices.len() {
        return Err(Error::InvalidInput("trace length does not match Σ vertices".into()));
    }
    let mut s = String::from("vertex,ux,uy,uz\n");
    for (k, v) in sigma_vertices.iter().enumerate() {
        let _ = writeln!(s, "{v},{:e},{:e},{:e}", psi[3 * k], psi[3 * k + 1], psi[3 * k + 2]);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let m = DMatrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0));
        let j = DenseMatrixJson::from_matrix(&m);
        let back: DenseMatrixJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
        assert_eq!(j.data[1], m[(0, 1)]);
    }

    #[test]
    fn bad_shape_rejected() {
        let j = DenseMatrixJson { shape: [2, 2], data: vec![1.0; 3], gram: None, gram_hash: None };
        assert!(j.to_matrix().is_err());
    }

    #[test]
    fn trace_rows() {
        let s = trace_csv(&[4, 9], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.lines().nth(2).unwrap().starts_with("9,4e0"));
        assert!(trace_csv(&[1], &[0.0]).is_err());
    }
}
