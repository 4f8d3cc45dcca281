use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{sub, Point3};

/// Volume and barycentric gradients of a P1 tetrahedron.
pub fn p1_gradients(p: [&Point3; 4]) -> Result<(f64, [[f64; 3]; 4])> {
    let e = [sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0])];
    // columns are edge vectors; rows of the inverse are the gradients
    let m = Matrix3::new(
        e[0][0], e[1][0], e[2][0], //
        e[0][1], e[1][1], e[2][1], //
        e[0][2], e[1][2], e[2][2],
    );
    let det = m.determinant();
    let vol = det / 6.0;
    let inv = m
        .try_inverse()
        .ok_or(Error::DegenerateTet { index: usize::MAX, volume: vol })?;
    let mut g = [[0.0; 3]; 4];
    for a in 0..3 {
        for k in 0..3 {
            g[a + 1][k] = inv[(a, k)];
            g[0][k] -= inv[(a, k)];
        }
    }
    Ok((vol.abs(), g))
}

/// Element matrices of `∫ div u div v` and `∫ ∇̂u : ∇̂v`, indexed `3a + i`.
pub fn element_matrices(vol: f64, g: &[[f64; 3]; 4]) -> ([[f64; 12]; 12], [[f64; 12]; 12]) {
    let mut al = [[0.0; 12]; 12];
    let mut am = [[0.0; 12]; 12];
    for a in 0..4 {
        for b in 0..4 {
            let gab = g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2];
            for i in 0..3 {
                for j in 0..3 {
                    al[3 * a + i][3 * b + j] = vol * g[a][i] * g[b][j];
                    let delta = if i == j { gab } else { 0.0 };
                    am[3 * a + i][3 * b + j] = vol * 0.5 * (delta + g[a][j] * g[b][i]);
                }
            }
        }
    }
    (al, am)
}

/// Constant displacement gradient `∂u_i/∂x_k` of a P1 field on one element.
pub fn element_gradient(g: &[[f64; 3]; 4], tet: &[usize; 4], u: &[f64]) -> Matrix3<f64> {
    let mut du = Matrix3::zeros();
    for (a, &v) in tet.iter().enumerate() {
        for i in 0..3 {
            for k in 0..3 {
                du[(i, k)] += u[3 * v + i] * g[a][k];
            }
        }
    }
    du
}

pub fn sym(a: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (a + a.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tet_by_hand() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let (vol, g) = p1_gradients([&p[0], &p[1], &p[2], &p[3]]).unwrap();
        assert!((vol - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(g[0], [-1.0, -1.0, -1.0]);
        assert_eq!(g[1], [1.0, 0.0, 0.0]);
        let (al, am) = element_matrices(vol, &g);
        // hand integration: u = φ0 e1, v = φ0 e1 gives ε:ε = 1/2(1 + 1) + ... = (|g0|^2 + g0x^2)/2
        assert!((am[0][0] - (3.0 + 1.0) / 2.0 / 6.0).abs() < 1e-15);
        // u = φ1 e1, v = φ2 e2: ε(u) = sym(e1⊗e1), ε(v) = sym(e2⊗e2), product 0
        assert_eq!(am[3][7], 0.0);
        // u = φ1 e2, v = φ2 e1: ∇u = e2⊗e1, ∇v = e1⊗e2, ε:ε = 1/2
        assert!((am[4][6] - 0.5 / 6.0).abs() < 1e-15);
        // div(φ1 e1) div(φ2 e2) = 1
        assert!((al[3][7] - 1.0 / 6.0).abs() < 1e-15);
        for r in 0..12 {
            for c in 0..12 {
                assert_eq!(am[r][c], am[c][r]);
                assert_eq!(al[r][c], al[c][r]);
            }
        }
    }

    #[test]
    fn linear_field_gradient_is_exact() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.3, 0.0], [0.0, 1.2, 0.1], [0.2, 0.1, 0.9]];
        let (_, g) = p1_gradients([&p[0], &p[1], &p[2], &p[3]]).unwrap();
        let a = Matrix3::new(1.0, 2.0, 3.0, -1.0, 0.5, 0.0, 0.3, 0.2, -0.7);
        let mut u = vec![0.0; 12];
        for v in 0..4 {
            let x = nalgebra::Vector3::from(p[v]);
            let ux = a * x;
            for i in 0..3 {
                u[3 * v + i] = ux[i] + 0.25;
            }
        }
        let du = element_gradient(&g, &[0, 1, 2, 3], &u);
        assert!((du - a).norm() < 1e-13);
    }
}
