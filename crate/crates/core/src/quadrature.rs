//! Gauss rules on intervals, tetrahedra, balls and right circular cones.

use std::f64::consts::PI;

use crate::geometry::{sub, Point3};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss nodes and weights mapped to `[a, b]`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    x.iter().zip(&w).map(|(&xi, &wi)| (a + h * (xi + 1.0), h * wi)).collect()
}

/// Collapsed-product rule on a tetrahedron with `n` points per direction.
/// Exact for polynomials of degree `2n - 3`; `n = 1` does not even integrate
/// constants.
pub fn tet_rule(p: [&Point3; 4], n: usize) -> Vec<(Point3, f64)> {
    let g = gauss_interval(n, 0.0, 1.0);
    let vol6 = {
        let a = sub(p[1], p[0]);
        let b = sub(p[2], p[0]);
        let c = sub(p[3], p[0]);
        (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))
            .abs()
    };
    let mut out = Vec::with_capacity(n * n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(s, ws) in &g {
                // (u, v, s) in the unit cube to barycentric coordinates
                let b1 = u;
                let b2 = (1.0 - u) * v;
                let b3 = (1.0 - u) * (1.0 - v) * s;
                let b0 = 1.0 - b1 - b2 - b3;
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                let x = [0, 1, 2].map(|k| b0 * p[0][k] + b1 * p[1][k] + b2 * p[2][k] + b3 * p[3][k]);
                out.push((x, wu * wv * ws * jac * vol6));
            }
        }
    }
    out
}

/// Spherical-coordinate product rule on the ball `B_radius(center)`: Gauss in
/// the radius and the polar cosine, uniform in the azimuth.
pub fn ball_rule(center: &Point3, radius: f64, n: usize) -> Vec<(Point3, f64)> {
    let rad = gauss_interval(n, 0.0, radius);
    let pol = gauss_interval(n, -1.0, 1.0);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n * n * n_phi);
    for &(r, wr) in &rad {
        for &(ct, wt) in &pol {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                let x = [
                    center[0] + r * st * phi.cos(),
                    center[1] + r * st * phi.sin(),
                    center[2] + r * ct,
                ];
                out.push((x, wr * r * r * wt * dphi));
            }
        }
    }
    out
}

/// Product rule on the right circular cone with vertex `apex`, axis `-e3`,
/// half-angle `gamma` and height `height`.
pub fn cone_rule(apex: &Point3, gamma: f64, height: f64, n: usize) -> Vec<(Point3, f64)> {
    let tg = gamma.tan();
    let depth = gauss_interval(n, 0.0, height);
    let unit = gauss_interval(n, 0.0, 1.0);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n * n * n_phi);
    for &(z, wz) in &depth {
        let rmax = z * tg;
        for &(u, wu) in &unit {
            let rr = u * rmax;
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                let x = [apex[0] + rr * phi.cos(), apex[1] + rr * phi.sin(), apex[2] - z];
                out.push((x, wz * wu * rmax * rr * dphi));
            }
        }
    }
    out
}
