use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::lame::{poisson_ratio, AdmissibleBox};
use crate::rongved::{kelvin_displacement_gradient, kelvin_matrix};

/// An exact solution of a constant-coefficient Lamé system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Member {
    /// `scale · Γ(x, source) direction` for the tensor `(lambda, mu)`.
    Kelvin { source: Point3, direction: [f64; 3], lambda: f64, mu: f64, scale: f64 },
    /// `u(x) = A x + b`.
    Linear { a: [[f64; 3]; 3], b: [f64; 3] },
}

impl Member {
    pub fn singularity(&self) -> Option<Point3> {
        match self {
            Member::Kelvin { source, .. } => Some(*source),
            Member::Linear { .. } => None,
        }
    }

    pub fn lame(&self) -> Option<(f64, f64)> {
        match self {
            Member::Kelvin { lambda, mu, .. } => Some((*lambda, *mu)),
            Member::Linear { .. } => None,
        }
    }

    pub fn value(&self, x: &Point3) -> Result<[f64; 3]> {
        match self {
            Member::Kelvin { source, direction, lambda, mu, scale } => {
                let g = kelvin_matrix(x, source, *mu, poisson_ratio(*lambda, *mu)?)?;
                Ok([0, 1, 2].map(|i| scale * (0..3).map(|j| g[(i, j)] * direction[j]).sum::<f64>()))
            }
            Member::Linear { a, b } => Ok([0, 1, 2].map(|i| b[i] + (0..3).map(|j| a[i][j] * x[j]).sum::<f64>())),
        }
    }

    /// `∂u_i/∂x_k`.
    pub fn gradient(&self, x: &Point3) -> Result<Matrix3<f64>> {
        match self {
            Member::Kelvin { source, direction, lambda, mu, scale } => Ok(kelvin_displacement_gradient(
                x,
                source,
                direction,
                *mu,
                poisson_ratio(*lambda, *mu)?,
            )? * *scale),
            Member::Linear { a, .. } => Ok(Matrix3::from_fn(|i, k| a[i][k])),
        }
    }

    pub fn scaled(&self, c: f64) -> Member {
        match self {
            Member::Kelvin { source, direction, lambda, mu, scale } => Member::Kelvin {
                source: *source,
                direction: *direction,
                lambda: *lambda,
                mu: *mu,
                scale: scale * c,
            },
            Member::Linear { a, b } => Member::Linear {
                a: a.map(|r| r.map(|v| v * c)),
                b: b.map(|v| v * c),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Member::Kelvin { direction, scale, .. } => *scale == 0.0 || direction.iter().all(|&d| d == 0.0),
            Member::Linear { a, b } => a.iter().flatten().chain(b).all(|&v| v == 0.0),
        }
    }
}

/// Fourth-order finite-difference residual `|μΔu + (λ+μ)∇div u|` of a member
/// at `x`, with the scale of the two terms.
pub fn navier_residual(m: &Member, x: &Point3, lambda: f64, mu: f64, h: f64) -> Result<(f64, f64)> {
    let at = |dx: [f64; 3]| m.value(&[x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]]);
    let mut hess = [[[0.0; 3]; 3]; 3];
    let c = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];
    let d1 = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    for a in 0..3 {
        for b in a..3 {
            let mut v = [0.0; 3];
            if a == b {
                for &(s, w) in &c {
                    let mut dx = [0.0; 3];
                    dx[a] = s * h;
                    let u = at(dx)?;
                    (0..3).for_each(|i| v[i] += w * u[i] / (h * h));
                }
            } else {
                for &(s, ws) in &d1 {
                    for &(t, wt) in &d1 {
                        let mut dx = [0.0; 3];
                        dx[a] = s * h;
                        dx[b] = t * h;
                        let u = at(dx)?;
                        (0..3).for_each(|i| v[i] += ws * wt * u[i] / (h * h));
                    }
                }
            }
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    let mut res = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        let lap: f64 = (0..3).map(|a| hess[a][a][i]).sum();
        let gdiv: f64 = (0..3).map(|j| hess[i][j][j]).sum();
        let r = mu * lap + (lambda + mu) * gdiv;
        res += r * r;
        scale = scale.max((mu * lap).abs()).max(((lambda + mu) * gdiv).abs());
    }
    Ok((res.sqrt(), scale))
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionEnsemble {
    pub members: Vec<Member>,
}

impl SolutionEnsemble {
    /// Kelvin sources at distance in `[d_min, d_max]` from `center`, random
    /// directions and random admissible tensors.
    pub fn kelvin<R: Rng + ?Sized>(
        n: usize,
        center: &Point3,
        d_min: f64,
        d_max: f64,
        bx: &AdmissibleBox,
        rng: &mut R,
    ) -> Result<Self> {
        if !(d_min > 0.0 && d_min <= d_max) {
            return Err(Error::InvalidInput(format!("source distances [{d_min}, {d_max}]")));
        }
        let members = (0..n)
            .map(|_| {
                let u = unit_vector(rng);
                let d = rng.gen_range(d_min..=d_max);
                let l = bx.sample(1, rng);
                Member::Kelvin {
                    source: [0, 1, 2].map(|i| center[i] + d * u[i]),
                    direction: unit_vector(rng),
                    lambda: l.lambdas()[0],
                    mu: l.mus()[0],
                    scale: 1.0,
                }
            })
            .collect();
        Ok(Self { members })
    }

    /// Kelvin sources in the half-space `x3 ≥ z_min`, within `spread` of the
    /// `x3` axis horizontally and below `z_max`.
    pub fn kelvin_above<R: Rng + ?Sized>(
        n: usize,
        z_min: f64,
        z_max: f64,
        spread: f64,
        bx: &AdmissibleBox,
        rng: &mut R,
    ) -> Self {
        let members = (0..n)
            .map(|_| {
                let l = bx.sample(1, rng);
                Member::Kelvin {
                    source: [
                        rng.gen_range(-spread..=spread),
                        rng.gen_range(-spread..=spread),
                        rng.gen_range(z_min..=z_max),
                    ],
                    direction: unit_vector(rng),
                    lambda: l.lambdas()[0],
                    mu: l.mus()[0],
                    scale: 1.0,
                }
            })
            .collect();
        Self { members }
    }

    /// Linear fields with entries uniform in `[-1, 1]`.
    pub fn linear<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let members = (0..n)
            .map(|_| Member::Linear {
                a: [[0.0; 3]; 3].map(|r| r.map(|_: f64| rng.gen_range(-1.0..=1.0))),
                b: [0.0; 3].map(|_: f64| rng.gen_range(-1.0..=1.0)),
            })
            .collect();
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { members: self.members.iter().map(|m| m.scaled(c)).collect() }
    }

    pub fn extend(&mut self, other: SolutionEnsemble) {
        self.members.extend(other.members);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn members_solve_the_lame_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bx = AdmissibleBox::default();
        let mut ens = SolutionEnsemble::kelvin(10, &[0.0; 3], 1.5, 3.0, &bx, &mut rng).unwrap();
        ens.extend(SolutionEnsemble::linear(3, &mut rng));
        for m in &ens.members {
            let (lam, mu) = m.lame().unwrap_or((0.7, 1.1));
            for x in [[0.1, -0.2, 0.3], [0.5, 0.4, -0.2]] {
                let (r, s) = navier_residual(m, &x, lam, mu, 4e-3).unwrap();
                assert!(r <= 1e-8 * s.max(1e-300) || (r < 1e-9 && s < 1e-6), "{m:?}: {r} vs {s}");
            }
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let m = Member::Kelvin { source: [0.0, 0.0, 2.0], direction: [0.3, 0.0, 0.9], lambda: 0.6, mu: 1.2, scale: 2.0 };
        let x = [0.2, 0.1, 0.3];
        let g = m.gradient(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (up, um) = (m.value(&xp).unwrap(), m.value(&xm).unwrap());
            for i in 0..3 {
                assert!(((up[i] - um[i]) / (2.0 * h) - g[(i, k)]).abs() < 1e-7);
            }
        }
        assert!(m.scaled(0.0).is_zero());
    }
}
