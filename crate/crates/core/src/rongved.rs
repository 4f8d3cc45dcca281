//! Point-force solutions of constant-coefficient and biphase isotropic
//! elastostatics: the Kelvin matrix, the third column of the laminate
//! solution in the upper half space, and on-axis closed forms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Point3;
use crate::lame::poisson_ratio;

fn check_phase(mu: f64, nu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) || !(nu > -1.0 && nu < 0.5) {
        return invalid(format!("need mu > 0 and -1 < nu < 1/2, got mu={mu}, nu={nu}"));
    }
    Ok(())
}

/// Kelvin matrix `Γ(x, y)` for shear modulus `mu` and Poisson ratio `nu`:
/// `Γ_ij = [(3−4ν)δ_ij/R + r_i r_j/R³] / (16πμ(1−ν))`.
pub fn kelvin_matrix(x: &Point3, y: &Point3, mu: f64, nu: f64) -> Result<Matrix3<f64>> {
    check_phase(mu, nu)?;
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let rr = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rr == 0.0 {
        return Err(Error::InvalidSource(*y, "coincides with the evaluation point".into()));
    }
    let a = 1.0 / (16.0 * PI * mu * (1.0 - nu));
    let r3 = rr * rr * rr;
    Ok(Matrix3::from_fn(|i, j| {
        let d = if i == j { (3.0 - 4.0 * nu) / rr } else { 0.0 };
        a * (d + r[i] * r[j] / r3)
    }))
}

/// `∂u_i/∂x_k` of the displacement `u = Γ(·, y) l`.
pub fn kelvin_displacement_gradient(
    x: &Point3,
    y: &Point3,
    l: &[f64; 3],
    mu: f64,
    nu: f64,
) -> Result<Matrix3<f64>> {
    check_phase(mu, nu)?;
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let rr = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rr == 0.0 {
        return Err(Error::InvalidSource(*y, "coincides with the evaluation point".into()));
    }
    let a = 1.0 / (16.0 * PI * mu * (1.0 - nu));
    let (r3, r5) = (rr.powi(3), rr.powi(5));
    let rl = r[0] * l[0] + r[1] * l[1] + r[2] * l[2];
    Ok(Matrix3::from_fn(|i, k| {
        // Σ_j ∂_k Γ_ij l_j
        let dik = if i == k { 1.0 } else { 0.0 };
        a * (-(3.0 - 4.0 * nu) * l[i] * r[k] / r3 + (dik * rl + l[k] * r[i]) / r3
            - 3.0 * r[i] * rl * r[k] / r5)
    }))
}

/// `α = (μ − μ′)/(μ + (3−4ν)μ′)`.
pub fn f1_alpha(mu: f64, mu_low: f64, nu: f64) -> Result<f64> {
    let den = mu + (3.0 - 4.0 * nu) * mu_low;
    if den == 0.0 {
        return Err(Error::Domain("alpha denominator vanishes".into()));
    }
    Ok((mu - mu_low) / den)
}

/// Which denominator of `γ` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaVariant {
    /// `μ′ + (3−4ν′)ν`.
    #[default]
    AsPrinted,
    /// `μ′ + (3−4ν′)μ`, the dimensionally consistent reading.
    MuVariant,
}

/// `γ = 4(1−ν)μ[(1−2ν)(3−4ν′) − 2((ν−ν′)/(μ−μ′))μ′] / (μ′ + (3−4ν′)ν)`, or
/// with `μ` in the last slot for [`GammaVariant::MuVariant`]. The ratio term
/// is zero when `ν = ν′`.
pub fn f2_gamma(mu: f64, mu_low: f64, nu: f64, nu_low: f64, variant: GammaVariant) -> Result<f64> {
    let ratio = if nu == nu_low {
        0.0
    } else if mu == mu_low {
        return Err(Error::Domain("gamma is singular for equal shear moduli and distinct Poisson ratios".into()));
    } else {
        (nu - nu_low) / (mu - mu_low) * mu_low
    };
    let last = match variant {
        GammaVariant::AsPrinted => nu,
        GammaVariant::MuVariant => mu,
    };
    let den = mu_low + (3.0 - 4.0 * nu_low) * last;
    if den == 0.0 {
        return Err(Error::Domain("gamma denominator vanishes".into()));
    }
    Ok(4.0 * (1.0 - nu) * mu * ((1.0 - 2.0 * nu) * (3.0 - 4.0 * nu_low) - 2.0 * ratio) / den)
}

/// Two bonded half spaces: `(mu_up, nu_up)` for `x3 > 0`, `(mu_low, nu_low)`
/// below.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiphaseParams {
    pub mu_up: f64,
    pub nu_up: f64,
    pub mu_low: f64,
    pub nu_low: f64,
    #[serde(default)]
    pub variant: GammaVariant,
}

impl BiphaseParams {
    pub fn new(mu_up: f64, nu_up: f64, mu_low: f64, nu_low: f64) -> Result<Self> {
        check_phase(mu_up, nu_up)?;
        check_phase(mu_low, nu_low)?;
        Ok(Self { mu_up, nu_up, mu_low, nu_low, variant: GammaVariant::AsPrinted })
    }

    /// From Lamé pairs `(λ, μ)` of the two phases.
    pub fn from_lame(upper: (f64, f64), lower: (f64, f64)) -> Result<Self> {
        Self::new(
            upper.1,
            poisson_ratio(upper.0, upper.1)?,
            lower.1,
            poisson_ratio(lower.0, lower.1)?,
        )
    }

    pub fn with_variant(mut self, variant: GammaVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn alpha(&self) -> Result<f64> {
        f1_alpha(self.mu_up, self.mu_low, self.nu_up)
    }

    pub fn gamma(&self) -> Result<f64> {
        f2_gamma(self.mu_up, self.mu_low, self.nu_up, self.nu_low, self.variant)
    }

    /// Lower-phase first Lamé parameter, `2μ′ν′/(1−2ν′)`.
    pub fn lambda_low(&self) -> f64 {
        2.0 * self.mu_low * self.nu_low / (1.0 - 2.0 * self.nu_low)
    }

    pub fn lambda_up(&self) -> f64 {
        2.0 * self.mu_up * self.nu_up / (1.0 - 2.0 * self.nu_up)
    }
}

/// Point force at `(0, 0, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSource {
    c: f64,
}

impl AxisSource {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("source height must be positive, got {c}"));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn point(&self) -> Point3 {
        [0.0, 0.0, self.c]
    }
}

/// Third column `Γ(x, y) e3` of the laminate solution at `x3 > 0`:
///
/// ```text
/// (3−4ν)/(4(1−ν)) (0, 0, B) − [x3 ∇B + ∇β] / (4(1−ν))
/// ```
pub fn gamma_e3_upper(x: &Point3, src: &AxisSource, p: &BiphaseParams) -> Result<[f64; 3]> {
    if !(x[2] > 0.0) {
        return invalid(format!("point {x:?} is not in the upper half space"));
    }
    let c = src.c;
    let d1 = [x[0], x[1], x[2] - c];
    let e = [x[0], x[1], x[2] + c];
    let r1 = (d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]).sqrt();
    if r1 == 0.0 {
        return Err(Error::InvalidSource(src.point(), "coincides with the evaluation point".into()));
    }
    let r2 = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
    let (mu, nu) = (p.mu_up, p.nu_up);
    let alpha = p.alpha()?;
    let gamma = if alpha == 0.0 { 0.0 } else { p.gamma()? };
    let k = 1.0 / (4.0 * PI * mu);
    let s = 3.0 - 4.0 * nu;
    let (r1_3, r2_3, r2_5) = (r1.powi(3), r2.powi(3), r2.powi(5));
    let b = k * (1.0 / r1 + alpha * (s / r2 + 2.0 * c * e[2] / r2_3));
    let lg = r2 + e[2];
    let mut col = [0.0; 3];
    for i in 0..3 {
        let d3 = if i == 2 { 1.0 } else { 0.0 };
        let db = k * (-d1[i] / r1_3
            + alpha * (-s * e[i] / r2_3 + 2.0 * c * (d3 / r2_3 - 3.0 * e[2] * e[i] / r2_5)));
        let dbeta = -k * (-c * d1[i] / r1_3
            + alpha * (-c * s * e[i] / r2_3 - gamma * (e[i] / r2 + d3) / lg));
        col[i] = s / (4.0 * (1.0 - nu)) * b * d3 - (x[2] * db + dbeta) / (4.0 * (1.0 - nu));
    }
    Ok(col)
}

fn check_height(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return invalid(format!("source height must be positive, got {c}"));
    }
    if c == 1.0 {
        return Err(Error::Domain("source at the evaluation point e3 (c = 1)".into()));
    }
    Ok(())
}

/// `Γ(e3, c e3) e3 · e3` in closed form.
pub fn gamma33_on_axis(p: &BiphaseParams, c: f64) -> Result<f64> {
    check_height(c)?;
    let (mu, nu) = (p.mu_up, p.nu_up);
    let alpha = p.alpha()?;
    let gamma = if alpha == 0.0 { 0.0 } else { p.gamma()? };
    let s = 3.0 - 4.0 * nu;
    Ok(1.0 / (4.0 * PI * mu * (1.0 - c).abs())
        + alpha * (s * s - gamma + s) / (16.0 * PI * (1.0 + c) * mu * (1.0 - nu))
        + c * alpha / (4.0 * PI * (c + 1.0).powi(3) * mu * (1.0 - nu)))
}

fn same_upper(p: &BiphaseParams, q: &BiphaseParams) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0);
    close(p.mu_up, q.mu_up) && close(p.nu_up, q.nu_up)
}

/// `Γ(e3, c e3)e3·e3 − Γ̄(e3, c e3)e3·e3` for two laminates sharing the
/// upper phase. The first group `(1/μ − 1/μ̄)/(4π|1−c|)` vanishes under
/// that assumption but is kept for completeness.
pub fn gamma33_ondiag_difference(p: &BiphaseParams, pbar: &BiphaseParams, c: f64) -> Result<f64> {
    check_height(c)?;
    if !same_upper(p, pbar) {
        return invalid("laminates must share the upper phase");
    }
    let group = |q: &BiphaseParams| -> Result<(f64, f64)> {
        let a = q.alpha()?;
        let g = if a == 0.0 { 0.0 } else { q.gamma()? };
        let s = 3.0 - 4.0 * q.nu_up;
        let w = q.mu_up * (1.0 - q.nu_up);
        Ok((a * (s * s - g + s) / w, a / w))
    };
    let (b1, c1) = group(p)?;
    let (b2, c2) = group(pbar)?;
    Ok((1.0 / p.mu_up - 1.0 / pbar.mu_up) / (4.0 * PI * (1.0 - c).abs())
        + (b1 - b2) / (16.0 * PI * (1.0 + c))
        + c * (c1 - c2) / (4.0 * PI * (c + 1.0).powi(3)))
}

/// `d/dt Γ_t(e3, c e3) e3 · e3` at `t = 0` when the lower phase moves along
/// `λ′ + t h`, `μ′ + t k`:
///
/// ```text
/// {[4(1−ν)(3−4ν)α′ − (αγ)′](1+c)² + 4cα′} / (16πμ(1−ν)(1+c)³)
/// ```
pub fn dgamma33_dt(p: &BiphaseParams, h: f64, k: f64, c: f64) -> Result<f64> {
    check_height(c)?;
    if h == 0.0 && k == 0.0 {
        return Ok(0.0);
    }
    let (mi, ni) = (p.mu_up, p.nu_up);
    let (mu, nu) = (p.mu_low, p.nu_low);
    let lam = p.lambda_low();
    if !(lam + mu > 0.0) {
        return Err(Error::Domain("lower phase has lambda + mu <= 0".into()));
    }
    if mi == mu {
        return Err(Error::Domain("derivative of gamma is singular for equal shear moduli".into()));
    }
    let s = 3.0 - 4.0 * ni;
    let da_den = mi + s * mu;
    let alpha = (mi - mu) / da_den;
    let dalpha = -4.0 * (1.0 - ni) * mi * k / (da_den * da_den);
    let dnu = (h * mu - lam * k) / (2.0 * (lam + mu) * (lam + mu));

    let q = mu * (ni - nu) / (mi - mu);
    let dq = (k * (ni - nu) - mu * dnu) / (mi - mu) + mu * (ni - nu) * k / ((mi - mu) * (mi - mu));
    let pre = 4.0 * (1.0 - ni) * mi;
    let num = pre * ((1.0 - 2.0 * ni) * (3.0 - 4.0 * nu) - 2.0 * q);
    let dnum = pre * (-4.0 * (1.0 - 2.0 * ni) * dnu - 2.0 * dq);
    let last = match p.variant {
        GammaVariant::AsPrinted => ni,
        GammaVariant::MuVariant => mi,
    };
    let den = mu + (3.0 - 4.0 * nu) * last;
    let dden = k - 4.0 * dnu * last;
    let gamma = num / den;
    let dgamma = (dnum * den - num * dden) / (den * den);
    let dag = dalpha * gamma + alpha * dgamma;
    let cp = 1.0 + c;
    Ok(((4.0 * (1.0 - ni) * s * dalpha - dag) * cp * cp + 4.0 * c * dalpha)
        / (16.0 * PI * mi * (1.0 - ni) * cp.powi(3)))
}

/// Richardson-extrapolated central difference of the on-axis difference
/// formula along the same lower-phase path as [`dgamma33_dt`].
pub fn dgamma33_fd(p: &BiphaseParams, h: f64, k: f64, c: f64, step: f64) -> Result<f64> {
    let (lam, mu) = (p.lambda_low(), p.mu_low);
    let upper = (p.lambda_up(), p.mu_up);
    let at = |t: f64| BiphaseParams::from_lame(upper, (lam + t * h, mu + t * k)).map(|q| q.with_variant(p.variant));
    let central = |s: f64| -> Result<f64> { Ok(gamma33_ondiag_difference(&at(s)?, &at(-s)?, c)? / (2.0 * s)) };
    Ok((4.0 * central(step / 2.0)? - central(step)?) / 3.0)
}

/// CSV rows `x1,x2,x3,c,G13,G23,G33` of the upper-half third column.
pub fn kernel_csv(points: &[Point3], src: &AxisSource, p: &BiphaseParams) -> Result<String> {
    let mut out = String::from("x1,x2,x3,c,G13,G23,G33\n");
    for x in points {
        let g = gamma_e3_upper(x, src, p)?;
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            x[0], x[1], x[2], src.c, g[0], g[1], g[2]
        )
        .expect("writing to a String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::ball_rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_gamma_examples() {
        assert_eq!(f1_alpha(1.3, 1.3, 0.2).unwrap(), 0.0);
        assert_eq!(f1_alpha(1.3, 0.0, 0.2).unwrap(), 1.0);
        assert!((f1_alpha(2.0, 1.0, 0.0).unwrap() - 0.2).abs() < 1e-16);
        assert_eq!(f2_gamma(1.0, 2.0, 0.0, 0.0, GammaVariant::AsPrinted).unwrap(), 6.0);
        assert_eq!(f2_gamma(1.0, 2.0, 0.5, 0.5, GammaVariant::AsPrinted).unwrap(), 0.0);
        assert!(f2_gamma(1.0, 1.0, 0.2, 0.2, GammaVariant::AsPrinted).unwrap().is_finite());
        assert!(f2_gamma(1.0, 1.0, 0.2, 0.3, GammaVariant::AsPrinted).is_err());
        // μ′ + (3−4ν′)μ = 2 + 3 = 5
        assert_eq!(f2_gamma(1.0, 2.0, 0.0, 0.0, GammaVariant::MuVariant).unwrap(), 12.0 / 5.0);
    }

    #[test]
    fn hand_value_on_axis() {
        let p = BiphaseParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let g = gamma_e3_upper(&[0.0, 0.0, 2.0], &AxisSource::new(1.0).unwrap(), &p).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert!((g[2] - 1.0 / (4.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn kelvin_symmetry_and_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x: Point3 = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let y: Point3 = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let (mu, nu) = (rng.gen_range(0.5..2.0), rng.gen_range(-0.5..0.45));
            let a = kelvin_matrix(&x, &y, mu, nu).unwrap();
            let b = kelvin_matrix(&y, &x, mu, nu).unwrap();
            assert_eq!(a, b.transpose());
            assert!((a - a.transpose()).amax() == 0.0);
            let s = rng.gen_range(0.1..10.0);
            let c = kelvin_matrix(&x.map(|v| s * v), &y.map(|v| s * v), mu, nu).unwrap();
            assert!((c * s - a).amax() <= 1e-14 * a.amax());
        }
        assert!(kelvin_matrix(&[1.0; 3], &[1.0; 3], 1.0, 0.2).is_err());
    }

    #[test]
    fn kelvin_decay() {
        let mut bound: f64 = 0.0;
        for k in -6..=6 {
            let r = 10f64.powf(k as f64 / 2.0);
            let g = kelvin_matrix(&[r / 3f64.sqrt(); 3], &[0.0; 3], 1.0, 0.3).unwrap();
            bound = bound.max(g.norm() * r);
        }
        let g = kelvin_matrix(&[1.0, 0.0, 0.0], &[0.0; 3], 1.0, 0.3).unwrap();
        assert!(bound <= 2.0 * g.norm());
    }

    #[test]
    fn kelvin_gradient_matches_finite_differences() {
        let x = [0.3, -0.4, 0.8];
        let y = [0.1, 0.2, -0.1];
        let l = [0.2, -0.7, 0.5];
        let du = kelvin_displacement_gradient(&x, &y, &l, 1.3, 0.27).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let up = kelvin_matrix(&xp, &y, 1.3, 0.27).unwrap() * nalgebra::Vector3::from(l);
            let um = kelvin_matrix(&xm, &y, 1.3, 0.27).unwrap() * nalgebra::Vector3::from(l);
            for i in 0..3 {
                assert!(((up[i] - um[i]) / (2.0 * h) - du[(i, k)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kelvin_weak_delta() {
        // ∫ ℂ∇̂Γl : ∇̂φ = φ(y)·l for φ = (1 − |x−y|²/ρ²)⁴ m supported in the ball
        let y = [0.2, -0.1, 0.4];
        let rho = 0.7;
        let (lam, mu) = (0.8, 1.3);
        let nu = poisson_ratio(lam, mu).unwrap();
        let l = [0.3, 0.5, -0.2];
        let m = [0.6, -0.1, 0.9];
        let mut total = 0.0;
        for (x, w) in ball_rule(&y, rho, 24) {
            let du = kelvin_displacement_gradient(&x, &y, &l, mu, nu).unwrap();
            let eu = 0.5 * (du + du.transpose());
            let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let s = 1.0 - (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]) / (rho * rho);
            // ∇φ = m ⊗ (−8 s³ r / ρ²)
            let dphi = Matrix3::from_fn(|i, k| m[i] * (-8.0 * s.powi(3) * r[k] / (rho * rho)));
            let ep = 0.5 * (dphi + dphi.transpose());
            let sig = eu * (2.0 * mu) + Matrix3::identity() * (lam * eu.trace());
            total += w * sig.dot(&ep);
        }
        let expected = l[0] * m[0] + l[1] * m[1] + l[2] * m[2];
        assert!((total - expected).abs() < 1e-8, "{total} vs {expected}");
    }

    #[test]
    fn equal_phases_reduce_to_kelvin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let mu = rng.gen_range(0.5..2.0);
            let nu = rng.gen_range(-0.4..0.45);
            let p = BiphaseParams::new(mu, nu, mu, nu).unwrap();
            let c = rng.gen_range(0.1..2.0);
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.01..3.0)];
            let src = AxisSource::new(c).unwrap();
            let col = gamma_e3_upper(&x, &src, &p).unwrap();
            let k = kelvin_matrix(&x, &src.point(), mu, nu).unwrap();
            for i in 0..3 {
                assert!((col[i] - k[(i, 2)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn on_axis_closed_form_matches_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let p = BiphaseParams::new(
                rng.gen_range(0.5..2.0),
                rng.gen_range(-0.4..0.45),
                rng.gen_range(0.5..2.0),
                rng.gen_range(-0.4..0.45),
            )
            .unwrap();
            for c in [0.25, 1.0 / 3.0, 0.5, 0.8, 1.7, 3.0] {
                let col = gamma_e3_upper(&[0.0, 0.0, 1.0], &AxisSource::new(c).unwrap(), &p).unwrap();
                assert_eq!(col[0], 0.0);
                assert_eq!(col[1], 0.0);
                let g = gamma33_on_axis(&p, c).unwrap();
                assert!((g - col[2]).abs() <= 1e-12 * g.abs(), "c={c}: {g} vs {}", col[2]);
            }
        }
    }

    #[test]
    fn difference_formula_structure() {
        let p = BiphaseParams::new(1.0, 0.25, 1.5, 0.1).unwrap();
        assert_eq!(gamma33_ondiag_difference(&p, &p, 1.0 / 3.0).unwrap(), 0.0);
        let q = BiphaseParams::new(1.0, 0.25, 1.5, 0.3).unwrap();
        let c = 1.0 / 3.0;
        let d = gamma33_ondiag_difference(&p, &q, c).unwrap();
        let direct = |b: &BiphaseParams| {
            gamma_e3_upper(&[0.0, 0.0, 1.0], &AxisSource::new(c).unwrap(), b).unwrap()[2]
        };
        assert!((d - (direct(&p) - direct(&q))).abs() < 1e-10 * d.abs().max(1e-3));
        assert!(d != 0.0);
        assert!(gamma33_ondiag_difference(&p, &q, 1.0).is_err());
        let other_top = BiphaseParams::new(1.2, 0.25, 1.5, 0.3).unwrap();
        assert!(gamma33_ondiag_difference(&p, &other_top, c).is_err());
    }

    #[test]
    fn derivative_linearity() {
        let p = BiphaseParams::from_lame((0.7, 1.0), (0.4, 1.6)).unwrap();
        assert_eq!(dgamma33_dt(&p, 0.0, 0.0, 0.3).unwrap(), 0.0);
        let a = dgamma33_dt(&p, 0.3, -0.2, 0.3).unwrap();
        let b = dgamma33_dt(&p, 0.6, -0.4, 0.3).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-15 * b.abs());
    }

    /// `div(ℂ∇̂u) = μΔu + (λ+μ)∇(div u)` by fourth-order differences.
    fn navier_residual(f: &dyn Fn(&Point3) -> [f64; 3], x: &Point3, lam: f64, mu: f64, h: f64) -> (f64, f64) {
        let shift = |d: [f64; 3]| [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
        let second = |a: usize, b: usize| -> [f64; 3] {
            let mut out = [0.0; 3];
            if a == b {
                let c = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
                for (s, w) in (-2..=2).zip(c) {
                    let mut d = [0.0; 3];
                    d[a] = s as f64 * h;
                    let v = f(&shift(d));
                    for i in 0..3 {
                        out[i] += w * v[i] / (h * h);
                    }
                }
            } else {
                let c1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
                for (s, ws) in (-2..=2).zip(c1) {
                    for (t, wt) in (-2..=2).zip(c1) {
                        if ws == 0.0 || wt == 0.0 {
                            continue;
                        }
                        let mut d = [0.0; 3];
                        d[a] = s as f64 * h;
                        d[b] = t as f64 * h;
                        let v = f(&shift(d));
                        for i in 0..3 {
                            out[i] += ws * wt * v[i] / (h * h);
                        }
                    }
                }
            }
            out
        };
        let mut hess = [[[0.0; 3]; 3]; 3]; // [a][b][i] = ∂a∂b u_i
        for a in 0..3 {
            for b in a..3 {
                let v = second(a, b);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        let mut res = [0.0; 3];
        let mut scale: f64 = 0.0;
        for i in 0..3 {
            let lap: f64 = (0..3).map(|a| hess[a][a][i]).sum();
            let gdiv: f64 = (0..3).map(|j| hess[i][j][j]).sum();
            res[i] = mu * lap + (lam + mu) * gdiv;
            scale = scale.max((mu * lap).abs()).max(((lam + mu) * gdiv).abs());
        }
        ((res[0] * res[0] + res[1] * res[1] + res[2] * res[2]).sqrt(), scale)
    }

    #[test]
    fn biphase_column_solves_upper_equation() {
        let p = BiphaseParams::from_lame((0.7, 1.0), (0.4, 1.6)).unwrap();
        let src = AxisSource::new(0.5).unwrap();
        let f = |x: &Point3| gamma_e3_upper(x, &src, &p).unwrap();
        let (lam, mu) = (p.lambda_up(), p.mu_up);
        for x in [[0.3, 0.2, 0.9], [-0.5, 0.1, 0.4], [0.7, -0.6, 1.5], [0.05, 0.02, 0.3]] {
            let (r1, s1) = navier_residual(&f, &x, lam, mu, 2e-3);
            let (r2, _) = navier_residual(&f, &x, lam, mu, 1e-3);
            assert!(r2 < r1 || r2 < 1e-8 * s1, "x={x:?}: {r1} then {r2}");
            assert!(r2 <= 1e-6 * s1, "x={x:?}: {r2} vs scale {s1}");
        }
        // Kelvin too
        let g = |x: &Point3| {
            let k = kelvin_matrix(x, &[0.1, 0.0, -0.3], 1.0, poisson_ratio(0.7, 1.0).unwrap()).unwrap();
            [k[(0, 1)], k[(1, 1)], k[(2, 1)]]
        };
        let (r, s) = navier_residual(&g, &[0.5, 0.4, 0.6], 0.7, 1.0, 1e-3);
        assert!(r <= 1e-6 * s);
    }

    #[test]
    fn alpha_sign_and_column_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bx = crate::lame::AdmissibleBox::default();
        for _ in 0..500 {
            let l = bx.sample(2, &mut rng);
            let p = BiphaseParams::from_lame((l.lambdas()[0], l.mus()[0]), (l.lambdas()[1], l.mus()[1])).unwrap();
            let a = p.alpha().unwrap();
            assert_eq!(a.signum(), (p.mu_up - p.mu_low).signum());
            assert!(a.abs() <= 1.0);
        }
        let p = BiphaseParams::from_lame((0.7, 1.0), (0.4, 1.6)).unwrap();
        let src = AxisSource::new(0.5).unwrap();
        let dir = [0.3, 0.4, 0.866];
        let mut bound: f64 = 0.0;
        for k in 0..12 {
            let r = 0.05 * 2f64.powi(k);
            let x = [r * dir[0], r * dir[1], 0.5 + r * dir[2]];
            let g = gamma_e3_upper(&x, &src, &p).unwrap();
            bound = bound.max(g[2].abs() * r);
        }
        assert!(bound.is_finite() && bound < 1.0);
    }

    #[test]
    fn csv_rows() {
        let p = BiphaseParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let s = kernel_csv(&[[0.0, 0.0, 2.0]], &AxisSource::new(1.0).unwrap(), &p).unwrap();
        assert!(s.starts_with("x1,x2,x3,c,G13,G23,G33\n"));
        assert_eq!(s.lines().count(), 2);
    }
}
