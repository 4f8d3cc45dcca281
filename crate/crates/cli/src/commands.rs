use std::path::{Path, PathBuf};

use lamedn::fem::io::DenseMatrixJson;
use lamedn::fem::{alessandrini_residual, AlessandriniResidual, SolverKind};
use lamedn::geometry::ConeChain;
use lamedn::inverse::{
    fd_derivative_errors, forward, lipschitz_probe, operator_noise, q0_estimate, random_pairs, reconstruct,
    remainder_profile, ForwardContext, GaussNewtonOptions, InverseReport, MeshSummary, RemainderProfile,
};
use lamedn::lame::{AdmissibleBox, LameVector};
use lamedn::rongved::{dgamma33_dt, dgamma33_fd, gamma33_on_axis, kernel_csv, AxisSource, BiphaseParams};
use lamedn::ucp::{
    caccioppoli_check, cone_csv, cone_propagation_experiment, three_sphere_csv, three_sphere_integrals,
    fit_three_sphere, SolutionEnsemble, ThreeSphereFit,
};
use lamedn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SolverSpec};

/// Why a command did not succeed; maps onto the exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum Failure {
    Check(Vec<String>),
    Config(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::InvalidMesh(_) | Error::DegenerateTet { .. } | Error::Io(_) | Error::Json(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

pub struct Run {
    pub cfg: RunConfig,
    pub out: PathBuf,
    failed: Vec<String>,
}

impl Run {
    pub fn new(cfg: RunConfig, out: PathBuf) -> Self {
        Self { cfg, out, failed: Vec::new() }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn context(&self) -> Result<ForwardContext, Failure> {
        let mesh = self.cfg.mesh.build().map_err(Failure::Config)?;
        let solver = match self.cfg.solver {
            SolverSpec::Direct => SolverKind::Direct,
            SolverSpec::Cg { rel_tol } => SolverKind::ConjugateGradient { rel_tol },
        };
        Ok(ForwardContext::new(mesh)?.with_solver(solver))
    }

    fn bounds(&self) -> AdmissibleBox {
        self.cfg.bounds
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed.push(format!("{name}: {detail}"));
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Serializes, re-reads the document as its own type, then writes it.
    fn write_json<T: Serialize + DeserializeOwned>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let v = serde_json::to_value(value).map_err(|e| Failure::Numeric(e.to_string()))?;
        serde_json::from_value::<T>(v.clone())
            .map_err(|e| Failure::Numeric(format!("{name} failed schema validation: {e}")))?;
        let text = serde_json::to_string_pretty(&v).map_err(|e| Failure::Numeric(e.to_string()))?;
        write(&self.path(name), &text)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), Failure> {
        write(&self.path(name), text)
    }

    pub fn finish(self) -> Result<(), Failure> {
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Check(self.failed))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn random_trace(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn lame_of(run: &Run, ctx: &ForwardContext) -> Result<LameVector, Failure> {
    let n = ctx.n_subdomains();
    let l = match &run.cfg.lame {
        Some(p) => p.to_vector().map_err(Failure::Config)?,
        None => LameVector::uniform(n, 0.5, 1.0)?,
    };
    if l.len() != n {
        return Err(Failure::Config(format!("{} Lamé pairs for {n} subdomains", l.len())));
    }
    Ok(l)
}

pub fn cmd_forward(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let l = lame_of(run, &ctx)?;
    if !run.bounds().contains(&l) {
        eprintln!("warning: parameters lie outside the admissible set");
    }
    let dn = forward(&ctx, &l)?;
    run.write_json("dn.json", &DenseMatrixJson::from_dn(&dn))?;
    let asym = dn.symmetry_defect();
    run.check("dn_symmetry", asym <= 1e-10, format!("relative defect {asym:e}"));
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct IdentityReport {
    mesh: MeshSummary,
    pairs: Vec<AlessandriniResidual>,
    max_residual: f64,
}

pub fn cmd_identity_check(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let mut rng = run.rng();
    let n = ctx.n_subdomains();
    let ns = ctx.operators().n_sigma();
    let bx = run.bounds();
    let mut pairs = Vec::new();
    for _ in 0..run.cfg.identity.pairs {
        let (l1, l2) = (bx.sample(n, &mut rng), bx.sample(n, &mut rng));
        let (psi, phi) = (random_trace(ns, &mut rng), random_trace(ns, &mut rng));
        pairs.push(alessandrini_residual(ctx.operators(), &l1, &l2, &psi, &phi)?);
    }
    let max_residual = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    run.write_json("identity.json", &IdentityReport { mesh: MeshSummary::new(&ctx), pairs, max_residual })?;
    let tol = run.cfg.thresholds.alessandrini;
    run.check("alessandrini", max_residual <= tol, format!("max residual {max_residual:e} > {tol:e}"));
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DerivativePoint {
    lame: Vec<f64>,
    fd_errors: Vec<f64>,
    remainder: RemainderProfile,
}

#[derive(Serialize, Deserialize)]
struct DerivativeReport {
    mesh: MeshSummary,
    h: f64,
    points: Vec<DerivativePoint>,
}

pub fn cmd_derivative_check(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let mut rng = run.rng();
    let n = ctx.n_subdomains();
    let spec = run.cfg.derivative.clone();
    let mut points = Vec::new();
    for _ in 0..spec.base_points {
        let l = run.bounds().sample(n, &mut rng);
        let dir: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let dir: Vec<f64> = dir.iter().map(|x| x / m).collect();
        points.push(DerivativePoint {
            lame: l.to_flat(),
            fd_errors: fd_derivative_errors(&ctx, &l, spec.h)?,
            remainder: remainder_profile(&ctx, &l, &dir, &spec.remainder_steps)?,
        });
    }
    let worst = points.iter().flat_map(|p| p.fd_errors.iter().cloned()).fold(0.0, f64::max);
    let slope_gap = points.iter().map(|p| (p.remainder.slope - 2.0).abs()).fold(0.0, f64::max);
    run.write_json("derivative.json", &DerivativeReport { mesh: MeshSummary::new(&ctx), h: spec.h, points })?;
    let t = run.cfg.thresholds.clone();
    run.check("frechet_fd", worst <= t.frechet_fd, format!("relative error {worst:e} > {:e}", t.frechet_fd));
    run.check(
        "remainder_slope",
        slope_gap <= t.remainder_slope,
        format!("slope off by {slope_gap:.3} > {}", t.remainder_slope),
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct KernelReport {
    c: f64,
    alpha: f64,
    gamma: f64,
    gamma33_on_axis: f64,
    dgamma33_dt: f64,
    dgamma33_fd: f64,
    relative_error: f64,
}

pub fn cmd_kernels(run: &mut Run) -> Result<(), Failure> {
    let k = run.cfg.kernels.clone();
    let p = BiphaseParams::from_lame(k.upper, k.lower)?.with_variant(k.variant);
    let src = AxisSource::new(k.c)?;
    let m = k.points.max(2);
    let mut points = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let x1 = -k.extent + 2.0 * k.extent * i as f64 / (m - 1) as f64;
            let x3 = 2.0 * k.extent * (j + 1) as f64 / m as f64;
            if x1 == 0.0 && x3 == k.c {
                continue;
            }
            points.push([x1, 0.0, x3]);
        }
    }
    run.write_text("kernels.csv", &kernel_csv(&points, &src, &p)?)?;
    let (h, kk) = k.direction;
    let exact = dgamma33_dt(&p, h, kk, k.c)?;
    let fd = dgamma33_fd(&p, h, kk, k.c, k.fd_step)?;
    let relative_error = (exact - fd).abs() / exact.abs().max(f64::MIN_POSITIVE);
    run.write_json(
        "kernels.json",
        &KernelReport {
            c: k.c,
            alpha: p.alpha()?,
            gamma: p.gamma()?,
            gamma33_on_axis: gamma33_on_axis(&p, k.c)?,
            dgamma33_dt: exact,
            dgamma33_fd: fd,
            relative_error,
        },
    )?;
    let tol = run.cfg.thresholds.dgamma_fd;
    run.check("dgamma_fd", relative_error <= tol, format!("relative error {relative_error:e} > {tol:e}"));
    Ok(())
}

pub fn cmd_q0(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let mut rng = run.rng();
    let n = ctx.n_subdomains();
    let samples: Vec<LameVector> = (0..run.cfg.q0.samples).map(|_| run.bounds().sample(n, &mut rng)).collect();
    let rep = q0_estimate(&ctx, &samples, run.cfg.seed)?;
    let mut doc = InverseReport::new(&ctx);
    doc.q0 = Some(rep.q0);
    run.write_json("q0.json", &doc)?;
    run.write_json("q0_detail.json", &rep)?;
    let min = run.cfg.thresholds.q0_min;
    run.check("q0_positive", rep.q0 > min, format!("q0 = {:e} <= {min:e}", rep.q0));
    Ok(())
}

pub fn cmd_probe(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let mut rng = run.rng();
    let pairs = random_pairs(&run.bounds(), ctx.n_subdomains(), run.cfg.probe.pairs, &mut rng);
    let rep = lipschitz_probe(&ctx, &pairs)?;
    let mut doc = InverseReport::new(&ctx);
    doc.ratios = rep.ratios();
    run.write_json("probe.json", &doc)?;
    run.write_json("probe_detail.json", &rep)?;
    let finite = rep.pairs.iter().all(|p| p.ratio.is_finite());
    run.check("lipschitz_finite", finite, "non-finite ratio".into());
    if let Some(max) = run.cfg.thresholds.lipschitz_max {
        run.check("lipschitz_max", rep.max_ratio <= max, format!("max ratio {} > {max}", rep.max_ratio));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ReconstructDetail {
    truth: Vec<f64>,
    init: Vec<f64>,
    estimate: Vec<f64>,
    error: f64,
    noise: f64,
    iterations: usize,
    converged: bool,
    options: GaussNewtonOptions,
}

pub fn cmd_reconstruct(run: &mut Run) -> Result<(), Failure> {
    let ctx = run.context()?;
    let mut rng = run.rng();
    let n = ctx.n_subdomains();
    let bx = run.bounds();
    let spec = run.cfg.reconstruct.clone();
    let truth = match &spec.truth {
        Some(t) => t.to_vector().map_err(Failure::Config)?,
        None => bx.sample(n, &mut rng),
    };
    if truth.len() != n || !bx.contains(&truth) {
        return Err(Failure::Config("truth must be admissible with one pair per subdomain".into()));
    }
    let init = (0..10_000)
        .map(|_| {
            let d: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-spec.perturbation..=spec.perturbation)).collect();
            truth.offset(&d, 1.0)
        })
        .find(|l| bx.contains(l))
        .ok_or_else(|| Failure::Config("no admissible start within the perturbation".into()))?;
    let clean = forward(&ctx, &truth)?;
    let observed = if spec.noise > 0.0 {
        let level = spec.noise * clean.star_norm();
        clean.with_entries(clean.entries() + operator_noise(ctx.gram(), level, &mut rng)?)
    } else {
        clean
    };
    let opts = GaussNewtonOptions { max_iters: spec.max_iters, tol: spec.tol, bounds: bx, ..Default::default() };
    let rec = reconstruct(&ctx, &observed, &init, &opts, Some(&truth))?;
    let error = rec.lame.dist_inf(&truth);
    let mut doc = InverseReport::new(&ctx);
    doc.iterates = rec.iterates.clone();
    run.write_json("reconstruct.json", &doc)?;
    run.write_json(
        "reconstruct_detail.json",
        &ReconstructDetail {
            truth: truth.to_flat(),
            init: init.to_flat(),
            estimate: rec.lame.to_flat(),
            error,
            noise: spec.noise,
            iterations: rec.iterations,
            converged: rec.converged(),
            options: opts,
        },
    )?;
    let tol = run.cfg.thresholds.reconstruct_error;
    run.check("reconstruct_error", error <= tol, format!("error {error:e} > {tol:e}"));
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct UcpReport {
    three_sphere: ThreeSphereFit,
    caccioppoli_max: f64,
    cone_eta: f64,
    cone_max_c_impl: f64,
    cone_members: usize,
}

pub fn cmd_ucp(run: &mut Run) -> Result<(), Failure> {
    let u = run.cfg.ucp.clone();
    let mut rng = run.rng();
    let bx = run.bounds();
    let origin = [0.0; 3];
    let (d0, d1) = u.source_distance;
    let fit = SolutionEnsemble::kelvin(u.fit, &origin, d0, d1, &bx, &mut rng)?;
    let test = SolutionEnsemble::kelvin(u.test, &origin, d0, d1, &bx, &mut rng)?;
    let fit_vals = three_sphere_integrals(&fit, &origin, u.radii)?;
    let test_vals = three_sphere_integrals(&test, &origin, u.radii)?;
    run.write_text("three_sphere.csv", &three_sphere_csv(&fit_vals))?;
    run.write_text("three_sphere_test.csv", &three_sphere_csv(&test_vals))?;
    let ts = fit_three_sphere(&fit_vals, &test_vals)?;

    let mut cacc = SolutionEnsemble::linear(20, &mut rng);
    cacc.extend(fit.clone());
    let (rho2, rho1) = u.caccioppoli;
    let cr = caccioppoli_check(&cacc, &origin, rho2, rho1)?;

    let probe = ConeChain::new(u.cone_rho, u.cone_gamma3, 1e-9)?;
    let chain = ConeChain::new(u.cone_rho, u.cone_gamma3, u.cone_r_fraction * probe.chi * probe.t0)?;
    let cone_ens = SolutionEnsemble::kelvin_above(u.cone_members, 0.5, 2.0, 0.5, &bx, &mut rng);
    let cone = cone_propagation_experiment(&chain, &cone_ens, u.eps_small, u.theta_bar)?;
    run.write_text("cone.csv", &cone_csv(&cone))?;
    let report = UcpReport {
        three_sphere: ts.clone(),
        caccioppoli_max: cr.max_ratio,
        cone_eta: cone.eta,
        cone_max_c_impl: cone.max_c_impl,
        cone_members: cone.rows.len(),
    };
    run.write_json("ucp.json", &report)?;
    let tol = run.cfg.thresholds.three_sphere_violation;
    run.check(
        "three_sphere_violation",
        ts.violation_rate <= tol,
        format!("held-out violation {} > {tol}", ts.violation_rate),
    );
    run.check("three_sphere_theta", ts.theta0 > 0.0 && ts.theta0 < 1.0, format!("theta0 = {}", ts.theta0));
    run.check("cone_c_impl", cone.max_c_impl.is_finite(), "non-finite implied constant".into());
    run.check("caccioppoli", cr.max_ratio.is_finite(), "non-finite ratio".into());
    Ok(())
}
