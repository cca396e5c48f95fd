use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use vortexlab::canonical::build_ustar;
use vortexlab::geometry::{SurfaceKind, SurfaceModel};
use vortexlab::gl::{self, Checkpoint, Functional, GlOptions, MmField, ProfileKind};
use vortexlab::greens::GreenEvaluator;
use vortexlab::harmonic::{harmonic_basis, lattice, HarmonicBasis, VortexConfig};
use vortexlab::renorm::{self, MinimizeOptions, ThetaOptions};
use vortexlab::vortex::{self, BallOptions};

use crate::config::{InitKind, Loaded, PhiRule, PhiSpec, RunConfig};
use crate::output::{num, Csv, OutDir};
use crate::CliError;

fn numeric(module: &'static str) -> impl Fn(vortexlab::Error) -> CliError {
    move |source| CliError::Numeric { module, source }
}

/// Φ from the config: the lattice point nearest 0, or an explicit vector
/// that must lie on L(a;d).
fn resolve_phi(
    cfg: &RunConfig,
    gev: &GreenEvaluator,
    hb: &HarmonicBasis,
    vortices: &VortexConfig,
) -> Result<(Vec<f64>, bool), CliError> {
    if hb.dim() == 0 {
        return match &cfg.phi {
            PhiSpec::Explicit(p) if !p.is_empty() => Err(CliError::Config("phi must be empty on a genus-0 surface".into())),
            _ => Ok((vec![], true)),
        };
    }
    let lat = lattice(hb, gev, vortices).map_err(numeric("harmonic"))?;
    let phi = match &cfg.phi {
        PhiSpec::Rule(PhiRule::NearestLattice) => lat.nearest_point(&vec![0.0; hb.dim()]).map_err(numeric("harmonic"))?,
        PhiSpec::Explicit(p) => {
            if p.len() != hb.dim() {
                return Err(CliError::Config(format!("phi has {} entries, the surface needs {}", p.len(), hb.dim())));
            }
            p.clone()
        }
    };
    let ok = lat.contains(&phi).map_err(numeric("harmonic"))?;
    Ok((phi, ok))
}

pub fn renorm(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let s = cfg.surface()?;
    let vortices = cfg.vortices(&s)?;
    let hash = cfg.hash();
    let opts = cfg.renorm.clone().unwrap_or_default();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).map_err(numeric("harmonic"))?;
    let (phi, in_lattice) = resolve_phi(cfg, &gev, &hb, &vortices)?;
    if !in_lattice {
        return Err(CliError::Numeric {
            module: "harmonic",
            source: vortexlab::Error::InvalidInput("phi is not a point of the flux lattice L(a;d)".into()),
        });
    }
    let mut report = renorm::w_closed_form(&gev, &hb, &vortices, &phi).map_err(numeric("renorm"))?;
    let mut csv = Csv::new(&hash, &["r", "w_quadrature", "w_closed", "error"]);
    for &r in &opts.radii {
        let wq = renorm::w_quadrature(&gev, &hb, &vortices, &phi, r).map_err(numeric("renorm"))?;
        report.w_quadrature.push((r, wq));
        csv.row(&[num(r), num(wq), num(report.w_closed), num((wq - report.w_closed).abs())]);
    }
    if s.is_embedded() {
        let ustar = build_ustar(&gev, &hb, &vortices, &phi).map_err(numeric("canonical"))?;
        let theta = renorm::theta_minimize(&s, &ustar, &ThetaOptions::default()).map_err(numeric("renorm"))?;
        report.tilde_w = Some(theta.tilde_w);
    }
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    value["phi"] = json!(phi);
    value["phi_in_lattice"] = json!(in_lattice);
    value["surface"] = json!(s.descriptor());
    out.json("renorm_report.json", &hash, value)?;
    out.csv("quadrature_convergence.csv", &csv)
}

fn random_point(s: &SurfaceModel, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    match s.kind {
        SurfaceKind::FlatTorus => Vector3::new(rng.gen(), rng.gen(), 0.0),
        _ => {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        }
    }
}

pub fn minimize_w(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let s = cfg.surface()?;
    let vortices = cfg.vortices(&s)?;
    let seed = cfg.seed()?;
    let hash = cfg.hash();
    let opts = cfg.minimize_w.clone().unwrap_or_default();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).map_err(numeric("harmonic"))?;
    let n = vortices.len();
    let mut header: Vec<String> = ["run", "iterations", "converged", "w", "min_separation"].map(String::from).to_vec();
    for k in 0..n {
        header.extend(["x", "y", "z"].map(|c| format!("a{k}_{c}")));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hash, &header_refs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mopts = MinimizeOptions { max_iter: opts.max_iter, ..Default::default() };
    for run in 0..opts.runs {
        let init = loop {
            let pts = (0..n).map(|_| random_point(&s, &mut rng)).collect();
            let c = VortexConfig::new(pts, vortices.degrees.clone()).map_err(numeric("harmonic"))?;
            if c.min_separation(&s) > 0.1 {
                break c;
            }
        };
        let r = renorm::minimize_w(&gev, &hb, &vortices.degrees, &init, &mopts, |_| Ok(0.0)).map_err(numeric("renorm"))?;
        let mut row = vec![run.to_string(), r.iterations.to_string(), r.converged.to_string(), num(r.w), num(r.cfg.min_separation(&s))];
        for a in &r.cfg.points {
            row.extend([num(a.x), num(a.y), num(a.z)]);
        }
        csv.row(&row);
    }
    out.csv("minimize_w.csv", &csv)
}

/// GL minimizers along the ε list (largest first), each run starting from
/// the previous minimizer.
struct Continuation {
    eps: f64,
    result: gl::GlResult,
}

fn gl_continuation(
    cfg: &RunConfig,
    s: &SurfaceModel,
    functional: Functional,
) -> Result<Vec<Continuation>, CliError> {
    let opts = cfg.gl.clone().unwrap_or_default();
    let pot = cfg.potential()?;
    let eps_list = cfg.epsilons()?;
    let gopts = GlOptions { max_iter: opts.max_iter, rel_tol: opts.rel_tol, ..Default::default() };
    let mm = functional == Functional::Micromagnetic;
    let (mut field, mut mperp) = match opts.init {
        InitKind::Random if mm => {
            let mf = gl::random_magnetization(s, cfg.seed()?);
            (mf.m, Some(mf.mperp))
        }
        InitKind::Random => (gl::random_field(s, cfg.seed()?), None),
        InitKind::Planted => {
            let vortices = cfg.vortices(s)?;
            let gev = GreenEvaluator::new(s);
            let hb = harmonic_basis(s).map_err(numeric("harmonic"))?;
            let u = vortex::planted_field(&gev, &hb, &vortices, eps_list[0]).map_err(numeric("vortex"))?;
            let perp = mm.then(|| MmField::from_tangent(u.clone()).mperp);
            (u, perp)
        }
    };
    let mut runs = vec![];
    for &eps in &eps_list {
        let result = match &mperp {
            Some(p) => {
                let init = MmField::new(s, field.clone(), p.clone()).map_err(numeric("gl"))?;
                gl::minimize_energy_mm(s, &init, eps, &pot, &gopts).map_err(numeric("gl"))?
            }
            None => gl::minimize_energy(s, functional, &field, eps, &pot, &gopts).map_err(numeric("gl"))?,
        };
        if !result.converged {
            log::warn!("GL minimization at ε = {eps} stopped after {} iterations without converging", result.iterations);
        }
        field = result.field.clone();
        mperp = result.mperp.clone();
        runs.push(Continuation { eps, result });
    }
    Ok(runs)
}

pub fn gl(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let s = cfg.surface()?;
    if !cfg.vortices.is_empty() {
        cfg.vortices(&s)?;
    }
    let hash = cfg.hash();
    let pot = cfg.potential()?;
    let functional = cfg.gl.clone().unwrap_or_default().functional;
    let runs = gl_continuation(cfg, &s, functional)?;
    let mut summary = Csv::new(&hash, &["index", "epsilon", "energy", "iterations", "converged", "gradient_norm"]);
    let mut trace = Csv::new(&hash, &["index", "epsilon", "step", "energy"]);
    for (k, run) in runs.iter().enumerate() {
        let r = &run.result;
        summary.row(&[
            k.to_string(),
            num(run.eps),
            num(r.energy),
            r.iterations.to_string(),
            r.converged.to_string(),
            num(r.gradient_norm),
        ]);
        for (step, e) in r.trace.iter().enumerate() {
            trace.row(&[k.to_string(), num(run.eps), step.to_string(), num(*e)]);
        }
        let mut ck = match &r.mperp {
            Some(p) => Checkpoint::from_magnetization(&MmField { m: r.field.clone(), mperp: p.clone() }, run.eps, &pot),
            None => Checkpoint::from_field(&r.field, run.eps, &pot),
        };
        ck.config_hash = Some(hash.clone());
        out.write(&format!("field_{k}.txt"), &ck.to_text())?;
    }
    out.csv("gl_summary.csv", &summary)?;
    out.csv("gl_trace.csv", &trace)
}

pub fn profile(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let hash = cfg.hash();
    let pot = cfg.potential()?;
    let opts = cfg.profile.clone().unwrap_or_default();
    let est = gl::iota_estimate(opts.kind, &pot, &opts.ts, opts.grid).map_err(numeric("gl"))?;
    let mut csv = Csv::new(&hash, &["t", "i_value", "i_plus_pi_log_t"]);
    for ((t, i), sh) in est.ts.iter().zip(&est.i_values).zip(&est.shifted) {
        csv.row(&[num(*t), num(*i), num(*sh)]);
    }
    out.csv("profile.csv", &csv)?;
    let value = json!({
        "kind": opts.kind,
        "potential": pot.name(),
        "grid": opts.grid,
        "iota": est.iota,
        "increment": est.increment,
    });
    out.json("profile_summary.json", &hash, value)
}

pub fn detect(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let s = cfg.surface()?;
    if !cfg.vortices.is_empty() {
        cfg.vortices(&s)?;
    }
    let hash = cfg.hash();
    let opts = cfg.detect.clone().ok_or_else(|| CliError::Config("detect needs a \"detect\" section".into()))?;
    let path = loaded.base_dir.join(&opts.checkpoint);
    let data = std::fs::read(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let ck = gl::parse_checkpoint(&data).map_err(|e| CliError::Config(format!("checkpoint: {e}")))?;
    let field = ck.field(&s).map_err(|e| CliError::Config(format!("checkpoint: {e}")))?;
    let bopts = BallOptions { budget: opts.budget, potential: ck.potential.clone(), ..Default::default() };
    let balls = vortex::ball_construction(&s, &field, ck.epsilon, opts.sigma, &bopts).map_err(numeric("vortex"))?;
    let value = serde_json::to_value(&balls).map_err(|e| CliError::Io(e.to_string()))?;
    out.json("balls.json", &hash, value)
}

pub fn validate_expansion(loaded: &Loaded, out: &mut OutDir) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let s = cfg.surface()?;
    if !cfg.vortices.is_empty() {
        cfg.vortices(&s)?;
    }
    let hash = cfg.hash();
    let pot = cfg.potential()?;
    let functional = cfg.gl.clone().unwrap_or_default().functional;
    if functional == Functional::Micromagnetic {
        return Err(CliError::Config("the expansion check covers the intrinsic and extrinsic energies".into()));
    }
    let opts = cfg.expansion.clone().unwrap_or_default();
    let iota = match opts.iota {
        Some(i) => i,
        None => {
            gl::iota_estimate(ProfileKind::Intrinsic, &pot, &[0.2, 0.1, 0.05, 0.025, 0.0125], 2000)
                .map_err(numeric("gl"))?
                .iota
        }
    };
    let runs = gl_continuation(cfg, &s, functional)?;
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).map_err(numeric("harmonic"))?;
    let mut csv = Csv::new(&hash, &["epsilon", "energy", "n", "n_pi_log_inv_eps", "w", "n_iota", "residual", "tilde_w"]);
    let mut rows = vec![];
    for run in &runs {
        let row = gl::expansion_report(&gev, &hb, &run.result.field, run.eps, &pot, functional, iota, opts.sigma)
            .map_err(numeric("gl"))?;
        csv.row(&[
            num(row.epsilon),
            num(row.energy),
            row.n.to_string(),
            num(row.log_term),
            num(row.w),
            num(row.n_iota),
            num(row.residual),
            row.tilde_w.map(num).unwrap_or_default(),
        ]);
        rows.push(row);
    }
    out.csv("expansion_report.csv", &csv)?;
    // two-ε test: E(ε₁) − E(ε₂) against n π log(ε₁/ε₂)·(−1)
    let pairs: Vec<_> = rows
        .windows(2)
        .map(|w| {
            let measured = w[0].energy - w[1].energy;
            let predicted = w[0].n as f64 * PI * (w[1].epsilon / w[0].epsilon).ln();
            json!({
                "epsilon": [w[0].epsilon, w[1].epsilon],
                "energy_difference": measured,
                "predicted": predicted,
                "relative_error": ((measured - predicted) / predicted).abs(),
                "residual_difference": w[0].residual - w[1].residual,
            })
        })
        .collect();
    out.json("expansion_summary.json", &hash, json!({ "iota": iota, "pairs": pairs }))
}

pub fn resolve_out(cli_out: Option<&Path>, loaded: &Loaded) -> Result<std::path::PathBuf, CliError> {
    match (cli_out, &loaded.config.out) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(p)) => Ok(loaded.base_dir.join(p)),
        (None, None) => Err(CliError::Config("no output directory: pass --out or set \"out\"".into())),
    }
}
