use std::collections::VecDeque;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_eps, DiscreteField, Functional, MmField, Potential, Stencil};
use crate::error::{Error, Result};
use crate::geometry::{torus_delta, Point, SurfaceKind, SurfaceModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlOptions {
    /// Gradient-flow steps before switching to L-BFGS.
    pub flow_steps: usize,
    pub max_iter: usize,
    /// Stop when the dual norm of the projected gradient is below
    /// rel_tol·max(E, 10⁻⁴·area).
    pub rel_tol: f64,
    pub memory: usize,
}

impl Default for GlOptions {
    fn default() -> Self {
        GlOptions { flow_steps: 200, max_iter: 20_000, rel_tol: 1e-6, memory: 10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlResult {
    pub field: DiscreteField,
    /// Normal component (micromagnetic only).
    pub mperp: Option<Vec<f64>>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step.
    pub trace: Vec<f64>,
}

/// The packed problem: `block` reals per vertex.
struct Problem<'a, 's> {
    st: &'a Stencil<'s>,
    kind: Functional,
    eps: f64,
    pot: &'a Potential,
    block: usize,
    /// Lumped mass per real coordinate.
    mass: Vec<f64>,
}

impl Problem<'_, '_> {
    fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let nv = self.mass.len() / self.block;
        let u: Vec<Complex64> = (0..nv).map(|v| Complex64::new(x[self.block * v], x[self.block * v + 1])).collect();
        match self.kind {
            Functional::Micromagnetic => {
                let perp: Vec<f64> = (0..nv).map(|v| x[3 * v + 2]).collect();
                let mut gm = vec![Complex64::new(0.0, 0.0); nv];
                let mut gp = vec![0.0; nv];
                let (d, p) = self.st.eval_mm(&u, &perp, self.eps, self.pot, Some((&mut gm, &mut gp)), None);
                for v in 0..nv {
                    g[3 * v] = gm[v].re;
                    g[3 * v + 1] = gm[v].im;
                    g[3 * v + 2] = gp[v];
                }
                d + p
            }
            _ => {
                let mut gu = vec![Complex64::new(0.0, 0.0); nv];
                let (d, p, sh) = self.st.eval(&u, self.eps, self.pot, Some(&mut gu), None);
                for v in 0..nv {
                    g[2 * v] = gu[v].re;
                    g[2 * v + 1] = gu[v].im;
                }
                d + p + sh
            }
        }
    }

    /// |u| ≤ 1, or |M| = 1 for the magnetization.
    fn project(&self, x: &mut [f64]) {
        for c in x.chunks_mut(self.block) {
            let n = c.iter().map(|a| a * a).sum::<f64>().sqrt();
            let unit = self.block == 3;
            if (unit && n > 0.0) || n > 1.0 {
                c.iter_mut().for_each(|a| *a /= n);
            }
        }
    }

    /// Gradient with the components that leave the admissible set removed.
    fn projected(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = g.to_vec();
        for (c, gc) in x.chunks(self.block).zip(out.chunks_mut(self.block)) {
            let n2: f64 = c.iter().map(|a| a * a).sum();
            let radial: f64 = c.iter().zip(gc.iter()).map(|(a, b)| a * b).sum();
            let on_sphere = self.block == 3 || n2 >= 1.0 - 1e-12;
            if on_sphere && (self.block == 3 || radial < 0.0) && n2 > 0.0 {
                for (gi, ci) in gc.iter_mut().zip(c) {
                    *gi -= radial / n2 * ci;
                }
            }
        }
        out
    }

    fn dual_norm(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mass).map(|(g, m)| g * g / m).sum::<f64>().sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected descent: `flow_steps` of mass-preconditioned gradient flow with
/// adaptive step, then L-BFGS; every accepted step lowers the energy.
fn run(p: &Problem, mut x: Vec<f64>, opts: &GlOptions) -> Result<(Vec<f64>, f64, f64, usize, bool, Vec<f64>)> {
    let n = x.len();
    p.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = p.eval(&x, &mut g);
    let mut trace = vec![f];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut tau = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut gn = p.dual_norm(&p.projected(&x, &g));
    // energies near zero (vortex-free minimizers) are measured against 1e-4·area
    let floor = 1e-4 * p.mass.iter().sum::<f64>() / p.block as f64;
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    while iterations < opts.max_iter {
        if !f.is_finite() {
            return Err(Error::NoConvergence { what: "GL minimization diverged".into(), residual: f });
        }
        if gn <= opts.rel_tol * f.abs().max(floor) {
            converged = true;
            break;
        }
        iterations += 1;
        let pg = p.projected(&x, &g);
        let flow = iterations <= opts.flow_steps;
        // search direction
        let mut d: Vec<f64> = if flow || hist.is_empty() {
            pg.iter().zip(&p.mass).map(|(g, m)| -g / m).collect()
        } else {
            let mut q = pg.clone();
            let mut alphas = Vec::with_capacity(hist.len());
            for (s, y, rho) in hist.iter().rev() {
                let a = rho * dot(s, &q);
                q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
                alphas.push(a);
            }
            let (s, y, _) = hist.back().unwrap();
            let ymy: f64 = y.iter().zip(&p.mass).map(|(y, m)| y * y / m).sum();
            let gamma = dot(s, y) / ymy;
            let mut r: Vec<f64> = q.iter().zip(&p.mass).map(|(q, m)| gamma * q / m).collect();
            for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &r);
                r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
            }
            r.iter_mut().for_each(|v| *v = -*v);
            r
        };
        if dot(&d, &pg) >= 0.0 {
            hist.clear();
            d = pg.iter().zip(&p.mass).map(|(g, m)| -g / m).collect();
        }
        let mut t = if flow || hist.is_empty() { tau } else { 1.0 };
        let mut accepted = false;
        let mut ft = f;
        for _ in 0..50 {
            for i in 0..n {
                xt[i] = x[i] + t * d[i];
            }
            p.project(&mut xt);
            ft = p.eval(&xt, &mut gt);
            let dec: f64 = (0..n).map(|i| g[i] * (xt[i] - x[i])).sum();
            if ft.is_finite() && ft <= f + 1e-4 * dec && ft <= f {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if !hist.is_empty() {
                hist.clear();
                continue;
            }
            break;
        }
        if flow || hist.is_empty() {
            tau = (t * 2.0).min(1e3);
        }
        let s: Vec<f64> = (0..n).map(|i| xt[i] - x[i]).collect();
        // on |M| = 1 the normal part of the gradient is a multiplier: pair tangential gradients
        let y: Vec<f64> = if p.block == 3 {
            let pgt = p.projected(&xt, &gt);
            (0..n).map(|i| pgt[i] - pg[i]).collect()
        } else {
            (0..n).map(|i| gt[i] - g[i]).collect()
        };
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > opts.memory {
                hist.pop_front();
            }
        }
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
        trace.push(f);
        gn = p.dual_norm(&p.projected(&x, &g));
    }
    log::debug!("GL descent: {iterations} iterations, E = {f:.10e}, |g| = {gn:.3e}, converged = {converged}");
    Ok((x, f, gn, iterations, converged, trace))
}

fn masses(s: &SurfaceModel, block: usize) -> Vec<f64> {
    s.dec.star0.iter().flat_map(|&w| std::iter::repeat_n(w, block)).collect()
}

/// Minimize E^in or E^ex from `init` with the amplitude cap |u| ≤ 1.
pub fn minimize_energy(
    s: &SurfaceModel,
    kind: Functional,
    init: &DiscreteField,
    eps: f64,
    pot: &Potential,
    opts: &GlOptions,
) -> Result<GlResult> {
    check_eps(eps)?;
    pot.validate()?;
    init.check(s)?;
    if kind == Functional::Micromagnetic {
        return Err(Error::InvalidInput("use minimize_energy_mm for the micromagnetic energy".into()));
    }
    if kind == Functional::Extrinsic && !s.is_embedded() {
        return Err(Error::Unsupported("extrinsic energy needs an embedded surface".into()));
    }
    let st = Stencil::new(s, kind == Functional::Extrinsic)?;
    let p = Problem { st: &st, kind, eps, pot, block: 2, mass: masses(s, 2) };
    let x0: Vec<f64> = init.values.iter().flat_map(|z| [z.re, z.im]).collect();
    let (x, energy, gradient_norm, iterations, converged, trace) = run(&p, x0, opts)?;
    let values = x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(GlResult {
        field: DiscreteField { values, surface_hash: init.surface_hash.clone() },
        mperp: None,
        energy,
        gradient_norm,
        iterations,
        converged,
        trace,
    })
}

/// Minimize E^mm from `init`, renormalizing |M| = 1 after every step.
pub fn minimize_energy_mm(s: &SurfaceModel, init: &MmField, eps: f64, pot: &Potential, opts: &GlOptions) -> Result<GlResult> {
    check_eps(eps)?;
    pot.validate()?;
    init.m.check(s)?;
    if !s.is_embedded() {
        return Err(Error::Unsupported("micromagnetic energy needs an embedded surface".into()));
    }
    let st = Stencil::new(s, false)?;
    let p = Problem { st: &st, kind: Functional::Micromagnetic, eps, pot, block: 3, mass: masses(s, 3) };
    let x0: Vec<f64> = init.m.values.iter().zip(&init.mperp).flat_map(|(z, q)| [z.re, z.im, *q]).collect();
    let (x, energy, gradient_norm, iterations, converged, trace) = run(&p, x0, opts)?;
    let values = x.chunks(3).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(GlResult {
        field: DiscreteField { values, surface_hash: init.m.surface_hash.clone() },
        mperp: Some(x.chunks(3).map(|c| c[2]).collect()),
        energy,
        gradient_norm,
        iterations,
        converged,
        trace,
    })
}

/// Smooth random ambient field: a sum of Gaussian bumps with random vector
/// coefficients, projected to the tangent planes.
fn random_ambient(s: &SurfaceModel, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = s.mesh.num_vertices();
    let bumps = 12;
    let width = 0.35 * s.diameter();
    let centers: Vec<Point> = (0..bumps).map(|_| s.mesh.positions[rng.gen_range(0..nv)]).collect();
    let coefs: Vec<Point> =
        (0..bumps).map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    (0..nv)
        .map(|v| {
            let x = s.mesh.positions[v];
            let mut w = Point::zeros();
            for (c, a) in centers.iter().zip(&coefs) {
                let d2 = match s.kind {
                    SurfaceKind::FlatTorus => torus_delta(c, &x).norm_squared(),
                    _ => (c - x).norm_squared(),
                };
                w += (-d2 / (2.0 * width * width)).exp() * a;
            }
            w
        })
        .collect()
}

/// Reproducible smooth random initial field with max |u| = 1.
pub fn random_field(s: &SurfaceModel, seed: u64) -> DiscreteField {
    let amb = random_ambient(s, seed);
    let vals: Vec<Complex64> = amb.iter().enumerate().map(|(v, w)| s.frames.to_coeff(v, w)).collect();
    let m = vals.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    DiscreteField { values: vals.iter().map(|z| z / m).collect(), surface_hash: s.hash() }
}

/// Reproducible smooth random unit magnetization.
pub fn random_magnetization(s: &SurfaceModel, seed: u64) -> MmField {
    let amb = random_ambient(s, seed);
    let mut m = Vec::with_capacity(amb.len());
    let mut perp = Vec::with_capacity(amb.len());
    for (v, w) in amb.iter().enumerate() {
        let w = if w.norm() > 0.0 { w.normalize() } else { s.frames.normals[v] };
        m.push(Complex64::new(w.dot(&s.frames.e1[v]), w.dot(&s.frames.e2[v])));
        perp.push(w.dot(&s.frames.normals[v]));
    }
    MmField { m: DiscreteField { values: m, surface_hash: s.hash() }, mperp: perp }
}
