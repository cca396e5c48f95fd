//! Renormalized energies W and W̃, a quadrature evaluation of W and
//! minimization over vortex positions.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalField;
use crate::error::{Error, Result};
use crate::geometry::{Point, SurfaceKind, SurfaceModel};
use crate::greens::{psi0_field, psi_field, GreenEvaluator, PsiField};
use crate::harmonic::{lattice, HarmonicBasis, VortexConfig};
use crate::linalg::{self, CgOptions};
use crate::quad;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WTerms {
    /// 4π² Σ_{l<k} d_l d_k G(a_l, a_k)
    pub green_pairs: f64,
    /// 2π² Σ d_k² H(a_k, a_k)
    pub robin: f64,
    /// 2π Σ d_k ψ0(a_k)
    pub psi0_vortex: f64,
    /// ½|Φ|²
    pub flux_sq: f64,
    /// ½ ∫ |dψ0|²
    pub psi0_dirichlet: f64,
}

impl WTerms {
    pub fn total(&self) -> f64 {
        self.green_pairs + self.robin + self.psi0_vortex + self.flux_sq + self.psi0_dirichlet
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RenormReport {
    pub w_closed: f64,
    pub terms: WTerms,
    /// (r, W_quadrature(r)) pairs.
    pub w_quadrature: Vec<(f64, f64)>,
    pub tilde_w: Option<f64>,
    pub theta_field: Option<Vec<f64>>,
}

pub fn w_closed_form(gev: &GreenEvaluator, hb: &HarmonicBasis, cfg: &VortexConfig, phi: &[f64]) -> Result<RenormReport> {
    let s = gev.surface();
    if phi.len() != hb.dim() {
        return Err(Error::InvalidInput(format!("flux vector has {} entries, expected {}", phi.len(), hb.dim())));
    }
    let cfg = cfg.validated(s)?;
    let (a, d) = (&cfg.points, &cfg.degrees);
    let mut t = WTerms::default();
    for k in 0..a.len() {
        for l in 0..k {
            t.green_pairs += 4.0 * PI * PI * (d[l] * d[k]) as f64 * gev.eval(&a[l], &a[k])?;
        }
    }
    // the Robin mass is constant on the model surfaces
    let h_const = if s.is_analytic() && !a.is_empty() { Some(gev.robin_mass(&a[0])?) } else { None };
    for (ak, &dk) in a.iter().zip(d) {
        let h = match h_const {
            Some(h) => h,
            None => gev.robin_mass(ak)?,
        };
        t.robin += 2.0 * PI * PI * (dk * dk) as f64 * h;
    }
    if s.kind == SurfaceKind::TriMesh {
        let psi0 = psi0_field(s)?;
        for (ak, &dk) in a.iter().zip(d) {
            t.psi0_vortex += TAU * dk as f64 * psi0[s.nearest_vertex(ak)];
        }
        let kp = linalg::mul(&s.dec.lap0, &psi0);
        t.psi0_dirichlet = 0.5 * linalg::dot(&psi0, &kp);
    }
    t.flux_sq = 0.5 * phi.iter().map(|x| x * x).sum::<f64>();
    Ok(RenormReport { w_closed: t.total(), terms: t, ..Default::default() })
}

/// C^∞ cutoff: 1 on [0, R/2], 0 beyond R.
fn cutoff(rho: f64, big_r: f64) -> f64 {
    let t = (rho - 0.5 * big_r) / (0.5 * big_r);
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let (a, b) = (f(t), f(1.0 - t));
    b / (a + b)
}

/// ∫_{S_r} ½|j*|² vol + π log r Σ d_k², with S_r the complement of the
/// geodesic balls B_r(a_k).
///
/// Flat torus and sphere: a partition of unity splits the integrand into
/// pieces around each vortex, integrated in geodesic polar coordinates
/// (Gauss–Legendre in log ρ, trapezoid in angle), and a smooth remainder
/// integrated by a tensor rule over the whole surface. Meshes: midpoint rule
/// on faces whose barycenter lies outside every ball.
pub fn w_quadrature(gev: &GreenEvaluator, hb: &HarmonicBasis, cfg: &VortexConfig, phi: &[f64], r: f64) -> Result<f64> {
    let s = gev.surface();
    if phi.len() != hb.dim() {
        return Err(Error::InvalidInput(format!("flux vector has {} entries, expected {}", phi.len(), hb.dim())));
    }
    let cfg = cfg.validated(s)?;
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius {r} must be positive")));
    }
    let sep = if cfg.len() > 1 { cfg.min_separation(s) } else { s.diameter() };
    if r.sqrt() > sep * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("√r = {} exceeds the minimal vortex distance {sep}", r.sqrt())));
    }
    let log_term = PI * r.ln() * cfg.degrees.iter().map(|d| (d * d) as f64).sum::<f64>();
    let energy = match s.kind {
        SurfaceKind::TriMesh => mesh_energy(s, &cfg, hb, &psi_field(gev, &cfg)?, phi, r)?,
        _ => analytic_energy(gev, &cfg, hb, phi, r)?,
    };
    Ok(energy + log_term)
}

fn analytic_energy(gev: &GreenEvaluator, cfg: &VortexConfig, hb: &HarmonicBasis, phi: &[f64], r: f64) -> Result<f64> {
    let s = gev.surface();
    let mut harmonic = Vector3::zeros();
    if let Some(vs) = &hb.vectors {
        for (v, c) in vs.iter().zip(phi) {
            harmonic += *c * v;
        }
    }
    let density = |x: &Point| -> Result<f64> {
        let mut j = harmonic;
        for (a, &d) in cfg.points.iter().zip(&cfg.degrees) {
            j += d as f64 * gev.dstar_green_vector(a, x)?;
        }
        Ok(0.5 * j.norm_squared())
    };
    let n = cfg.len();
    // cutoff radius per vortex: half the distance to its nearest neighbour
    let radii: Vec<f64> = (0..n)
        .map(|k| {
            let mut m = s.diameter();
            for l in 0..n {
                if l != k {
                    m = m.min(s.geodesic_dist(&cfg.points[k], &cfg.points[l]));
                }
            }
            (0.5 * m).min(0.5)
        })
        .collect();
    for &big_r in &radii {
        if r >= big_r {
            return Err(Error::InvalidInput(format!("radius {r} reaches the cutoff radius {big_r}")));
        }
    }
    let weight = |x: &Point| -> f64 {
        let mut w = 1.0;
        for (a, &big_r) in cfg.points.iter().zip(&radii) {
            w -= cutoff(s.geodesic_dist(a, x), big_r);
        }
        w
    };

    // near field
    let n_ang = 96;
    let mut total = 0.0;
    for (a, &big_r) in cfg.points.iter().zip(&radii) {
        let (e1, e2, nrm) = s.tangent_frame(a);
        let mut radial: Vec<(f64, f64)> = Vec::new(); // (ρ, weight incl. Jacobian dρ)
        let split = 0.5 * big_r;
        if r < split {
            let (l0, l1) = (r.ln(), split.ln());
            let panels = ((l1 - l0) / 0.5).ceil() as usize;
            for p in 0..panels {
                let a0 = l0 + (l1 - l0) * p as f64 / panels as f64;
                let b0 = l0 + (l1 - l0) * (p + 1) as f64 / panels as f64;
                for (t, w) in quad::gauss_legendre_on(12, a0, b0) {
                    radial.push((t.exp(), w * t.exp()));
                }
            }
        }
        let lo = r.max(split);
        for p in 0..8 {
            let a0 = lo + (big_r - lo) * p as f64 / 8.0;
            let b0 = lo + (big_r - lo) * (p + 1) as f64 / 8.0;
            radial.extend(quad::gauss_legendre_on(12, a0, b0));
        }
        for (rho, wr) in radial {
            let chi = cutoff(rho, big_r);
            if chi == 0.0 {
                continue;
            }
            let mut ring = 0.0;
            for m in 0..n_ang {
                let th = TAU * (m as f64 + 0.5) / n_ang as f64;
                let dir = th.cos() * e1 + th.sin() * e2;
                let (x, jac) = match s.kind {
                    SurfaceKind::UnitSphere => (rho.cos() * nrm + rho.sin() * dir, rho.sin()),
                    _ => (s.normalize_point(&(a + rho * dir))?, rho),
                };
                ring += density(&x)? * jac;
            }
            total += wr * chi * ring * TAU / n_ang as f64;
        }
    }

    // smooth remainder
    let rmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid = ((96.0 / rmin).ceil() as usize).clamp(256, 2048);
    match s.kind {
        SurfaceKind::FlatTorus => {
            let h = 1.0 / grid as f64;
            for i in 0..grid {
                for j in 0..grid {
                    let x = Vector3::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0);
                    let w = weight(&x);
                    if w > 0.0 {
                        total += h * h * w * density(&x)?;
                    }
                }
            }
        }
        _ => {
            let nz = grid / 2;
            let nphi = grid;
            for (z, wz) in quad::gauss_legendre_on(nz, -1.0, 1.0) {
                let rz = (1.0 - z * z).sqrt();
                for m in 0..nphi {
                    let ph = TAU * m as f64 / nphi as f64;
                    let x = Vector3::new(rz * ph.cos(), rz * ph.sin(), z);
                    let w = weight(&x);
                    if w > 0.0 {
                        total += wz * TAU / nphi as f64 * w * density(&x)?;
                    }
                }
            }
        }
    }
    Ok(total)
}

fn mesh_energy(s: &SurfaceModel, cfg: &VortexConfig, hb: &HarmonicBasis, psi: &PsiField, phi: &[f64], r: f64) -> Result<f64> {
    let mut j = psi.dstar.clone();
    for (jv, h) in j.iter_mut().zip(hb.combine(phi)) {
        *jv += h;
    }
    let m = &s.mesh;
    let mut total = 0.0;
    for f in 0..m.num_faces() {
        let bary = m.face_barycenter(f);
        if cfg.points.iter().any(|a| (bary - a).norm() < r) {
            continue;
        }
        let w = whitney_at_barycenter(s, f, &j);
        total += 0.5 * w.norm_squared() * m.face_area(f);
    }
    Ok(total)
}

/// Vector of the Whitney 1-form of an edge cochain at a face barycenter.
pub fn whitney_at_barycenter(s: &SurfaceModel, f: usize, j: &[f64]) -> Point {
    let m = &s.mesh;
    let [i0, i1, i2] = m.faces[f];
    let p0 = m.positions[i0];
    let e01 = m.edge_vector(i0, i1);
    let e02 = m.edge_vector(i0, i2);
    let pts = [p0, p0 + e01, p0 + e02];
    let n = e01.cross(&e02);
    let area2 = n.norm();
    let nu = n / area2;
    // ∇λ_k = N × (opposite edge) / 2A
    let grad = |k: usize| nu.cross(&(pts[(k + 2) % 3] - pts[(k + 1) % 3])) / area2;
    let mut w = Vector3::zeros();
    for k in 0..3 {
        let (a, b) = (m.faces[f][k], m.faces[f][(k + 1) % 3]);
        let (e, sg) = m.edge_between(a, b).expect("face edge");
        w += sg * j[e] * (grad((k + 1) % 3) - grad(k)) / 3.0;
    }
    w
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the largest position update falls below this.
    pub step_tol: f64,
    /// Finite-difference step as a fraction of the surface diameter.
    pub fd_step: f64,
    /// Opposite-degree vortices closer than this abort the descent.
    pub annihilation_dist: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_iter: 5000, step_tol: 1e-6, fd_step: 1e-4, annihilation_dist: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub cfg: VortexConfig,
    pub phi: Vec<f64>,
    pub w: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Local minimizer of W over vortex positions (projected gradient descent
/// with Armijo backtracking) alternating with Φ ← the lattice point of
/// L(a;d) nearest the origin. `objective_extra` is added to W (use it for
/// W + W̃ comparisons); pass `|_| Ok(0.0)` for W alone.
pub fn minimize_w<F>(
    gev: &GreenEvaluator,
    hb: &HarmonicBasis,
    degrees: &[i32],
    init: &VortexConfig,
    opts: &MinimizeOptions,
    objective_extra: F,
) -> Result<MinimizeResult>
where
    F: Fn(&VortexConfig) -> Result<f64>,
{
    let s = gev.surface();
    if !s.is_analytic() {
        return Err(Error::Unsupported("position minimization needs continuous vortex positions".into()));
    }
    if init.degrees != degrees {
        return Err(Error::InvalidInput("initial configuration carries different degrees".into()));
    }
    let mut cfg = init.validated(s)?;
    let n = cfg.len();
    let h = opts.fd_step * s.diameter();
    let flux = |c: &VortexConfig| -> Result<Vec<f64>> { lattice(hb, gev, c)?.nearest_point(&vec![0.0; hb.dim()]) };
    let energy = |c: &VortexConfig, phi: &[f64]| -> Result<f64> { Ok(w_closed_form(gev, hb, c, phi)?.w_closed + objective_extra(c)?) };
    let check_annihilation = |c: &VortexConfig| -> Result<()> {
        for k in 0..n {
            for l in 0..k {
                if c.degrees[k] * c.degrees[l] < 0 {
                    let d = s.geodesic_dist(&c.points[k], &c.points[l]);
                    if d < opts.annihilation_dist {
                        return Err(Error::Annihilation { separation: d });
                    }
                }
            }
        }
        Ok(())
    };
    let moved = |c: &VortexConfig, disp: &[Point]| -> Result<VortexConfig> {
        let pts = c.points.iter().zip(disp).map(|(a, v)| s.exp_map(a, v)).collect::<Result<Vec<_>>>()?;
        Ok(VortexConfig { points: pts, degrees: c.degrees.clone() })
    };
    let mut phi = flux(&cfg)?;
    let mut w = energy(&cfg, &phi)?;
    let mut t = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        // central differences in normal coordinates at each vortex
        let mut grad = vec![Vector3::zeros(); n];
        for k in 0..n {
            let (e1, e2, _) = s.tangent_frame(&cfg.points[k]);
            for e in [e1, e2] {
                let mut disp = vec![Vector3::zeros(); n];
                disp[k] = h * e;
                let wp = energy(&moved(&cfg, &disp)?, &phi)?;
                disp[k] = -h * e;
                let wm = energy(&moved(&cfg, &disp)?, &phi)?;
                grad[k] += (wp - wm) / (2.0 * h) * e;
            }
        }
        let g2: f64 = grad.iter().map(|g| g.norm_squared()).sum();
        let mut accepted = None;
        for _ in 0..60 {
            let disp: Vec<Point> = grad.iter().map(|g| -t * g).collect();
            let trial = moved(&cfg, &disp)?;
            if let Ok(wt) = energy(&trial, &phi) {
                if wt <= w - 1e-4 * t * g2 {
                    accepted = Some((trial, wt, disp));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, wn, disp)) = accepted else {
            converged = true;
            break;
        };
        let step = disp.iter().map(|d| d.norm()).fold(0.0, f64::max);
        cfg = next;
        w = wn;
        check_annihilation(&cfg)?;
        t = (t * 2.0).min(1e3);
        let new_phi = flux(&cfg)?;
        let phi_changed = new_phi.iter().zip(&phi).any(|(a, b)| (a - b).abs() > 1e-9);
        if phi_changed {
            phi = new_phi;
            w = energy(&cfg, &phi)?;
        }
        if step < opts.step_tol && !phi_changed {
            converged = true;
            break;
        }
    }
    Ok(MinimizeResult { cfg, phi, w, iterations, converged })
}

/// Shape operator S(v) = −D̄_v N at x. On a mesh, the operator of the
/// nearest vertex from a quadric fit over its two-ring.
pub fn shape_operator(s: &SurfaceModel, x: &Point, v: &Point) -> Result<Point> {
    match s.kind {
        SurfaceKind::FlatTorus => Err(Error::Unsupported("the flat torus is not embedded".into())),
        SurfaceKind::UnitSphere => {
            let n = x.normalize();
            Ok(-(v - v.dot(&n) * n))
        }
        SurfaceKind::TriMesh => {
            let (e1, e2, _, sm) = fitted_shape(s, s.nearest_vertex(x))?;
            let c = sm * Vector2::new(v.dot(&e1), v.dot(&e2));
            Ok(c.x * e1 + c.y * e2)
        }
    }
}

/// Frame (e1, e2, N) and the symmetric shape operator in (e1, e2) at a
/// mesh vertex, from a least-squares quadric fit of the two-ring.
pub fn fitted_shape(s: &SurfaceModel, v: usize) -> Result<(Point, Point, Point, Matrix2<f64>)> {
    let m = &s.mesh;
    let mut ring: Vec<usize> = m.neighbors(v).collect();
    for &w in ring.clone().iter() {
        for u in m.neighbors(w) {
            if u != v && !ring.contains(&u) {
                ring.push(u);
            }
        }
    }
    let p = m.positions[v];
    let mut nrm = s.frames.normals[v];
    let mut e1 = s.frames.e1[v];
    let mut hess = Matrix2::zeros();
    for _ in 0..3 {
        e1 = (e1 - e1.dot(&nrm) * nrm).normalize();
        let e2 = nrm.cross(&e1);
        let rows = ring.len();
        let mut a = DMatrix::zeros(rows, 5);
        let mut b = DVector::zeros(rows);
        for (k, &q) in ring.iter().enumerate() {
            let d = m.positions[q] - p;
            let (u, w, h) = (d.dot(&e1), d.dot(&e2), d.dot(&nrm));
            a[(k, 0)] = 0.5 * u * u;
            a[(k, 1)] = u * w;
            a[(k, 2)] = 0.5 * w * w;
            a[(k, 3)] = u;
            a[(k, 4)] = w;
            b[k] = h;
        }
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::InvalidMesh(format!("quadric fit failed at vertex {v}: {e}")))?;
        hess = Matrix2::new(sol[0], sol[1], sol[1], sol[2]);
        let tilt = sol[3] * e1 + sol[4] * e2;
        nrm = (nrm - tilt).normalize();
        if tilt.norm() < 1e-12 {
            break;
        }
    }
    let e1 = (e1 - e1.dot(&nrm) * nrm).normalize();
    Ok((e1, nrm.cross(&e1), nrm, hess))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaOptions {
    pub max_iter: usize,
    /// Stop when the Euler–Lagrange residual (L² norm) drops below this.
    pub tol: f64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions { max_iter: 10_000, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaResult {
    pub theta: Vec<f64>,
    pub tilde_w: f64,
    /// L² norm of −ΔΘ + (S u, S iu) cos 2Θ + ½(|S iu|² − |S u|²) sin 2Θ.
    pub residual: f64,
    /// ‖dΘ‖ in L².
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// W̃ = min_Θ ½∫ |dΘ|² + |S(e^{iΘ}u*)|², starting from Θ ≡ 0.
pub fn theta_minimize(s: &SurfaceModel, ustar: &CanonicalField, opts: &ThetaOptions) -> Result<ThetaResult> {
    theta_minimize_from(s, ustar, vec![0.0; s.mesh.num_vertices()], opts)
}

pub fn theta_minimize_from(s: &SurfaceModel, ustar: &CanonicalField, init: Vec<f64>, opts: &ThetaOptions) -> Result<ThetaResult> {
    if !s.is_embedded() {
        return Err(Error::Unsupported("the flat torus is not embedded".into()));
    }
    let nv = s.mesh.num_vertices();
    if init.len() != nv || ustar.field.len() != nv {
        return Err(Error::InvalidInput("field and Θ must live on the surface's vertices".into()));
    }
    // vertex weights; rescaled to the exact area on the model sphere
    let scale = if s.is_analytic() { s.total_area / s.dec.star0.iter().sum::<f64>() } else { 1.0 };
    let wts: Vec<f64> = s.dec.star0.iter().map(|w| w * scale).collect();
    // per vertex: a = |S u|², b = |S iu|², c = (S u, S iu)
    let mut coef = Vec::with_capacity(nv);
    for v in 0..nv {
        let u = s.frames.to_vector(v, ustar.field[v]);
        let (su, siu) = match s.kind {
            SurfaceKind::UnitSphere => {
                let x = s.mesh.positions[v].normalize();
                let u = (u - u.dot(&x) * x).normalize();
                (shape_operator(s, &x, &u)?, shape_operator(s, &x, &x.cross(&u))?)
            }
            _ => {
                let (e1, e2, n, sm) = fitted_shape(s, v)?;
                let u = (u - u.dot(&n) * n).normalize();
                let iu = n.cross(&u);
                let cu = sm * Vector2::new(u.dot(&e1), u.dot(&e2));
                let ci = sm * Vector2::new(iu.dot(&e1), iu.dot(&e2));
                (cu.x * e1 + cu.y * e2, ci.x * e1 + ci.y * e2)
            }
        };
        coef.push((su.norm_squared(), siu.norm_squared(), su.dot(&siu)));
    }
    let value = |th: &[f64]| -> f64 {
        let kt = linalg::mul(&s.dec.lap0, th);
        let mut f = 0.5 * linalg::dot(th, &kt);
        for v in 0..nv {
            let (a, b, c) = coef[v];
            let (sn, cs) = th[v].sin_cos();
            f += 0.5 * wts[v] * (cs * cs * a + 2.0 * sn * cs * c + sn * sn * b);
        }
        f
    };
    let gradient = |th: &[f64]| -> Vec<f64> {
        let mut g = linalg::mul(&s.dec.lap0, th);
        for v in 0..nv {
            let (a, b, c) = coef[v];
            g[v] += wts[v] * (c * (2.0 * th[v]).cos() + 0.5 * (b - a) * (2.0 * th[v]).sin());
        }
        g
    };
    let residual_of = |g: &[f64]| -> f64 { g.iter().zip(&wts).map(|(g, w)| g * g / w).sum::<f64>().sqrt() };
    // preconditioner K + diag(w L) with L bounding the second derivative
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let lap = &s.dec.lap0;
    for (row, offs) in lap.row_offsets().windows(2).enumerate() {
        for idx in offs[0]..offs[1] {
            trips.push((row, lap.col_indices()[idx], lap.values()[idx]));
        }
    }
    for v in 0..nv {
        let (a, b, c) = coef[v];
        let bound = (4.0 * c * c + (b - a) * (b - a)).sqrt();
        trips.push((v, v, wts[v] * (bound + 1e-8)));
    }
    let prec = linalg::csr_from_triplets(nv, nv, &trips);
    let mut theta = init;
    let mut iterations = 0;
    let mut g = gradient(&theta);
    let mut res = residual_of(&g);
    while res > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let mut step = vec![0.0; nv];
        linalg::pcg(&prec, &g, &mut step, CgOptions { rel_tol: 1e-12, ..Default::default() })?;
        for (t, d) in theta.iter_mut().zip(&step) {
            *t -= d;
        }
        g = gradient(&theta);
        res = residual_of(&g);
    }
    if res > opts.tol {
        return Err(Error::NoConvergence { what: "Θ minimization".into(), residual: res });
    }
    let kt = linalg::mul(&s.dec.lap0, &theta);
    let gradient_norm = linalg::dot(&theta, &kt).max(0.0).sqrt();
    Ok(ThetaResult { tilde_w: value(&theta), residual: res, gradient_norm, theta, iterations })
}
