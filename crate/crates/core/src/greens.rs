//! Green's function of the Laplace–Beltrami operator in the mean-zero gauge,
//! its regular part, and the potentials ψ0 and ψ(a;d).
//!
//! `G` solves −Δ_x G(·,y) = δ_y − 1/Vol(S) with ∫ G(·,y) = 0. On the flat
//! unit torus it is evaluated through the Jacobi theta function θ₁ with
//! nome e^{−π}; on the unit sphere through its closed zonal form; on a
//! triangle mesh by a cotangent-Laplacian solve with a lumped vertex source.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{sphere_angle, torus_delta, Point, SurfaceKind, SurfaceModel};
use crate::harmonic::VortexConfig;
use crate::linalg::{self, CgOptions};
use crate::quad;

/// Evaluations closer than this to a vortex point are rejected.
pub const SINGULAR_RADIUS: f64 = 1e-6;

const NOME: f64 = 0.043_213_918_263_772_25; // e^{−π}

/// 1/24 − (1/2π) Σ_{n≥1} log(1 − e^{−2πn}): makes the torus G mean-zero.
fn torus_gauge() -> f64 {
    let mut s = 0.0;
    for n in 1..12 {
        s += (-(TAU * n as f64).exp().recip()).ln_1p();
    }
    1.0 / 24.0 - s / TAU
}

/// θ₁(w) and θ₁′(w) for the square lattice (τ = i).
fn theta1(w: Complex64) -> (Complex64, Complex64) {
    let mut th = Complex64::new(0.0, 0.0);
    let mut dth = Complex64::new(0.0, 0.0);
    for n in 0..9 {
        let k = (2 * n + 1) as f64;
        let e = (n as f64 + 0.5) * (n as f64 + 0.5);
        let c = 2.0 * NOME.powf(e) * if n % 2 == 0 { 1.0 } else { -1.0 };
        th += c * (k * w).sin();
        dth += c * k * (k * w).cos();
    }
    (th, dth)
}

/// Torus G as a function of the displacement x − y (already reduced).
fn torus_green(d: &Point) -> f64 {
    let w = Complex64::new(PI * d.x, PI * d.y);
    let (th, _) = theta1(w);
    -th.norm().ln() / TAU + 0.5 * d.y * d.y - torus_gauge()
}

/// ∇_x of the torus G at displacement x − y.
fn torus_green_grad(d: &Point) -> Point {
    let w = Complex64::new(PI * d.x, PI * d.y);
    let (th, dth) = theta1(w);
    let f = PI * dth / th;
    Vector3::new(-f.re / TAU, f.im / TAU + d.y, 0.0)
}

/// Sphere G from the squared chord |x − y|² = 2(1 − cos θ).
fn sphere_green_chord2(c2: f64) -> f64 {
    -((0.5 * c2).ln() - 2f64.ln() + 1.0) / (4.0 * PI)
}

pub struct GreenEvaluator<'s> {
    surface: &'s SurfaceModel,
    columns: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl<'s> GreenEvaluator<'s> {
    pub fn new(surface: &'s SurfaceModel) -> GreenEvaluator<'s> {
        GreenEvaluator { surface, columns: Mutex::new(HashMap::new()) }
    }

    pub fn surface(&self) -> &'s SurfaceModel {
        self.surface
    }

    /// G(x, y) for x ≠ y.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let s = self.surface;
        match s.kind {
            SurfaceKind::FlatTorus => {
                let d = torus_delta(y, x);
                if d.norm() == 0.0 {
                    return Err(Error::TooClose { dist: 0.0, min: f64::MIN_POSITIVE });
                }
                Ok(torus_green(&d))
            }
            SurfaceKind::UnitSphere => {
                let c2 = (x.normalize() - y.normalize()).norm_squared();
                if c2 == 0.0 {
                    return Err(Error::TooClose { dist: 0.0, min: f64::MIN_POSITIVE });
                }
                Ok(sphere_green_chord2(c2))
            }
            SurfaceKind::TriMesh => {
                let (vx, vy) = (s.nearest_vertex(x), s.nearest_vertex(y));
                if vx == vy {
                    return Err(Error::TooClose { dist: 0.0, min: s.mesh_size() });
                }
                Ok(self.column(vy)?[vx])
            }
        }
    }

    /// ∇_x G(x, y) as an ambient tangent vector at x (analytic surfaces).
    pub fn grad_x(&self, x: &Point, y: &Point) -> Result<Point> {
        match self.surface.kind {
            SurfaceKind::FlatTorus => Ok(torus_green_grad(&torus_delta(y, x))),
            SurfaceKind::UnitSphere => {
                let (x, y) = (x.normalize(), y.normalize());
                let v = x - y;
                let g = -2.0 * v / (4.0 * PI * v.norm_squared());
                Ok(g - g.dot(&x) * x)
            }
            SurfaceKind::TriMesh => Err(Error::Unsupported("pointwise Green gradient on a triangle mesh".into())),
        }
    }

    /// Mesh Green's function with unit source at vertex `v`, mean zero
    /// against the dual areas. Cached.
    pub fn column(&self, v: usize) -> Result<Arc<Vec<f64>>> {
        if let Some(c) = self.columns.lock().unwrap().get(&v) {
            return Ok(c.clone());
        }
        let s = self.surface;
        let n = s.mesh.num_vertices();
        if v >= n {
            return Err(Error::InvalidInput(format!("vertex {v} out of range")));
        }
        let area: f64 = s.dec.star0.iter().sum();
        let mut b: Vec<f64> = s.dec.star0.iter().map(|m| -m / area).collect();
        b[v] += 1.0;
        let mut g = vec![0.0; n];
        linalg::pcg(&s.dec.lap0, &b, &mut g, CgOptions { singular: true, ..Default::default() })?;
        let mean = linalg::dot(&g, &s.dec.star0) / area;
        g.iter_mut().for_each(|x| *x -= mean);
        let g = Arc::new(g);
        self.columns.lock().unwrap().insert(v, g.clone());
        Ok(g)
    }

    /// Robin mass H(x, x) = lim_{y→x} G(x, y) + (1/2π) log dist(x, y).
    ///
    /// Analytic surfaces: two-level Richardson extrapolation in dist² over
    /// dist ∈ {1e−2, 5e−3, 2.5e−3}. Mesh: the discrete Green's function plus
    /// the log kernel, fitted by least squares in 1, d², d⁴ over vertices at
    /// chord distance between 3 and 10 mean edge lengths.
    pub fn robin_mass(&self, x: &Point) -> Result<f64> {
        let s = self.surface;
        match s.kind {
            SurfaceKind::TriMesh => self.robin_mass_mesh(s.nearest_vertex(x)),
            _ => {
                let x = s.normalize_point(x)?;
                let (e1, _, _) = s.tangent_frame(&x);
                let f = |d: f64| -> Result<f64> {
                    let y = s.exp_map(&x, &(d * e1))?;
                    Ok(self.eval(&x, &y)? + d.ln() / TAU)
                };
                let (f0, f1, f2) = (f(1e-2)?, f(5e-3)?, f(2.5e-3)?);
                let r0 = (4.0 * f1 - f0) / 3.0;
                let r1 = (4.0 * f2 - f1) / 3.0;
                Ok((16.0 * r1 - r0) / 15.0)
            }
        }
    }

    fn robin_mass_mesh(&self, v: usize) -> Result<f64> {
        let s = self.surface;
        let g = self.column(v)?;
        let h = s.mesh.mean_edge_length();
        let p = s.mesh.positions[v];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (w, q) in s.mesh.positions.iter().enumerate() {
            let d = (q - p).norm();
            if d >= 3.0 * h && d <= 10.0 * h {
                let d2 = d * d;
                rows.push([1.0, d2, d2 * d2]);
                rhs.push(g[w] + d.ln() / TAU);
            }
        }
        if rows.len() < 6 {
            return Err(Error::InvalidInput("mesh too coarse for a Robin mass fit".into()));
        }
        let a = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
        let b = DVector::from_vec(rhs);
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::NoConvergence { what: format!("Robin mass fit: {e}"), residual: f64::NAN })?;
        Ok(sol[0])
    }

    /// ∫ along a piece of d*(2π G(·, a) vol). On the torus the piece is the
    /// straight segment p → q (q may be unwrapped); on the sphere the minor
    /// great-circle arc.
    pub fn dstar_green_piece(&self, a: &Point, p: &Point, q: &Point) -> Result<f64> {
        match self.surface.kind {
            SurfaceKind::FlatTorus => {
                let len = (q - p).norm();
                let m = (len / 0.1).ceil().max(1.0) as usize;
                let mut total = 0.0;
                for k in 0..m {
                    let p0 = p + (q - p) * (k as f64 / m as f64);
                    let p1 = p + (q - p) * ((k + 1) as f64 / m as f64);
                    total += torus_piece(a, &p0, &p1)?;
                }
                Ok(total)
            }
            SurfaceKind::UnitSphere => {
                let (p, q) = (p.normalize(), q.normalize());
                let ang = sphere_angle(&p, &q);
                if ang > PI - 1e-9 {
                    return Err(Error::InvalidInput("antipodal endpoints do not define an arc".into()));
                }
                let m = (ang / 0.1).ceil().max(1.0) as usize;
                let mut total = 0.0;
                let mut prev = p;
                for k in 1..=m {
                    let next = slerp(&p, &q, ang, k as f64 / m as f64);
                    total += sphere_piece(a, &prev, &next)?;
                    prev = next;
                }
                Ok(total)
            }
            SurfaceKind::TriMesh => Err(Error::Unsupported("analytic line integrals on a triangle mesh".into())),
        }
    }

    /// The vector field J with d*(2π G(·, a) vol)(t) = J · t at x.
    pub fn dstar_green_vector(&self, a: &Point, x: &Point) -> Result<Point> {
        match self.surface.kind {
            SurfaceKind::FlatTorus => {
                let g = TAU * torus_green_grad(&torus_delta(a, x));
                Ok(Vector3::new(g.y, -g.x, 0.0))
            }
            SurfaceKind::UnitSphere => {
                let (a, x) = (a.normalize(), x.normalize());
                let c = a.cross(&x);
                Ok(0.5 * (1.0 + a.dot(&x)) * c / c.norm_squared())
            }
            SurfaceKind::TriMesh => Err(Error::Unsupported("pointwise potentials on a triangle mesh".into())),
        }
    }
}

fn slerp(p: &Point, q: &Point, ang: f64, t: f64) -> Point {
    if ang < 1e-12 {
        return *p;
    }
    let s = ang.sin();
    (((1.0 - t) * ang).sin() / s * p + (t * ang).sin() / s * q).normalize()
}

const PIECE_NODES: usize = 10;

fn torus_piece(a: &Point, p: &Point, q: &Point) -> Result<f64> {
    let vp = torus_delta(a, p);
    let w = q - p;
    let vq = vp + w;
    let dist = segment_distance(&vp, &w);
    if dist < SINGULAR_RADIUS {
        return Err(Error::TooClose { dist, min: SINGULAR_RADIUS });
    }
    // exact angle swept about the image of a nearest p, plus a smooth remainder
    let exact = (vp.x * vq.y - vp.y * vq.x).atan2(vp.dot(&vq));
    let rem = quad::integrate(PIECE_NODES, 0.0, 1.0, |t| {
        let v = vp + t * w;
        let g = TAU * torus_green_grad(&torus_delta(&Vector3::zeros(), &v));
        let full = g.y * w.x - g.x * w.y;
        let ang = (v.x * w.y - v.y * w.x) / v.norm_squared();
        full - ang
    });
    Ok(exact + rem)
}

fn segment_distance(v: &Point, w: &Point) -> f64 {
    let ww = w.norm_squared();
    let t = if ww > 0.0 { (-v.dot(w) / ww).clamp(0.0, 1.0) } else { 0.0 };
    (v + t * w).norm()
}

/// Geodesic distance from a to the minor arc p → q on the unit sphere.
pub fn arc_distance(a: &Point, p: &Point, q: &Point) -> f64 {
    let n = p.cross(q);
    let nn = n.norm();
    if nn < 1e-15 {
        return sphere_angle(a, p);
    }
    let n = n / nn;
    let ap = a - a.dot(&n) * n;
    if ap.norm() > 1e-15 && p.cross(&ap).dot(&n) >= 0.0 && ap.cross(q).dot(&n) >= 0.0 {
        return a.dot(&n).abs().atan2(ap.norm());
    }
    sphere_angle(a, p).min(sphere_angle(a, q))
}

fn sphere_piece(a: &Point, p: &Point, q: &Point) -> Result<f64> {
    let a = a.normalize();
    let dist = arc_distance(&a, p, q);
    if dist < SINGULAR_RADIUS {
        return Err(Error::TooClose { dist, min: SINGULAR_RADIUS });
    }
    let ang = sphere_angle(p, q);
    let form = |x: &Point, dx: &Point, split: bool| {
        let c = a.cross(x);
        let dphi = c.dot(dx) / c.norm_squared();
        if split {
            -0.5 * (1.0 - a.dot(x)) * dphi
        } else {
            0.5 * (1.0 + a.dot(x)) * dphi
        }
    };
    let path = |t: f64| {
        let x = slerp(p, q, ang, t);
        // derivative of the unit-speed arc, scaled by its length
        let tang = (q - p.dot(q) * p).normalize();
        let dx = ang * ((t * ang).cos() * tang - (t * ang).sin() * p);
        (x, dx)
    };
    if a.dot(p) + a.dot(q) >= 0.0 {
        // azimuth about a swept exactly, remainder smooth near a
        let pp = p - a.dot(p) * a;
        let qq = q - a.dot(q) * a;
        let exact = a.dot(&pp.cross(&qq)).atan2(pp.dot(&qq));
        let rem = quad::integrate(PIECE_NODES, 0.0, 1.0, |t| {
            let (x, dx) = path(t);
            form(&x, &dx, true)
        });
        Ok(exact + rem)
    } else {
        Ok(quad::integrate(PIECE_NODES, 0.0, 1.0, |t| {
            let (x, dx) = path(t);
            form(&x, &dx, false)
        }))
    }
}

/// The curvature potential: −Δψ0 = −κ + κ̄, mean zero. Identically zero on
/// the model surfaces; on a mesh κ is the angle defect per dual area.
pub fn psi0_field(s: &SurfaceModel) -> Result<Vec<f64>> {
    let n = s.mesh.num_vertices();
    if s.kind != SurfaceKind::TriMesh {
        return Ok(vec![0.0; n]);
    }
    let area: f64 = s.dec.star0.iter().sum();
    let kbar = TAU * s.euler_char as f64 / area;
    let b: Vec<f64> = (0..n).map(|v| -s.frames.defects[v] + kbar * s.dec.star0[v]).collect();
    let mut x = vec![0.0; n];
    linalg::pcg(&s.dec.lap0, &b, &mut x, CgOptions { rel_tol: 1e-13, singular: true, ..Default::default() })?;
    let mean = linalg::dot(&x, &s.dec.star0) / area;
    x.iter_mut().for_each(|v| *v -= mean);
    Ok(x)
}

/// ψ(a;d) = 2π Σ d_k G(·, a_k) vol + ψ0 vol, carried by its scalar ⋆ψ and
/// its codifferential d*ψ on mesh edges.
pub struct PsiField<'g, 's> {
    pub gev: &'g GreenEvaluator<'s>,
    pub cfg: VortexConfig,
    pub psi0: Vec<f64>,
    /// ∫_e d*ψ over each mesh edge in reference orientation.
    pub dstar: Vec<f64>,
}

/// Face containing each vortex on a mesh (first face around a vertex vortex).
pub fn vortex_faces(s: &SurfaceModel, cfg: &VortexConfig) -> Vec<usize> {
    cfg.points
        .iter()
        .map(|p| match s.kind {
            SurfaceKind::TriMesh => s.mesh.rings[s.nearest_vertex(p)][0].face,
            _ => s.locate_face(p),
        })
        .collect()
}

pub fn psi_field<'g, 's>(gev: &'g GreenEvaluator<'s>, cfg: &VortexConfig) -> Result<PsiField<'g, 's>> {
    let s = gev.surface();
    let cfg = cfg.validated(s)?;
    let psi0 = psi0_field(s)?;
    let dstar = match s.kind {
        SurfaceKind::TriMesh => {
            // coexact solution of d(d*ψ) = −K_f + 2π Σ d_k δ_{f_k} on faces
            let mut m: Vec<f64> = s.frames.face_curvature.clone();
            for (f, &d) in vortex_faces(s, &cfg).iter().zip(&cfg.degrees) {
                m[*f] -= TAU * d as f64;
            }
            coexact_correction(s, &m)?
        }
        _ => {
            let mut out = vec![0.0; s.mesh.num_edges()];
            for (e, &[i, j]) in s.mesh.edges.iter().enumerate() {
                let p = s.mesh.positions[i];
                let q = p + s.mesh.edge_vector(i, j);
                let mut v = 0.0;
                for (a, &d) in cfg.points.iter().zip(&cfg.degrees) {
                    v += d as f64 * gev.dstar_green_piece(a, &p, &q)?;
                }
                out[e] = v;
            }
            out
        }
    };
    Ok(PsiField { gev, cfg, psi0, dstar })
}

/// The coexact 1-form c = ⋆1⁻¹ d1ᵀ γ with d c = −m. Requires Σ m = 0.
pub fn coexact_correction(s: &SurfaceModel, m: &[f64]) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = m.iter().map(|x| -x).collect();
    let mut gamma = vec![0.0; s.mesh.num_faces()];
    linalg::pcg(&s.dec.lap_dual, &rhs, &mut gamma, CgOptions { rel_tol: 1e-13, singular: true, ..Default::default() })?;
    let c = linalg::mul_t(&s.dec.d1, &gamma);
    Ok(c.iter().zip(&s.dec.star1).map(|(c, w)| c / w).collect())
}

impl<'g, 's> PsiField<'g, 's> {
    fn check_clear(&self, x: &Point) -> Result<()> {
        let s = self.gev.surface();
        for a in &self.cfg.points {
            let d = s.geodesic_dist(x, a);
            if d < SINGULAR_RADIUS || (s.kind == SurfaceKind::TriMesh && s.nearest_vertex(x) == s.nearest_vertex(a)) {
                return Err(Error::TooClose { dist: d, min: SINGULAR_RADIUS });
            }
        }
        Ok(())
    }

    /// ⋆ψ at a point away from the vortices.
    pub fn star_psi(&self, x: &Point) -> Result<f64> {
        self.check_clear(x)?;
        let s = self.gev.surface();
        let mut v = 0.0;
        for (a, &d) in self.cfg.points.iter().zip(&self.cfg.degrees) {
            v += TAU * d as f64 * self.gev.eval(x, a)?;
        }
        if s.kind == SurfaceKind::TriMesh {
            v += self.psi0[s.nearest_vertex(x)];
        }
        Ok(v)
    }

    /// ⋆ψ at every vertex; vortex vertices on a mesh carry the finite
    /// discrete value.
    pub fn vertex_values(&self) -> Result<Vec<f64>> {
        let s = self.gev.surface();
        let mut out = self.psi0.clone();
        for (a, &d) in self.cfg.points.iter().zip(&self.cfg.degrees) {
            match s.kind {
                SurfaceKind::TriMesh => {
                    let g = self.gev.column(s.nearest_vertex(a))?;
                    for (o, gv) in out.iter_mut().zip(g.iter()) {
                        *o += TAU * d as f64 * gv;
                    }
                }
                _ => {
                    for (o, p) in out.iter_mut().zip(&s.mesh.positions) {
                        *o += TAU * d as f64 * self.gev.eval(p, a)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Vector field representing d*ψ at an analytic point.
    pub fn dstar_vector(&self, x: &Point) -> Result<Point> {
        self.check_clear(x)?;
        let mut v = Vector3::zeros();
        for (a, &d) in self.cfg.points.iter().zip(&self.cfg.degrees) {
            v += d as f64 * self.gev.dstar_green_vector(a, x)?;
        }
        Ok(v)
    }

    /// ∫ d*ψ along a chain of pieces (segments on the torus, arcs on the sphere).
    pub fn line_integral(&self, pieces: &[(Point, Point)]) -> Result<f64> {
        let mut total = 0.0;
        for (p, q) in pieces {
            for (a, &d) in self.cfg.points.iter().zip(&self.cfg.degrees) {
                total += d as f64 * self.gev.dstar_green_piece(a, p, q)?;
            }
        }
        Ok(total)
    }
}
