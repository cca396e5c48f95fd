//! Current, vorticity, degrees, flux integrals and the vortex ball
//! construction for discrete fields.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{torus_delta, wrap_angle, Point, SurfaceKind, SurfaceModel};
use crate::gl::{energy_in, DiscreteField, Potential};
use crate::harmonic::{HarmonicBasis, VortexConfig};
use crate::quad;

/// j(u) on each edge: Im(ū_a u_b e^{−iρ_e}).
pub fn current(s: &SurfaceModel, u: &DiscreteField) -> Result<Vec<f64>> {
    u.check(s)?;
    Ok(s.mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| (u.values[a].conj() * u.values[b] * num_complex::Complex64::from_polar(1.0, -s.frames.rho[e])).im)
        .collect())
}

/// ω(u) = dj(u) + κ vol on each face.
pub fn vorticity(s: &SurfaceModel, u: &DiscreteField) -> Result<Vec<f64>> {
    let j = current(s, u)?;
    Ok(s.mesh
        .face_edges
        .iter()
        .zip(&s.frames.face_curvature)
        .map(|(fe, k)| fe.iter().map(|&(e, sg)| sg * j[e]).sum::<f64>() + k)
        .collect())
}

/// Phase of u_b relative to the transport of u_a: ∫_e j/|u|² for the
/// linear interpolant of u along the edge.
fn phase_step(s: &SurfaceModel, u: &DiscreteField, e: usize) -> f64 {
    let [a, b] = s.mesh.edges[e];
    wrap_angle(u.values[b].arg() - u.values[a].arg() - s.frames.rho[e])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub degree: i32,
    /// (1/2π)(∮ j/|u|² + ∫ κ) before rounding.
    pub raw: f64,
    pub defect: f64,
}

/// Lowest |u| on a contour for the degree to be defined.
pub const DEGREE_MIN_MODULUS: f64 = 0.25;
/// Largest accepted distance of the raw degree from an integer.
pub const DEGREE_MAX_DEFECT: f64 = 0.2;

/// Degree of u around the boundary of a set of faces (boundary oriented
/// with the faces on its left).
pub fn degree_of_region(s: &SurfaceModel, u: &DiscreteField, faces: &[usize]) -> Result<DegreeResult> {
    u.check(s)?;
    let mut inside = vec![false; s.mesh.num_faces()];
    for &f in faces {
        if f >= inside.len() {
            return Err(Error::InvalidInput(format!("face {f} out of range")));
        }
        inside[f] = true;
    }
    let mut total = 0.0;
    let mut boundary = false;
    for (f, _) in inside.iter().enumerate().filter(|(_, &i)| i) {
        total += s.frames.face_curvature[f];
        for &(e, sg) in &s.mesh.face_edges[f] {
            let [f0, f1] = s.mesh.edge_faces[e];
            let other = if f0 == f { f1 } else { f0 };
            if inside[other] {
                continue;
            }
            boundary = true;
            for v in s.mesh.edges[e] {
                let m = u.values[v].norm();
                if m < DEGREE_MIN_MODULUS {
                    return Err(Error::Degree(format!("|u| = {m:.3} < 1/4 on the contour")));
                }
            }
            total += sg * phase_step(s, u, e);
        }
    }
    if !boundary {
        return Err(Error::Degree("region has no boundary".into()));
    }
    let raw = total / TAU;
    let degree = raw.round();
    let defect = (raw - degree).abs();
    if defect >= DEGREE_MAX_DEFECT {
        return Err(Error::Degree(format!("raw degree {raw} is {defect:.3} from an integer")));
    }
    Ok(DegreeResult { degree: degree as i32, raw, defect })
}

/// Faces on the left of a closed vertex contour.
pub fn enclosed_faces(s: &SurfaceModel, contour: &[usize]) -> Result<Vec<usize>> {
    let mut c = contour.to_vec();
    if c.len() > 1 && c.first() == c.last() {
        c.pop();
    }
    if c.len() < 3 {
        return Err(Error::InvalidInput("a contour needs at least three vertices".into()));
    }
    let m = &s.mesh;
    let mut cut = vec![false; m.num_edges()];
    let mut seed = None;
    for k in 0..c.len() {
        let (a, b) = (c[k], c[(k + 1) % c.len()]);
        if a >= m.num_vertices() || b >= m.num_vertices() {
            return Err(Error::InvalidInput("contour vertex out of range".into()));
        }
        let (e, _) = m
            .edge_between(a, b)
            .ok_or_else(|| Error::InvalidInput(format!("contour vertices {a} and {b} are not adjacent")))?;
        cut[e] = true;
        if seed.is_none() {
            // face whose counterclockwise boundary runs a → b
            seed = m.edge_faces[e].iter().copied().find(|&f| {
                let t = m.faces[f];
                (0..3).any(|i| t[i] == a && t[(i + 1) % 3] == b)
            });
        }
    }
    let seed = seed.ok_or_else(|| Error::InvalidInput("contour has no face on its left".into()))?;
    let mut inside = vec![false; m.num_faces()];
    let mut stack = vec![seed];
    inside[seed] = true;
    while let Some(f) = stack.pop() {
        for &(e, _) in &m.face_edges[f] {
            if cut[e] {
                continue;
            }
            for g in m.edge_faces[e] {
                if !inside[g] {
                    inside[g] = true;
                    stack.push(g);
                }
            }
        }
    }
    let faces: Vec<usize> = (0..m.num_faces()).filter(|&f| inside[f]).collect();
    if faces.len() == m.num_faces() {
        return Err(Error::InvalidInput("contour does not separate the surface".into()));
    }
    Ok(faces)
}

/// Degree of u around a closed vertex contour (enclosed region on its left).
pub fn degree(s: &SurfaceModel, u: &DiscreteField, contour: &[usize]) -> Result<DegreeResult> {
    let faces = enclosed_faces(s, contour)?;
    degree_of_region(s, u, &faces)
}

/// Faces all of whose vertices lie within geodesic distance `radius` of `x`.
pub fn disk_faces(s: &SurfaceModel, x: &Point, radius: f64) -> Vec<usize> {
    let d = s.distances_from(x);
    (0..s.mesh.num_faces()).filter(|&f| s.mesh.faces[f].iter().all(|&v| d[v] <= radius)).collect()
}

/// Edge integrals of j(u) for the interpolant with linear modulus and
/// linear phase: Δθ (r_a² + r_a r_b + r_b²)/3. Exact on unit fields, where
/// the bilinear `current` gives sin Δθ.
pub fn phase_current(s: &SurfaceModel, u: &DiscreteField) -> Result<Vec<f64>> {
    u.check(s)?;
    Ok(s.mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| {
            let (ra, rb) = (u.values[a].norm(), u.values[b].norm());
            if ra == 0.0 || rb == 0.0 {
                return 0.0;
            }
            phase_step(s, u, e) * (ra * ra + ra * rb + rb * rb) / 3.0
        })
        .collect())
}

/// Φ(u)_k = ∫(j(u), η_k) with j from `phase_current`, solved against the
/// Gram matrix of the basis.
pub fn flux_integrals(s: &SurfaceModel, u: &DiscreteField, hb: &HarmonicBasis) -> Result<Vec<f64>> {
    let k = hb.dim();
    if k == 0 {
        return Ok(vec![]);
    }
    if hb.surface_descriptor() != s.descriptor() {
        return Err(Error::InvalidInput("harmonic basis belongs to a different surface".into()));
    }
    let j = phase_current(s, u)?;
    let gram = DMatrix::from_fn(k, k, |a, b| s.dec.inner1(&hb.forms[a], &hb.forms[b]));
    let rhs = DVector::from_fn(k, |a, _| s.dec.inner1(&j, &hb.forms[a]));
    let sol = gram.lu().solve(&rhs).ok_or_else(|| Error::InvalidInput("degenerate harmonic basis".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Constants c₂, c₃, c₄ of the lower bound λ_ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaConstants {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl LambdaConstants {
    /// c₂ = 1/4, c₃ = max|κ|/3, c₄ = 4π/c₂.
    pub fn for_surface(s: &SurfaceModel) -> LambdaConstants {
        let c2 = 0.25;
        LambdaConstants { c2, c3: s.max_abs_curvature() / 3.0, c4: 4.0 * PI / c2 }
    }
}

/// λ_ε(r) = min_{0<s≤1} [c₂(1−s)²/(4ε) + s² π(1 − c₃r²)/r].
pub fn lambda_eps(r: f64, eps: f64, c: &LambdaConstants) -> f64 {
    if r <= 0.0 {
        return c.c2 / (4.0 * eps);
    }
    if r.is_infinite() {
        return 0.0;
    }
    let a = c.c2 / (4.0 * eps);
    let b = PI * (1.0 - c.c3 * r * r) / r;
    if b <= 0.0 {
        // the bracket decreases on (0, 1]: minimum at s = 1
        return b;
    }
    // minimizer s = a/(a+b) ∈ (0, 1)
    a * b / (a + b)
}

/// Λ_ε(σ) = ∫₀^σ λ_ε(r) dr by adaptive Gauss–Legendre.
pub fn big_lambda_eps(sigma: f64, eps: f64, c: &LambdaConstants) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    fn panel(a: f64, b: f64, eps: f64, c: &LambdaConstants, depth: u32) -> f64 {
        let whole = quad::integrate(8, a, b, |r| lambda_eps(r, eps, c));
        let m = 0.5 * (a + b);
        let halves = quad::integrate(8, a, m, |r| lambda_eps(r, eps, c)) + quad::integrate(8, m, b, |r| lambda_eps(r, eps, c));
        if depth == 0 || (whole - halves).abs() <= 1e-13 * halves.abs().max(1e-300) {
            halves
        } else {
            panel(a, m, eps, c, depth - 1) + panel(m, b, eps, c, depth - 1)
        }
    }
    // panels geometric in r: λ varies on the scale ε near 0 and like 1/r beyond
    let mut total = 0.0;
    let mut a = 0.0;
    let mut b = sigma.min(eps);
    loop {
        total += panel(a, b, eps, c, 30);
        if b >= sigma {
            break;
        }
        a = b;
        b = (2.0 * b).min(sigma);
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    pub degree: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSet {
    pub balls: Vec<Ball>,
    pub sigma: f64,
    pub epsilon: f64,
    /// Failed lower-bound checks and budget overruns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl BallSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(data: &[u8]) -> Result<BallSet> {
        let b: BallSet = serde_json::from_slice(data)?;
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput("σ and ε must be positive".into()));
        }
        for b in &self.balls {
            if !(b.radius >= 0.0 && b.radius.is_finite()) || !b.center.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInput("ball radius and center must be finite, radius ≥ 0".into()));
            }
        }
        Ok(())
    }

    pub fn total_degree(&self) -> i64 {
        self.balls.iter().map(|b| b.degree as i64).sum()
    }

    pub fn radius_sum(&self) -> f64 {
        self.balls.iter().map(|b| b.radius).sum()
    }

    /// Ball centers with nonzero degree as a vortex configuration.
    pub fn vortices(&self) -> VortexConfig {
        let keep: Vec<&Ball> = self.balls.iter().filter(|b| b.degree != 0).collect();
        VortexConfig { points: keep.iter().map(|b| b.center).collect(), degrees: keep.iter().map(|b| b.degree).collect() }
    }

    /// Largest overlap (sum of radii − center distance) over all pairs;
    /// negative when the balls are pairwise disjoint.
    pub fn max_overlap(&self, s: &SurfaceModel) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.balls.len() {
            for j in 0..i {
                let (a, b) = (&self.balls[i], &self.balls[j]);
                worst = worst.max(a.radius + b.radius - s.geodesic_dist(&a.center, &b.center));
            }
        }
        worst
    }

    /// Vertices with |u| ≤ ½ outside every ball.
    pub fn uncovered(&self, s: &SurfaceModel, u: &DiscreteField) -> Vec<usize> {
        let low: Vec<usize> = (0..u.values.len()).filter(|&v| u.values[v].norm() <= 0.5).collect();
        if low.is_empty() {
            return low;
        }
        let dist: Vec<Vec<f64>> = self.balls.iter().map(|b| s.distances_from(&b.center)).collect();
        low.into_iter().filter(|&v| !self.balls.iter().zip(&dist).any(|(b, d)| d[v] <= b.radius)).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallOptions {
    /// Declared degree budget n (Σ|d| ≤ n); None skips the check.
    pub budget: Option<usize>,
    /// σ must be at least ε^q.
    pub q: f64,
    pub constants: Option<LambdaConstants>,
    /// Constant c in the per-ball energy floor |d|(π log(σ/ε) − c).
    pub floor_constant: f64,
    /// Potential used for the energy diagnostics.
    pub potential: Potential,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions { budget: None, q: 0.9, constants: None, floor_constant: 3.0 * PI, potential: Potential::Gl }
    }
}

/// Working ball during growth: radius max(frozen, σ'|d|) for d ≠ 0.
#[derive(Clone, Debug)]
struct Growing {
    center: Point,
    frozen: f64,
    degree: i32,
}

impl Growing {
    fn radius(&self, sigma: f64) -> f64 {
        self.frozen.max(sigma * self.degree.unsigned_abs() as f64)
    }
}

/// Point at distance `t` from `a` on the shortest geodesic towards `b`.
fn along(s: &SurfaceModel, a: &Point, b: &Point, t: f64) -> Result<Point> {
    match s.kind {
        SurfaceKind::FlatTorus => {
            let d = torus_delta(a, b);
            let n = d.norm();
            if n == 0.0 {
                return Ok(*a);
            }
            s.normalize_point(&(a + d * (t / n)))
        }
        SurfaceKind::UnitSphere => {
            let v = s.log_map(a, b)?;
            let n = v.norm();
            if n == 0.0 {
                return Ok(*a);
            }
            s.exp_map(a, &(v * (t / n)))
        }
        SurfaceKind::TriMesh => Err(Error::Unsupported("geodesic interpolation on a mesh".into())),
    }
}

/// Smallest ball containing two balls.
fn enclose(s: &SurfaceModel, a: (&Point, f64), b: (&Point, f64)) -> Result<(Point, f64)> {
    let dist = s.geodesic_dist(a.0, b.0);
    if dist + b.1 <= a.1 {
        return Ok((*a.0, a.1));
    }
    if dist + a.1 <= b.1 {
        return Ok((*b.0, b.1));
    }
    if s.kind == SurfaceKind::TriMesh {
        // best vertex for the graph metric
        let (da, db) = (s.distances_from(a.0), s.distances_from(b.0));
        let (v, r) = (0..da.len())
            .map(|v| (v, (da[v] + a.1).max(db[v] + b.1)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        return Ok((s.mesh.positions[v], r));
    }
    let r = 0.5 * (dist + a.1 + b.1);
    Ok((along(s, a.0, b.0, r - a.1)?, r))
}

/// Zero-set components: faces with min vertex |u| ≤ ½, connected through edges.
fn zero_components(s: &SurfaceModel, u: &DiscreteField) -> Vec<Vec<usize>> {
    let m = &s.mesh;
    let low: Vec<bool> = (0..m.num_faces()).map(|f| m.faces[f].iter().any(|&v| u.values[v].norm() <= 0.5)).collect();
    let mut label = vec![usize::MAX; m.num_faces()];
    let mut comps = Vec::new();
    for f0 in 0..m.num_faces() {
        if !low[f0] || label[f0] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = vec![f0];
        label[f0] = id;
        let mut k = 0;
        while k < comp.len() {
            let f = comp[k];
            k += 1;
            for &(e, _) in &m.face_edges[f] {
                for g in m.edge_faces[e] {
                    if low[g] && label[g] == usize::MAX {
                        label[g] = id;
                        comp.push(g);
                    }
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Center (weighted by ½ − |u|) and radius covering the low vertices of a component.
fn component_ball(s: &SurfaceModel, u: &DiscreteField, comp: &[usize]) -> Result<(Point, f64)> {
    let mut verts: Vec<usize> = comp.iter().flat_map(|&f| s.mesh.faces[f]).filter(|&v| u.values[v].norm() <= 0.5).collect();
    verts.sort_unstable();
    verts.dedup();
    let anchor = *verts
        .iter()
        .min_by(|&&a, &&b| u.values[a].norm().total_cmp(&u.values[b].norm()))
        .ok_or_else(|| Error::InvalidInput("empty zero-set component".into()))?;
    let p0 = s.mesh.positions[anchor];
    let mut acc = Point::zeros();
    let mut wsum = 0.0;
    for &v in &verts {
        let w = 0.5 - u.values[v].norm() + 1e-9;
        let p = s.mesh.positions[v];
        let off = match s.kind {
            SurfaceKind::FlatTorus => torus_delta(&p0, &p),
            _ => p - p0,
        };
        acc += w * off;
        wsum += w;
    }
    let center = s.normalize_point(&(p0 + acc / wsum))?;
    let d = s.distances_from(&center);
    let r = verts.iter().map(|&v| d[v]).fold(0.0, f64::max);
    Ok((center, r))
}

/// Merge overlapping balls (smallest enclosing ball) until pairwise disjoint.
fn merge_overlaps(s: &SurfaceModel, balls: &mut Vec<Growing>, sigma: f64) -> Result<()> {
    loop {
        let mut hit = None;
        'outer: for i in 0..balls.len() {
            for j in 0..i {
                let d = s.geodesic_dist(&balls[i].center, &balls[j].center);
                if d <= balls[i].radius(sigma) + balls[j].radius(sigma) {
                    hit = Some((j, i));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = hit else { return Ok(()) };
        let (bi, bj) = (balls[i].clone(), balls[j].clone());
        let (c, r) = enclose(s, (&bi.center, bi.radius(sigma)), (&bj.center, bj.radius(sigma)))?;
        balls.remove(j);
        balls[i] = Growing { center: c, frozen: r, degree: bi.degree + bj.degree };
    }
}

/// Vortex balls at scale σ: seeds around the zero-set components of nonzero
/// degree, synchronized growth r = σ′|d| with merging up to σ′ = σ, then
/// absorption of the zero-degree components.
pub fn ball_construction(s: &SurfaceModel, u: &DiscreteField, eps: f64, sigma: f64, opts: &BallOptions) -> Result<BallSet> {
    u.check(s)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    if !(opts.q > 0.0 && opts.q < 1.0) {
        return Err(Error::InvalidInput("q must lie in (0, 1)".into()));
    }
    let lower = eps.powf(opts.q);
    if !(sigma >= lower * (1.0 - 1e-12)) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("σ = {sigma} below ε^q = {lower}")));
    }
    let mut diagnostics = Vec::new();
    let energy = energy_in(s, u, eps, &opts.potential)?;
    let ball_energy = |c: &Point, r: f64| -> f64 {
        let d = s.distances_from(c);
        (0..d.len()).filter(|&v| d[v] <= r).map(|v| energy.per_site[v]).sum()
    };
    let consts = opts.constants.unwrap_or_else(|| LambdaConstants::for_surface(s));
    // Step 1: seeds
    let mut seeds = Vec::new();
    let mut neutral = Vec::new();
    for comp in zero_components(s, u) {
        let (c, r) = component_ball(s, u, &comp)?;
        let d = match degree_of_region(s, u, &comp) {
            Ok(d) => d.degree,
            Err(e) => {
                diagnostics.push(format!("component degree undefined ({e}); treated as 0"));
                0
            }
        };
        if d != 0 {
            let (e, need) = (ball_energy(&c, r.max(eps)), big_lambda_eps(r.max(eps), eps, &consts));
            if e < need {
                diagnostics.push(format!("seed ball energy {e:.4} below Λ_ε(r) = {need:.4}"));
            }
            seeds.push(Growing { center: c, frozen: r.max(eps), degree: d });
        } else {
            neutral.push(Growing { center: c, frozen: r.max(0.5 * s.mesh_size()), degree: 0 });
        }
    }
    let mut balls = seeds;
    let sigma0 = balls
        .iter()
        .map(|b| b.frozen / b.degree.unsigned_abs() as f64)
        .fold(f64::INFINITY, f64::min);
    let mut cur = if sigma0.is_finite() { sigma0.min(sigma) } else { sigma };
    merge_overlaps(s, &mut balls, cur)?;
    // Step 2: growth with merging at collisions
    loop {
        let mut first: Option<(f64, usize, usize)> = None;
        for i in 0..balls.len() {
            for j in 0..i {
                let d = s.geodesic_dist(&balls[i].center, &balls[j].center);
                let gap = |t: f64| balls[i].radius(t) + balls[j].radius(t) - d;
                if gap(sigma) < 0.0 {
                    continue;
                }
                let (mut lo, mut hi) = (cur, sigma);
                if gap(lo) < 0.0 {
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if gap(mid) >= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if hi - lo <= 1e-15 * hi {
                            break;
                        }
                    }
                } else {
                    hi = cur;
                }
                if first.is_none_or(|f| hi < f.0) {
                    first = Some((hi, j, i));
                }
            }
        }
        let Some((t, i, j)) = first else { break };
        cur = t;
        for b in balls.iter_mut() {
            b.frozen = b.radius(cur);
        }
        let (bi, bj) = (balls[i].clone(), balls[j].clone());
        let (c, r) = enclose(s, (&bi.center, bi.frozen), (&bj.center, bj.frozen))?;
        balls.remove(j);
        balls[i] = Growing { center: c, frozen: r, degree: bi.degree + bj.degree };
        merge_overlaps(s, &mut balls, cur)?;
    }
    for b in balls.iter_mut() {
        b.frozen = b.radius(sigma);
    }
    // Step 3: absorb zero-degree components
    balls.extend(neutral);
    merge_overlaps(s, &mut balls, sigma)?;

    let out: Vec<Ball> = balls.iter().map(|b| Ball { center: b.center, radius: b.frozen, degree: b.degree }).collect();
    let abs_deg: usize = out.iter().map(|b| b.degree.unsigned_abs() as usize).sum();
    if let Some(n) = opts.budget {
        if abs_deg > n {
            diagnostics.push(format!("Σ|d| = {abs_deg} exceeds the budget {n}"));
        }
        let rs: f64 = out.iter().map(|b| b.radius).sum();
        if rs > (n as f64 + 1.0) * sigma {
            diagnostics.push(format!("Σr = {rs} exceeds (n+1)σ = {}", (n as f64 + 1.0) * sigma));
        }
    }
    // energy floor per ball
    let floor = PI * (sigma / eps).ln() - opts.floor_constant;
    for (k, b) in out.iter().enumerate() {
        if b.degree == 0 {
            continue;
        }
        let e = ball_energy(&b.center, b.radius);
        let need = b.degree.unsigned_abs() as f64 * floor;
        if e < need {
            diagnostics.push(format!("ball {k}: energy {e:.4} below |d|(π log(σ/ε) − c) = {need:.4}"));
        }
    }
    Ok(BallSet { balls: out, sigma, epsilon: eps, diagnostics })
}

/// Synthetic field with vortices at `cfg`: the canonical field u* (flux at
/// the lattice point nearest 0) times Π_k f(dist(x, a_k)/ε)^{|d_k|} with
/// the core profile f(x) = x/√(1 + x²).
pub fn planted_field(
    gev: &crate::greens::GreenEvaluator,
    hb: &HarmonicBasis,
    cfg: &VortexConfig,
    eps: f64,
) -> Result<DiscreteField> {
    let s = gev.surface();
    let cfg = cfg.validated(s)?;
    let phi = crate::harmonic::lattice(hb, gev, &cfg)?.nearest_point(&vec![0.0; hb.dim()])?;
    let ustar = crate::canonical::build_ustar(gev, hb, &cfg, &phi)?;
    let mut values = ustar.field;
    for (a, &d) in cfg.points.iter().zip(&cfg.degrees) {
        for (z, r) in values.iter_mut().zip(s.distances_from(a)) {
            let x = r / eps;
            *z *= (x / (1.0 + x * x).sqrt()).powi(d.abs());
        }
    }
    DiscreteField::new(s, values)
}
