//! Harmonic 1-forms, periods, the angles ζ(a;d) and the flux lattice.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point, SurfaceKind, SurfaceModel};
use crate::greens::{psi_field, GreenEvaluator};
use crate::linalg::{self, CgOptions};

/// Vortex points with nonzero integer degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexConfig {
    pub points: Vec<Point>,
    pub degrees: Vec<i32>,
}

impl VortexConfig {
    pub fn new(points: Vec<Point>, degrees: Vec<i32>) -> Result<VortexConfig> {
        if points.len() != degrees.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} degrees",
                points.len(),
                degrees.len()
            )));
        }
        if degrees.contains(&0) {
            return Err(Error::InvalidInput("vortex degrees must be nonzero".into()));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput("non-finite vortex point".into()));
        }
        Ok(VortexConfig { points, degrees })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_degree(&self) -> i64 {
        self.degrees.iter().map(|&d| d as i64).sum()
    }

    pub fn abs_degree(&self) -> i64 {
        self.degrees.iter().map(|&d| (d as i64).abs()).sum()
    }

    /// Points mapped onto the surface, pairwise distinct, Σd = χ(S).
    pub fn validated(&self, s: &SurfaceModel) -> Result<VortexConfig> {
        let points = self.points.iter().map(|p| s.normalize_point(p)).collect::<Result<Vec<_>>>()?;
        let out = VortexConfig::new(points, self.degrees.clone())?;
        if out.total_degree() != s.euler_char {
            return Err(Error::InvalidInput(format!(
                "sum of degrees {} must equal the Euler characteristic {}",
                out.total_degree(),
                s.euler_char
            )));
        }
        let sep = out.min_separation(s);
        if !(sep > 0.0) {
            return Err(Error::InvalidInput("vortex points must be pairwise distinct".into()));
        }
        Ok(out)
    }

    pub fn min_separation(&self, s: &SurfaceModel) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.len() {
            for j in 0..i {
                m = m.min(s.geodesic_dist(&self.points[i], &self.points[j]));
            }
        }
        m
    }

    /// Merge coincident points (summing degrees) and drop zero degrees.
    pub fn reduced(&self, s: &SurfaceModel) -> VortexConfig {
        let mut pts: Vec<Point> = Vec::new();
        let mut deg: Vec<i32> = Vec::new();
        for (p, &d) in self.points.iter().zip(&self.degrees) {
            match pts.iter().position(|q| s.geodesic_dist(p, q) < 1e-12) {
                Some(k) => deg[k] += d,
                None => {
                    pts.push(*p);
                    deg.push(d);
                }
            }
        }
        let keep: Vec<usize> = (0..pts.len()).filter(|&k| deg[k] != 0).collect();
        VortexConfig { points: keep.iter().map(|&k| pts[k]).collect(), degrees: keep.iter().map(|&k| deg[k]).collect() }
    }
}

/// A closed loop: straight pieces on the flat torus (endpoints may be
/// unwrapped) or a vertex cycle on the mesh.
#[derive(Clone, Debug)]
pub enum Loop {
    Pieces(Vec<(Point, Point)>),
    Vertices(Vec<usize>),
}

/// Orthonormal harmonic 1-forms with generator loops and periods
/// α_{ℓk} = ∫_{γ_ℓ} η_k.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub genus: u32,
    /// Edge integrals of each η_k (reference orientation).
    pub forms: Vec<Vec<f64>>,
    pub loops: Vec<Loop>,
    pub alpha: DMatrix<f64>,
    /// Constant vector fields of the forms on the flat torus.
    pub vectors: Option<Vec<Point>>,
    surface: String,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    pub fn is_analytic(&self) -> bool {
        self.vectors.is_some()
    }

    pub fn surface_descriptor(&self) -> &str {
        &self.surface
    }

    /// Σ Φ_k η_k on mesh edges.
    pub fn combine(&self, phi: &[f64]) -> Vec<f64> {
        let ne = self.forms.first().map_or(0, |f| f.len());
        let mut out = vec![0.0; ne];
        for (f, &c) in self.forms.iter().zip(phi) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
        out
    }

    /// Reciprocal condition number estimate of α (1 for the flat torus).
    pub fn alpha_condition(&self) -> f64 {
        if self.dim() == 0 {
            return 1.0;
        }
        let sv = self.alpha.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    }
}

pub fn harmonic_basis(s: &SurfaceModel) -> Result<HarmonicBasis> {
    match (s.genus, s.kind) {
        (0, _) => Ok(HarmonicBasis {
            genus: 0,
            forms: vec![],
            loops: vec![],
            alpha: DMatrix::zeros(0, 0),
            vectors: None,
            surface: s.descriptor().to_string(),
        }),
        (1, SurfaceKind::FlatTorus) => {
            let dx = s.mesh.edges.iter().map(|&[i, j]| s.mesh.edge_vector(i, j).x).collect();
            let dy = s.mesh.edges.iter().map(|&[i, j]| s.mesh.edge_vector(i, j).y).collect();
            let o = Vector3::zeros();
            Ok(HarmonicBasis {
                genus: 1,
                forms: vec![dx, dy],
                loops: vec![
                    Loop::Pieces(vec![(o, Vector3::x())]),
                    Loop::Pieces(vec![(o, Vector3::y())]),
                ],
                alpha: DMatrix::identity(2, 2),
                vectors: Some(vec![Vector3::x(), Vector3::y()]),
                surface: s.descriptor().to_string(),
            })
        }
        (1, _) => discrete_harmonic_basis(s),
        (g, _) => Err(Error::Unsupported(format!("genus {g}"))),
    }
}

/// Harmonic basis of a genus-1 triangulation: tree–cotree generators, one
/// closed cocycle per generator, projected to d*-free forms by a Poisson
/// solve and orthonormalized.
pub fn discrete_harmonic_basis(s: &SurfaceModel) -> Result<HarmonicBasis> {
    let m = &s.mesh;
    let (nv, ne, nf) = (m.num_vertices(), m.num_edges(), m.num_faces());
    // primal spanning tree, breadth first from vertex 0
    let mut parent_edge = vec![usize::MAX; nv];
    let mut parent = vec![usize::MAX; nv];
    let mut seen = vec![false; nv];
    let mut in_tree = vec![false; ne];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for r in &m.rings[v] {
            if !seen[r.neighbor] {
                seen[r.neighbor] = true;
                parent[r.neighbor] = v;
                parent_edge[r.neighbor] = r.edge;
                in_tree[r.edge] = true;
                queue.push_back(r.neighbor);
            }
        }
    }
    // dual spanning tree over faces through edges not in the primal tree
    let mut face_seen = vec![false; nf];
    let mut in_cotree = vec![false; ne];
    let mut face_parent_edge = vec![usize::MAX; nf];
    let mut order = Vec::with_capacity(nf);
    let mut queue = VecDeque::from([0usize]);
    face_seen[0] = true;
    while let Some(f) = queue.pop_front() {
        order.push(f);
        for &(e, _) in &m.face_edges[f] {
            if in_tree[e] {
                continue;
            }
            let [l, r] = m.edge_faces[e];
            let g = if l == f { r } else { l };
            if !face_seen[g] {
                face_seen[g] = true;
                in_cotree[e] = true;
                face_parent_edge[g] = e;
                queue.push_back(g);
            }
        }
    }
    let generators: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
    if generators.len() != 2 * s.genus as usize {
        return Err(Error::InvalidMesh(format!(
            "found {} homology generators, expected {}",
            generators.len(),
            2 * s.genus
        )));
    }
    let path_to_root = |mut v: usize| {
        let mut p = vec![v];
        while parent[v] != usize::MAX {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let mut loops = Vec::new();
    let mut cocycles = Vec::new();
    for &g in &generators {
        let [i, j] = m.edges[g];
        let mut lp: Vec<usize> = path_to_root(i).into_iter().rev().collect();
        lp.extend(path_to_root(j));
        // drop the shared tail so the cycle is simple near the root
        while lp.len() >= 3 && lp[1] == lp[lp.len() - 2] {
            lp.remove(0);
            lp.pop();
        }
        loops.push(Loop::Vertices(lp));

        let mut w = vec![0.0; ne];
        w[g] = 1.0;
        for &f in order.iter().rev() {
            let ep = face_parent_edge[f];
            if ep == usize::MAX {
                continue;
            }
            let mut sum = 0.0;
            let mut sp = 0.0;
            for &(e, sg) in &m.face_edges[f] {
                if e == ep {
                    sp = sg;
                } else {
                    sum += sg * w[e];
                }
            }
            w[ep] = -sum / sp;
        }
        cocycles.push(w);
    }
    // harmonic projection h = ω − d0 f with d0ᵀ⋆1 h = 0
    let mut forms: Vec<Vec<f64>> = Vec::new();
    for w in cocycles {
        let ws: Vec<f64> = w.iter().zip(&s.dec.star1).map(|(a, b)| a * b).collect();
        let rhs = linalg::mul_t(&s.dec.d0, &ws);
        let mut f = vec![0.0; nv];
        linalg::pcg(&s.dec.lap0, &rhs, &mut f, CgOptions { rel_tol: 1e-13, singular: true, ..Default::default() })?;
        let df = s.dec.apply_d0(&f);
        let mut h: Vec<f64> = w.iter().zip(&df).map(|(a, b)| a - b).collect();
        for prev in &forms {
            let c = s.dec.inner1(&h, prev);
            h.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
        }
        let n = s.dec.inner1(&h, &h).sqrt();
        if !(n > 1e-12) {
            return Err(Error::InvalidMesh("harmonic forms are linearly dependent (mesh too coarse)".into()));
        }
        h.iter_mut().for_each(|x| *x /= n);
        forms.push(h);
    }
    let k = forms.len();
    let alpha = DMatrix::from_fn(k, k, |l, j| match &loops[l] {
        Loop::Vertices(vs) => path_sum(m, vs, &forms[j]),
        Loop::Pieces(_) => unreachable!(),
    });
    Ok(HarmonicBasis { genus: s.genus, forms, loops, alpha, vectors: None, surface: s.descriptor().to_string() })
}

/// Σ of an edge 1-form along a vertex path.
pub fn path_sum(m: &Mesh, path: &[usize], form: &[f64]) -> f64 {
    path.windows(2)
        .map(|w| {
            let (e, sg) = m.edge_between(w[0], w[1]).expect("path vertices must be adjacent");
            sg * form[e]
        })
        .sum()
}

/// Clearance required between a ζ loop and every vortex.
pub const LOOP_CLEARANCE: f64 = 1e-2;

/// ζ(a;d) ∈ [0, 2π)^{2g}. Flat torus: closed form
/// ζ₁ = −2π Σ d_k a_k^y, ζ₂ = 2π Σ d_k a_k^x (mod 2π). Mesh: the loop sums
/// of d*ψ + A along the generator loops.
pub fn zeta(hb: &HarmonicBasis, gev: &GreenEvaluator, cfg: &VortexConfig) -> Result<Vec<f64>> {
    let s = gev.surface();
    check_basis(hb, s)?;
    let cfg = cfg.validated(s)?;
    match (hb.genus, s.kind) {
        (0, _) => Ok(vec![]),
        (_, SurfaceKind::FlatTorus) => {
            let (mut sx, mut sy) = (0.0, 0.0);
            for (a, &d) in cfg.points.iter().zip(&cfg.degrees) {
                sx += d as f64 * a.x;
                sy += d as f64 * a.y;
            }
            Ok(vec![(-TAU * sy).rem_euclid(TAU), (TAU * sx).rem_euclid(TAU)])
        }
        _ => {
            let psi = psi_field(gev, &cfg)?;
            let mut conn = vec![0.0; s.mesh.num_edges()];
            for (e, c) in conn.iter_mut().enumerate() {
                *c = psi.dstar[e] + s.frames.rho[e];
            }
            Ok(hb
                .loops
                .iter()
                .map(|l| match l {
                    Loop::Vertices(vs) => path_sum(&s.mesh, vs, &conn).rem_euclid(TAU),
                    Loop::Pieces(_) => unreachable!(),
                })
                .collect())
        }
    }
}

/// ζ on the flat torus by integrating d*ψ along generator loops. `offsets`
/// fixes the loop heights (γ₁ at y = c₁, γ₂ at x = c₂); by default each loop
/// runs through the widest gap between vortices.
pub fn zeta_by_path(gev: &GreenEvaluator, cfg: &VortexConfig, offsets: Option<[f64; 2]>) -> Result<Vec<f64>> {
    let s = gev.surface();
    if s.kind != SurfaceKind::FlatTorus {
        return Err(Error::Unsupported("path-integral ζ is implemented on the flat torus".into()));
    }
    let cfg = cfg.validated(s)?;
    let psi = psi_field(gev, &cfg)?;
    let mut out = Vec::with_capacity(2);
    for l in 0..2 {
        let c = match offsets {
            Some(o) => o[l],
            None => widest_gap(&cfg.points.iter().map(|p| if l == 0 { p.y } else { p.x }).collect::<Vec<_>>()),
        };
        let pieces = torus_generator_loop(l, c, &cfg, LOOP_CLEARANCE)?;
        out.push(psi.line_integral(&pieces)?.rem_euclid(TAU));
    }
    Ok(out)
}

fn widest_gap(coords: &[f64]) -> f64 {
    if coords.is_empty() {
        return 0.5;
    }
    let mut c: Vec<f64> = coords.iter().map(|x| x.rem_euclid(1.0)).collect();
    c.sort_by(f64::total_cmp);
    let mut best = (c[0] + 1.0 - c[c.len() - 1], c[c.len() - 1]);
    for w in c.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    (best.1 + 0.5 * best.0).rem_euclid(1.0)
}

/// Generator loop ℓ of the flat torus at coordinate `c`, with circular
/// detours of radius 2·clearance around vortices closer than that.
pub fn torus_generator_loop(l: usize, c: f64, cfg: &VortexConfig, clearance: f64) -> Result<Vec<(Point, Point)>> {
    // work in coordinates (u along the loop, v across it)
    let to_xy = |u: f64, v: f64| if l == 0 { Vector3::new(u, v, 0.0) } else { Vector3::new(v, u, 0.0) };
    let radius = 2.0 * clearance;
    let mut detours: Vec<(f64, f64, f64, f64)> = Vec::new(); // (u_in, u_out, centre u, centre v)
    for a in &cfg.points {
        let (au, av) = if l == 0 { (a.x, a.y) } else { (a.y, a.x) };
        let dv = (av - c) - (av - c).round();
        if dv.abs() < radius {
            let half = (radius * radius - dv * dv).sqrt();
            let cu = au.rem_euclid(1.0);
            detours.push((cu - half, cu + half, cu, c + dv));
        }
    }
    detours.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in detours.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::InvalidInput("vortices too close together for an admissible loop".into()));
        }
    }
    // start the loop outside every detour
    let start = match detours.first() {
        Some(d) => d.0 - 1e-3 * radius,
        None => 0.0,
    };
    if let (Some(f), Some(last)) = (detours.first(), detours.last()) {
        if last.1 > f.0 + 1.0 - 1e-3 * radius {
            return Err(Error::InvalidInput("vortices too close together for an admissible loop".into()));
        }
    }
    let mut pieces = Vec::new();
    let mut u = start;
    let end = start + 1.0;
    for &(u_in, u_out, cu, cv) in &detours {
        pieces.push((to_xy(u, c), to_xy(u_in, c)));
        // arc on the side of the line away from the vortex
        let a0 = (c - cv).atan2(u_in - cu);
        let a1 = (c - cv).atan2(u_out - cu);
        let side = if c >= cv { 1.0 } else { -1.0 };
        let mut sweep = a1 - a0;
        if side > 0.0 && sweep > 0.0 {
            sweep -= TAU;
        }
        if side < 0.0 && sweep < 0.0 {
            sweep += TAU;
        }
        // the arc must pass over the far side: through angle side·π/2
        let n = 48;
        let mut prev = to_xy(u_in, c);
        for k in 1..=n {
            let t = a0 + sweep * k as f64 / n as f64;
            let p = to_xy(cu + radius * t.cos(), cv + radius * t.sin());
            pieces.push((prev, p));
            prev = p;
        }
        u = u_out;
    }
    pieces.push((to_xy(u, c), to_xy(end, c)));
    // verify clearance of the chords
    for (p, q) in &pieces {
        for a in &cfg.points {
            let vp = crate::geometry::torus_delta(a, p);
            let w = q - p;
            let t = if w.norm_squared() > 0.0 { (-vp.dot(&w) / w.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
            let d = (vp + t * w).norm();
            if d < clearance {
                return Err(Error::TooClose { dist: d, min: clearance });
            }
        }
    }
    Ok(pieces)
}

fn check_basis(hb: &HarmonicBasis, s: &SurfaceModel) -> Result<()> {
    if hb.surface != s.descriptor() {
        return Err(Error::InvalidInput("harmonic basis belongs to a different surface".into()));
    }
    Ok(())
}

/// The translated lattice L(a;d) = 2πα⁻¹Z^{2g} − α⁻¹ζ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FluxLattice {
    pub alpha: DMatrix<f64>,
    pub alpha_inv: DMatrix<f64>,
    pub zeta: Vec<f64>,
    /// Component-wise membership tolerance on αΦ + ζ mod 2π.
    pub tol: f64,
    surface: String,
}

pub fn lattice(hb: &HarmonicBasis, gev: &GreenEvaluator, cfg: &VortexConfig) -> Result<FluxLattice> {
    let zeta = zeta(hb, gev, cfg)?;
    FluxLattice::new(hb, zeta, if hb.is_analytic() || hb.dim() == 0 { 1e-6 } else { 1e-3 })
}

impl FluxLattice {
    pub fn new(hb: &HarmonicBasis, zeta: Vec<f64>, tol: f64) -> Result<FluxLattice> {
        let k = hb.dim();
        if zeta.len() != k {
            return Err(Error::InvalidInput("ζ has the wrong dimension".into()));
        }
        let alpha_inv = if k == 0 {
            DMatrix::zeros(0, 0)
        } else {
            hb.alpha.clone().try_inverse().ok_or_else(|| Error::InvalidInput("period matrix is singular".into()))?
        };
        Ok(FluxLattice { alpha: hb.alpha.clone(), alpha_inv, zeta, tol, surface: hb.surface.clone() })
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    /// Columns generate the untranslated lattice 2πα⁻¹Z^{2g}.
    pub fn generator(&self) -> DMatrix<f64> {
        &self.alpha_inv * TAU
    }

    pub fn offset(&self) -> DVector<f64> {
        -(&self.alpha_inv * DVector::from_column_slice(&self.zeta))
    }

    /// Signed distance of each row of αΦ + ζ to 2πZ.
    pub fn defects(&self, phi: &[f64]) -> Result<Vec<f64>> {
        if phi.len() != self.dim() {
            return Err(Error::InvalidInput(format!("flux vector has {} entries, expected {}", phi.len(), self.dim())));
        }
        let r = &self.alpha * DVector::from_column_slice(phi);
        Ok((0..self.dim()).map(|l| crate::geometry::wrap_angle(r[l] + self.zeta[l])).collect())
    }

    pub fn contains(&self, phi: &[f64]) -> Result<bool> {
        Ok(self.defects(phi)?.iter().all(|d| d.abs() < self.tol))
    }

    /// The lattice point α⁻¹(2πm − ζ).
    pub fn point(&self, m: &[i64]) -> Vec<f64> {
        let v: DVector<f64> = DVector::from_iterator(self.dim(), (0..self.dim()).map(|l| TAU * m[l] as f64 - self.zeta[l]));
        (&self.alpha_inv * v).iter().cloned().collect()
    }

    /// Closest lattice point to Φ: rounding in lattice coordinates, then a
    /// search over the neighbouring cells.
    pub fn nearest_point(&self, phi: &[f64]) -> Result<Vec<f64>> {
        if phi.len() != self.dim() {
            return Err(Error::InvalidInput("flux vector has the wrong dimension".into()));
        }
        if self.dim() == 0 {
            return Ok(vec![]);
        }
        let r = &self.alpha * DVector::from_column_slice(phi);
        let base: Vec<i64> = (0..self.dim()).map(|l| ((r[l] + self.zeta[l]) / TAU).round() as i64).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for offs in neighbour_offsets(self.dim(), 2) {
            let m: Vec<i64> = base.iter().zip(&offs).map(|(a, b)| a + b).collect();
            let p = self.point(&m);
            let d: f64 = p.iter().zip(phi).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, p));
            }
        }
        Ok(best.unwrap().1)
    }
}

fn neighbour_offsets(dim: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for o in &out {
            for k in -r..=r {
                let mut v = o.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Hausdorff distance between two translates of the same lattice.
pub fn lattice_distance(l1: &FluxLattice, l2: &FluxLattice) -> Result<f64> {
    if l1.surface != l2.surface || l1.dim() != l2.dim() || (&l1.alpha - &l2.alpha).abs().max() > 1e-12 {
        return Err(Error::InvalidInput("lattices come from different bases".into()));
    }
    if l1.dim() == 0 {
        return Ok(0.0);
    }
    let diff = l1.offset() - l2.offset();
    let lat = FluxLattice { zeta: vec![0.0; l1.dim()], ..l1.clone() };
    let p = lat.nearest_point(diff.as_slice())?;
    Ok(p.iter().zip(diff.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// 2π × the minimal connection between the signed measures Σ d δ_a of two
/// configurations of equal total degree (optimal matching of unit charges,
/// geodesic cost).
pub fn w11_vortex_distance(s: &SurfaceModel, cfg1: &VortexConfig, cfg2: &VortexConfig) -> Result<f64> {
    if cfg1.total_degree() != cfg2.total_degree() {
        return Err(Error::InvalidInput(format!(
            "total degrees differ: {} vs {}",
            cfg1.total_degree(),
            cfg2.total_degree()
        )));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (p, &d) in cfg1.points.iter().zip(&cfg1.degrees) {
        for _ in 0..d.abs() {
            if d > 0 { plus.push(*p) } else { minus.push(*p) }
        }
    }
    for (p, &d) in cfg2.points.iter().zip(&cfg2.degrees) {
        for _ in 0..d.abs() {
            if d > 0 { minus.push(*p) } else { plus.push(*p) }
        }
    }
    debug_assert_eq!(plus.len(), minus.len());
    let n = plus.len();
    if n == 0 {
        return Ok(0.0);
    }
    let cost: Vec<Vec<f64>> = plus.iter().map(|p| minus.iter().map(|q| s.geodesic_dist(p, q)).collect()).collect();
    let (total, _) = assignment::min_cost_assignment(&cost);
    Ok(TAU * total)
}

pub mod assignment {
    //! Square assignment problem (Hungarian algorithm with potentials).

    /// Minimum total cost and the column assigned to each row.
    pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
        let n = cost.len();
        if n == 0 {
            return (0.0, vec![]);
        }
        let inf = f64::INFINITY;
        let mut u = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        let mut p = vec![0usize; n + 1]; // row matched to column j (1-based, 0 = none)
        let mut way = vec![0usize; n + 1];
        for i in 1..=n {
            p[0] = i;
            let mut j0 = 0;
            let mut minv = vec![inf; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let i0 = p[j0];
                let mut delta = inf;
                let mut j1 = 0;
                for j in 1..=n {
                    if !used[j] {
                        let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                        if cur < minv[j] {
                            minv[j] = cur;
                            way[j] = j0;
                        }
                        if minv[j] < delta {
                            delta = minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[p[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                p[j0] = p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        let mut assign = vec![0usize; n];
        for j in 1..=n {
            assign[p[j] - 1] = j - 1;
        }
        let total = (0..n).map(|i| cost[i][assign[i]]).sum();
        (total, assign)
    }
}
