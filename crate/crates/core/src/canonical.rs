//! The current j* = d*ψ + Σ Φ_k η_k and the canonical unit field u* obtained
//! by transporting one vector along a spanning tree.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point, SurfaceModel};
use crate::greens::{coexact_correction, psi_field, GreenEvaluator};
use crate::harmonic::{lattice, HarmonicBasis, VortexConfig};

/// Number of independent loops checked after construction.
pub const AUDIT_LOOPS: usize = 20;
/// Largest loop defect accepted by the audit.
pub const AUDIT_TOL: f64 = 1e-2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalField {
    /// ∫_e j* over each edge (reference orientation).
    pub jstar: Vec<f64>,
    /// Frame coefficient of u* at each vertex.
    pub field: Vec<Complex64>,
    pub base_vertex: usize,
    pub base_vector: Complex64,
    pub cfg: VortexConfig,
    pub phi: Vec<f64>,
    /// Defects of the audit loops.
    pub audits: Vec<f64>,
    /// Relative L² error between the current of `field` and `jstar`, over
    /// edges more than two cells from every vortex.
    pub current_error: f64,
}

/// Edge integrals of j* = d*ψ + Σ Φ_k η_k. The d*ψ part carries a small
/// coexact correction so that around every face j* + ρ adds up to exactly
/// 2π times the enclosed degree.
pub fn jstar(gev: &GreenEvaluator, hb: &HarmonicBasis, cfg: &VortexConfig, phi: &[f64]) -> Result<Vec<f64>> {
    let s = gev.surface();
    if phi.len() != hb.dim() {
        return Err(Error::InvalidInput(format!("flux vector has {} entries, expected {}", phi.len(), hb.dim())));
    }
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite flux".into()));
    }
    let psi = psi_field(gev, cfg)?;
    let mut j = psi.dstar;
    let mut m: Vec<f64> = s
        .mesh
        .face_edges
        .iter()
        .map(|fe| wrap_angle(fe.iter().map(|&(e, sg)| sg * (j[e] + s.frames.rho[e])).sum()))
        .collect();
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    m.iter_mut().for_each(|x| *x -= mean);
    let c = coexact_correction(s, &m)?;
    for (jv, cv) in j.iter_mut().zip(&c) {
        *jv += cv;
    }
    for (jv, h) in j.iter_mut().zip(hb.combine(phi)) {
        *jv += h;
    }
    Ok(j)
}

/// Σ (j + ρ) along a vertex path.
pub fn path_phase(s: &SurfaceModel, j: &[f64], path: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let (e, sg) = s
            .mesh
            .edge_between(w[0], w[1])
            .ok_or_else(|| Error::InvalidInput(format!("path vertices {} and {} are not adjacent", w[0], w[1])))?;
        total += sg * (j[e] + s.frames.rho[e]);
    }
    Ok(total)
}

/// Transport of the frame coefficient `v0` along a vertex path solving
/// D u = j iu: rotation by ∫(j + A). Every path vertex must stay at least
/// `r_min` from the points in `avoid`.
pub fn holonomy_transport(
    s: &SurfaceModel,
    j: &[f64],
    path: &[usize],
    v0: Complex64,
    avoid: &[Point],
    r_min: f64,
) -> Result<Complex64> {
    for &v in path {
        for a in avoid {
            let d = s.geodesic_dist(&s.mesh.positions[v], a);
            if d < r_min {
                return Err(Error::TooClose { dist: d, min: r_min });
            }
        }
    }
    let phase = path_phase(s, j, path)?;
    Ok(Complex64::from_polar(v0.norm(), v0.arg() + phase))
}

/// Build u* with the default gauge (base vector = first frame axis).
pub fn build_ustar(gev: &GreenEvaluator, hb: &HarmonicBasis, cfg: &VortexConfig, phi: &[f64]) -> Result<CanonicalField> {
    build_ustar_gauged(gev, hb, cfg, phi, 0.0)
}

/// Build u* with base vector e^{iβ} at the base vertex.
pub fn build_ustar_gauged(
    gev: &GreenEvaluator,
    hb: &HarmonicBasis,
    cfg: &VortexConfig,
    phi: &[f64],
    beta: f64,
) -> Result<CanonicalField> {
    let s = gev.surface();
    let cfg = cfg.validated(s)?;
    let lat = lattice(hb, gev, &cfg)?;
    for (row, d) in lat.defects(phi)?.into_iter().enumerate() {
        if d.abs() >= lat.tol {
            return Err(Error::Quantization { row, defect: d });
        }
    }
    let j = jstar(gev, hb, &cfg, phi)?;
    let nv = s.mesh.num_vertices();

    // base point: first vertex farthest from every vortex
    let mut clearance = vec![f64::INFINITY; nv];
    for a in &cfg.points {
        for (c, d) in clearance.iter_mut().zip(s.distances_from(a)) {
            *c = c.min(d);
        }
    }
    let mut base = 0;
    for v in 1..nv {
        if clearance[v] > clearance[base] {
            base = v;
        }
    }
    let base_vector = Complex64::from_polar(1.0, beta);

    // breadth-first transport, neighbours in index order
    let mut field = vec![Complex64::new(0.0, 0.0); nv];
    let mut parent = vec![usize::MAX; nv];
    let mut seen = vec![false; nv];
    let mut tree_edge = vec![false; s.mesh.num_edges()];
    field[base] = base_vector;
    seen[base] = true;
    let mut queue = VecDeque::from([base]);
    while let Some(v) = queue.pop_front() {
        let mut nbrs: Vec<_> = s.mesh.rings[v].iter().map(|r| (r.neighbor, r.edge)).collect();
        nbrs.sort_unstable();
        for (w, e) in nbrs {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                tree_edge[e] = true;
                let ph = path_phase(s, &j, &[v, w])?;
                field[w] = Complex64::from_polar(1.0, field[v].arg() + ph);
                queue.push_back(w);
            }
        }
    }

    // audits: fundamental cycles of randomly chosen non-tree edges, transported
    // from scratch along the tree paths
    let to_root = |mut v: usize| {
        let mut p = vec![v];
        while parent[v] != usize::MAX {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let mut candidates: Vec<usize> = (0..s.mesh.num_edges()).filter(|&e| !tree_edge[e]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    candidates.shuffle(&mut rng);
    let mut audits = Vec::with_capacity(AUDIT_LOOPS);
    for (index, &e) in candidates.iter().take(AUDIT_LOOPS).enumerate() {
        let [a, b] = s.mesh.edges[e];
        let mut lp: Vec<usize> = to_root(a).into_iter().rev().collect();
        lp.extend(to_root(b));
        let out = Complex64::from_polar(1.0, base_vector.arg() + path_phase(s, &j, &lp)?);
        let defect = wrap_angle(out.arg() - base_vector.arg());
        if defect.abs() >= AUDIT_TOL {
            return Err(Error::AuditFailed { index, defect });
        }
        audits.push(defect);
    }

    // edges within two cells of a vortex may carry more than π of phase
    let extracted = extract_current(s, &field);
    let exclusion = 2.0 * s.mesh_size();
    let (mut num, mut den) = (0.0, 0.0);
    for e in 0..j.len() {
        let [a, b] = s.mesh.edges[e];
        if clearance[a].min(clearance[b]) < exclusion {
            continue;
        }
        let w = s.dec.star1[e];
        num += w * (extracted[e] - j[e]).powi(2);
        den += w * j[e] * j[e];
    }
    let current_error = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok(CanonicalField { jstar: j, field, base_vertex: base, base_vector, cfg, phi: phi.to_vec(), audits, current_error })
}

/// Current of a vertex field: the phase of u_j relative to the transport of
/// u_i, per edge, in (−π, π].
pub fn extract_current(s: &SurfaceModel, field: &[Complex64]) -> Vec<f64> {
    s.mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| wrap_angle(field[b].arg() - field[a].arg() - s.frames.rho[e]))
        .collect()
}

impl CanonicalField {
    /// Ambient tangent vectors of the field at every vertex.
    pub fn vectors(&self, s: &SurfaceModel) -> Vec<Point> {
        self.field.iter().enumerate().map(|(v, z)| s.frames.to_vector(v, *z)).collect()
    }

    /// Largest compatibility defect over all edges, ignoring the faces that
    /// carry vortices (where the phase winds by 2πd).
    pub fn max_edge_defect(&self, s: &SurfaceModel) -> f64 {
        let ex = extract_current(s, &self.field);
        ex.iter()
            .zip(&self.jstar)
            .map(|(a, b)| wrap_angle(a - b).abs())
            .fold(0.0, f64::max)
            .min(TAU)
    }
}
