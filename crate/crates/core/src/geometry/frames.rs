//! Per-vertex tangent frames and the discrete Levi-Civita connection.
//!
//! Each vertex carries an intrinsic angular coordinate: corner angles around
//! the one-ring are rescaled to sum to 2π, with the first ring edge at angle
//! zero. Transport across an edge rotates frame coefficients by
//! `rho = θ_ji + π − θ_ij`, so the holonomy around a face equals the angle
//! defects of its corners distributed in proportion to the corner angles.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;

use super::mesh::{Mesh, Point};

pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Clone, Debug)]
pub struct FrameAtlas {
    pub normals: Vec<Point>,
    pub e1: Vec<Point>,
    pub e2: Vec<Point>,
    /// Intrinsic angle of each ring edge, aligned with `Mesh::rings`.
    pub ring_angles: Vec<Vec<f64>>,
    /// Angle of each projected ring edge in the extrinsic frame (e1, e2).
    ext_angles: Vec<Vec<f64>>,
    /// Outgoing-edge angle at each endpoint: `[θ at e[0] towards e[1], θ at e[1] towards e[0]]`.
    pub edge_angles: Vec<[f64; 2]>,
    /// Transport angle along the reference orientation of each edge.
    pub rho: Vec<f64>,
    pub angle_sums: Vec<f64>,
    /// 2π minus the angle sum at each vertex.
    pub defects: Vec<f64>,
    /// Angle defects distributed to faces; equals each face's holonomy mod 2π.
    pub face_curvature: Vec<f64>,
}

impl FrameAtlas {
    pub fn build(mesh: &Mesh) -> FrameAtlas {
        let nv = mesh.num_vertices();
        let normals = mesh.vertex_normals();
        let mut e1 = Vec::with_capacity(nv);
        let mut e2 = Vec::with_capacity(nv);
        let mut ring_angles = Vec::with_capacity(nv);
        let mut ext_angles = Vec::with_capacity(nv);
        let mut angle_sums = Vec::with_capacity(nv);
        let mut edge_angles = vec![[0.0; 2]; mesh.num_edges()];
        for v in 0..nv {
            let ring = &mesh.rings[v];
            let n = normals[v];
            let t = mesh.edge_vector(v, ring[0].neighbor);
            let a = (t - t.dot(&n) * n).normalize();
            let b = n.cross(&a);
            let total: f64 = ring.iter().map(|r| r.corner_angle).sum();
            let scale = TAU / total;
            let mut acc = 0.0;
            let mut ia = Vec::with_capacity(ring.len());
            let mut ea = Vec::with_capacity(ring.len());
            for r in ring {
                ia.push(acc * scale);
                acc += r.corner_angle;
                let d = mesh.edge_vector(v, r.neighbor);
                ea.push(d.dot(&b).atan2(d.dot(&a)).rem_euclid(TAU));
                let [i, _] = mesh.edges[r.edge];
                edge_angles[r.edge][if i == v { 0 } else { 1 }] = *ia.last().unwrap();
            }
            ea[0] = 0.0;
            e1.push(a);
            e2.push(b);
            ring_angles.push(ia);
            ext_angles.push(ea);
            angle_sums.push(total);
        }
        let rho = edge_angles.iter().map(|&[ti, tj]| wrap_angle(tj + PI - ti)).collect();
        let defects: Vec<f64> = angle_sums.iter().map(|s| TAU - s).collect();
        let face_curvature = (0..mesh.num_faces())
            .map(|f| {
                let ang = mesh.corner_angles(f);
                (0..3).map(|k| {
                    let v = mesh.faces[f][k];
                    defects[v] * ang[k] / angle_sums[v]
                })
                .sum()
            })
            .collect();
        FrameAtlas { normals, e1, e2, ring_angles, ext_angles, edge_angles, rho, angle_sums, defects, face_curvature }
    }

    /// Transport angle from vertex `i` to an adjacent vertex `j`.
    pub fn rho_between(&self, mesh: &Mesh, i: usize, j: usize) -> f64 {
        let (e, s) = mesh.edge_between(i, j).expect("vertices are not adjacent");
        s * self.rho[e]
    }

    fn monotone(ext: &[f64]) -> bool {
        ext.windows(2).all(|w| w[1] > w[0]) && *ext.last().unwrap() < TAU
    }

    /// Intrinsic angle of a direction given by its extrinsic angle at `v`
    /// (piecewise linear between ring edges).
    pub fn intrinsic_angle(&self, v: usize, ext: f64) -> f64 {
        let (ea, ia) = (&self.ext_angles[v], &self.ring_angles[v]);
        if !Self::monotone(ea) {
            return ext.rem_euclid(TAU);
        }
        interp_periodic(ea, ia, ext.rem_euclid(TAU))
    }

    pub fn extrinsic_angle(&self, v: usize, int: f64) -> f64 {
        let (ea, ia) = (&self.ext_angles[v], &self.ring_angles[v]);
        if !Self::monotone(ea) {
            return int.rem_euclid(TAU);
        }
        interp_periodic(ia, ea, int.rem_euclid(TAU))
    }

    /// Frame coefficient of an ambient vector at `v` (normal part discarded).
    pub fn to_coeff(&self, v: usize, w: &Point) -> Complex64 {
        let (x, y) = (w.dot(&self.e1[v]), w.dot(&self.e2[v]));
        let r = x.hypot(y);
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(r, self.intrinsic_angle(v, y.atan2(x)))
    }

    /// Ambient tangent vector of a frame coefficient at `v`.
    pub fn to_vector(&self, v: usize, z: Complex64) -> Point {
        let r = z.norm();
        if r == 0.0 {
            return Vector3::zeros();
        }
        let a = self.extrinsic_angle(v, z.arg());
        r * (a.cos() * self.e1[v] + a.sin() * self.e2[v])
    }

    /// Coefficient transported along a vertex path.
    pub fn transport(&self, mesh: &Mesh, path: &[usize], z: Complex64) -> Complex64 {
        let angle: f64 = path.windows(2).map(|w| self.rho_between(mesh, w[0], w[1])).sum();
        z * Complex64::from_polar(1.0, angle)
    }
}

/// Piecewise-linear map x ↦ y on the circle, knots `xs`/`ys` increasing from 0.
fn interp_periodic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = xs.iter().rposition(|&a| a <= x).unwrap_or_default();
    let (x0, y0) = (xs[k], ys[k]);
    let (x1, y1) = if k + 1 < n { (xs[k + 1], ys[k + 1]) } else { (TAU, TAU) };
    y0 + (x - x0) * (y1 - y0) / (x1 - x0)
}
