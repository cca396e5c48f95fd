//! Closed oriented triangle meshes, optionally periodic (the flat unit torus).

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// One entry of the counterclockwise one-ring of a vertex: the outgoing edge
/// towards `neighbor`, and the face swept when turning from this edge to the next.
#[derive(Clone, Debug)]
pub struct RingEntry {
    pub neighbor: usize,
    pub edge: usize,
    pub face: usize,
    pub corner_angle: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub positions: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
    /// Edges with `e[0] < e[1]`; this is the reference orientation of 1-forms.
    pub edges: Vec<[usize; 2]>,
    /// For face corner k, the edge from `f[k]` to `f[k+1]` and its sign
    /// relative to the reference orientation.
    pub face_edges: Vec<[(usize, f64); 3]>,
    /// `[left, right]`: the face traversing the edge forwards, then backwards.
    pub edge_faces: Vec<[usize; 2]>,
    pub rings: Vec<Vec<RingEntry>>,
    /// Coordinates live in the unit square and differences use the minimum image.
    pub periodic: bool,
    edge_index: HashMap<(usize, usize), usize>,
}

fn wrap_unit(d: f64) -> f64 {
    d - d.round()
}

impl Mesh {
    /// Builds connectivity and validates a closed, consistently oriented,
    /// manifold triangulation. `preferred` picks the first outgoing edge of
    /// every one-ring (the edge best aligned with it); otherwise the edge to
    /// the lowest-index neighbor comes first.
    pub fn new(
        positions: Vec<Point>,
        faces: Vec<[usize; 3]>,
        periodic: bool,
        preferred: Option<Point>,
    ) -> Result<Mesh> {
        let nv = positions.len();
        if nv < 4 || faces.len() < 4 {
            return Err(Error::InvalidMesh("too few vertices or faces".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_faces: Vec<[usize; 2]> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [(0usize, 0.0f64); 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([usize::MAX, usize::MAX]);
                    edges.len() - 1
                });
                let slot = if a < b { 0 } else { 1 };
                if edge_faces[e][slot] != usize::MAX {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is non-manifold or inconsistently oriented",
                        key.0, key.1
                    )));
                }
                edge_faces[e][slot] = fi;
                fe[k] = (e, if a < b { 1.0 } else { -1.0 });
            }
            face_edges.push(fe);
        }
        if let Some(e) = edge_faces.iter().position(|ef| ef.contains(&usize::MAX)) {
            return Err(Error::InvalidMesh(format!(
                "boundary edge ({}, {})",
                edges[e][0], edges[e][1]
            )));
        }

        let mut mesh = Mesh {
            positions,
            faces,
            edges,
            face_edges,
            edge_faces,
            rings: Vec::new(),
            periodic,
            edge_index,
        };

        let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some(f) = areas.iter().position(|&a| !(a >= 1e-14 * mean)) {
            return Err(Error::InvalidMesh(format!("degenerate triangle {f} (area {:e})", areas[f])));
        }

        mesh.rings = mesh.build_rings(preferred)?;
        Ok(mesh)
    }

    fn build_rings(&self, preferred: Option<Point>) -> Result<Vec<Vec<RingEntry>>> {
        let nv = self.positions.len();
        // corner lists: for each vertex, (next, prev, face, angle)
        let mut corners: Vec<Vec<(usize, usize, usize, f64)>> = vec![Vec::new(); nv];
        for (fi, f) in self.faces.iter().enumerate() {
            let ang = self.corner_angles(fi);
            for k in 0..3 {
                corners[f[k]].push((f[(k + 1) % 3], f[(k + 2) % 3], fi, ang[k]));
            }
        }
        let mut rings = Vec::with_capacity(nv);
        for (v, cs) in corners.iter().enumerate() {
            if cs.is_empty() {
                return Err(Error::InvalidMesh(format!("isolated vertex {v}")));
            }
            let start = match preferred {
                Some(p) => {
                    let mut best = 0;
                    let mut best_dot = f64::NEG_INFINITY;
                    for (k, c) in cs.iter().enumerate() {
                        let d = self.edge_vector(v, c.0);
                        let s = d.dot(&p) / d.norm();
                        if s > best_dot + 1e-12 {
                            best_dot = s;
                            best = k;
                        }
                    }
                    best
                }
                None => (0..cs.len()).min_by_key(|&k| cs[k].0).unwrap(),
            };
            let by_next: HashMap<usize, usize> =
                cs.iter().enumerate().map(|(k, c)| (c.0, k)).collect();
            let mut ring = Vec::with_capacity(cs.len());
            let mut k = start;
            for _ in 0..cs.len() {
                let (next, prev, face, angle) = cs[k];
                ring.push(RingEntry {
                    neighbor: next,
                    edge: self.edge_index[&(v.min(next), v.max(next))],
                    face,
                    corner_angle: angle,
                });
                match by_next.get(&prev) {
                    Some(&kk) => k = kk,
                    None => return Err(Error::InvalidMesh(format!("open fan at vertex {v}"))),
                }
            }
            if k != start {
                return Err(Error::InvalidMesh(format!("non-manifold vertex {v}")));
            }
            rings.push(ring);
        }
        Ok(rings)
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Edge index and sign (+1 when `i -> j` is the reference orientation).
    pub fn edge_between(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        self.edge_index
            .get(&(i.min(j), i.max(j)))
            .map(|&e| (e, if i < j { 1.0 } else { -1.0 }))
    }

    /// Displacement from vertex `i` to vertex `j`.
    pub fn edge_vector(&self, i: usize, j: usize) -> Point {
        let d = self.positions[j] - self.positions[i];
        if self.periodic {
            Vector3::new(wrap_unit(d.x), wrap_unit(d.y), 0.0)
        } else {
            d
        }
    }

    /// Corner positions unwrapped around the first corner.
    pub fn face_points(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.faces[f];
        let p = self.positions[a];
        [p, p + self.edge_vector(a, b), p + self.edge_vector(a, c)]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [p, q, r] = self.face_points(f);
        0.5 * (q - p).cross(&(r - p)).norm()
    }

    pub fn face_normal(&self, f: usize) -> Point {
        let [p, q, r] = self.face_points(f);
        (q - p).cross(&(r - p)).normalize()
    }

    pub fn face_barycenter(&self, f: usize) -> Point {
        let [p, q, r] = self.face_points(f);
        self.wrap_point((p + q + r) / 3.0)
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [i, j] = self.edges[e];
        self.wrap_point(self.positions[i] + 0.5 * self.edge_vector(i, j))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [i, j] = self.edges[e];
        self.edge_vector(i, j).norm()
    }

    /// Interior angles at the three corners.
    pub fn corner_angles(&self, f: usize) -> [f64; 3] {
        let p = self.face_points(f);
        let mut out = [0.0; 3];
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            out[k] = a.cross(&b).norm().atan2(a.dot(&b));
        }
        out
    }

    /// Maps a point into the fundamental square on periodic meshes.
    pub fn wrap_point(&self, p: Point) -> Point {
        if self.periodic {
            Vector3::new(p.x - p.x.floor(), p.y - p.y.floor(), 0.0)
        } else {
            p
        }
    }

    /// Angle-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Point> {
        if self.periodic {
            return vec![Vector3::z(); self.num_vertices()];
        }
        let mut n = vec![Vector3::zeros(); self.num_vertices()];
        for f in 0..self.num_faces() {
            let nf = self.face_normal(f);
            let ang = self.corner_angles(f);
            for k in 0..3 {
                n[self.faces[f][k]] += ang[k] * nf;
            }
        }
        n.into_iter().map(|v| v.normalize()).collect()
    }

    pub fn mean_edge_length(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).sum::<f64>() / self.num_edges() as f64
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Vertices sharing an edge with `v`, in counterclockwise order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.rings[v].iter().map(|r| r.neighbor)
    }
}

// === Generators ===

/// Icosahedron refined `subdivisions` times by edge midpoints, projected to the unit sphere.
pub fn icosphere(subdivisions: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Point> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vector3::new(c[0], c[1], c[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<Point>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pts.push(((pts[a] + pts[b]) * 0.5).normalize());
                pts.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut pts);
            let bc = midpoint(f[1], f[2], &mut pts);
            let ca = midpoint(f[2], f[0], &mut pts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (pts, faces)
}

/// Offset of the periodic grid, chosen so that points with small rational
/// coordinates never land on a vertex.
pub const TORUS_GRID_OFFSET: [f64; 2] = [0.173, 0.291];

/// Periodic `n × n` grid on the unit square with odd rows shifted by half a
/// cell, giving all-acute isosceles triangles. `n` must be even and ≥ 4.
pub fn torus_grid(n: usize) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("torus grid size {n} must be even and at least 4")));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
            pts.push(Vector3::new(
                (i as f64 + shift + TORUS_GRID_OFFSET[0]) * h,
                (j as f64 + TORUS_GRID_OFFSET[1]) * h,
                0.0,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            if j % 2 == 0 {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    Ok((pts, faces))
}

/// Torus of revolution with tube radius `r` around a circle of radius `big_r`,
/// parametrized by (u, v) ∈ [0, 2π)², `nu × nv` quads split along alternating diagonals.
pub fn torus_of_revolution(big_r: f64, r: f64, nu: usize, nv: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut pts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let rho = big_r + r * v.cos();
            pts.push(Vector3::new(rho * u.cos(), rho * u.sin(), r * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    (pts, faces)
}

/// Ellipsoid with semi-axes (a, b, c): an icosphere scaled along the axes.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdivisions: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let (pts, faces) = icosphere(subdivisions);
    (pts.into_iter().map(|p| Vector3::new(a * p.x, b * p.y, c * p.z)).collect(), faces)
}
