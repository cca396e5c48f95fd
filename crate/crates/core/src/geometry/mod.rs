//! Surface models, geodesics, frames and discrete exterior calculus.

pub mod dec;
pub mod frames;
pub mod mesh;
pub mod off;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use dec::Dec;
pub use frames::{wrap_angle, FrameAtlas};
pub use mesh::{Mesh, Point};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceKind {
    FlatTorus,
    UnitSphere,
    TriMesh,
}

/// Surface descriptor as it appears in run configurations. For the flat
/// torus, `subdivisions = s` selects a periodic 2^s × 2^s grid; for the
/// sphere, `s` icosahedral refinements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    FlatTorus { subdivisions: u32 },
    UnitSphere { subdivisions: u32 },
    Mesh { path: String },
}

pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub mesh: Mesh,
    pub frames: FrameAtlas,
    pub dec: Dec,
    pub euler_char: i64,
    pub genus: u32,
    /// Analytic area for the model surfaces, the mesh area otherwise.
    pub total_area: f64,
    descriptor: String,
    steiner: OnceLock<SteinerGraph>,
}

impl std::fmt::Debug for SurfaceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceModel")
            .field("kind", &self.kind)
            .field("vertices", &self.mesh.num_vertices())
            .field("faces", &self.mesh.num_faces())
            .field("euler_char", &self.euler_char)
            .finish()
    }
}

pub fn make_surface(spec: &SurfaceSpec) -> Result<SurfaceModel> {
    match spec {
        SurfaceSpec::FlatTorus { subdivisions } => flat_torus(*subdivisions),
        SurfaceSpec::UnitSphere { subdivisions } => unit_sphere(*subdivisions),
        SurfaceSpec::Mesh { path } => {
            let text = std::fs::read_to_string(path)?;
            let (v, f) = off::parse_off(&text)?;
            let mut s = tri_mesh(v, f)?;
            s.descriptor = format!("mesh:{}", hex_digest(text.as_bytes()));
            Ok(s)
        }
    }
}

pub fn flat_torus(subdivisions: u32) -> Result<SurfaceModel> {
    if !(2..=11).contains(&subdivisions) {
        return Err(Error::InvalidInput(format!("torus subdivisions {subdivisions} outside 2..=11")));
    }
    let n = 1usize << subdivisions;
    let (v, f) = mesh::torus_grid(n)?;
    let mesh = Mesh::new(v, f, true, Some(Vector3::x()))?;
    build(SurfaceKind::FlatTorus, mesh, Some(1.0), format!("flat_torus:{subdivisions}"))
}

pub fn unit_sphere(subdivisions: u32) -> Result<SurfaceModel> {
    if subdivisions > 8 {
        return Err(Error::InvalidInput(format!("sphere subdivisions {subdivisions} above 8")));
    }
    let (v, f) = mesh::icosphere(subdivisions);
    let rot = sphere_mesh_rotation();
    let v = v.into_iter().map(|p| rot * p).collect();
    let mesh = Mesh::new(v, f, false, None)?;
    build(SurfaceKind::UnitSphere, mesh, Some(4.0 * PI), format!("unit_sphere:{subdivisions}"))
}

/// Fixed generic rotation applied to the model-sphere mesh so that poles and
/// other simple points stay off vertices and edges.
pub fn sphere_mesh_rotation() -> nalgebra::Rotation3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(0.31, -0.17, 0.93)), 0.377)
}

/// General closed triangulated surface of genus 0 or 1.
pub fn tri_mesh(positions: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<SurfaceModel> {
    let mesh = Mesh::new(positions, faces, false, None)?;
    let mut h = Sha256::new();
    for p in &mesh.positions {
        for c in p.iter() {
            h.update(c.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        for &i in f {
            h.update((i as u64).to_le_bytes());
        }
    }
    let d = format!("mesh:{:x}", h.finalize());
    build(SurfaceKind::TriMesh, mesh, None, d)
}

fn build(kind: SurfaceKind, mesh: Mesh, area: Option<f64>, descriptor: String) -> Result<SurfaceModel> {
    let chi = mesh.euler_characteristic();
    if chi != 0 && chi != 2 {
        return Err(Error::InvalidMesh(format!("Euler characteristic {chi}: only genus 0 or 1 supported")));
    }
    let frames = FrameAtlas::build(&mesh);
    let dec = Dec::build(&mesh)?;
    let total_area = area.unwrap_or_else(|| dec.total_area());
    Ok(SurfaceModel {
        kind,
        mesh,
        frames,
        dec,
        euler_char: chi,
        genus: ((2 - chi) / 2) as u32,
        total_area,
        descriptor,
        steiner: OnceLock::new(),
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl SurfaceModel {
    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// SHA-256 of the surface descriptor, recorded in checkpoints.
    pub fn hash(&self) -> String {
        hex_digest(self.descriptor.as_bytes())
    }

    pub fn is_analytic(&self) -> bool {
        self.kind != SurfaceKind::TriMesh
    }

    pub fn is_embedded(&self) -> bool {
        self.kind != SurfaceKind::FlatTorus
    }

    pub fn mesh_size(&self) -> f64 {
        self.mesh.mean_edge_length()
    }

    /// Mean curvature bar κ̄ = 2πχ / area.
    pub fn mean_curvature(&self) -> f64 {
        2.0 * PI * self.euler_char as f64 / self.total_area
    }

    /// Diameter (exact for model surfaces, a mesh estimate otherwise).
    pub fn diameter(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus => 0.5f64.sqrt(),
            SurfaceKind::UnitSphere => PI,
            SurfaceKind::TriMesh => {
                let d = self.steiner().dijkstra(0);
                let far = (0..self.mesh.num_vertices())
                    .max_by(|&a, &b| d[a].total_cmp(&d[b]))
                    .unwrap();
                self.steiner().dijkstra(far)[..self.mesh.num_vertices()].iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    /// Canonical representative of a point: wrapped into the unit square on the
    /// torus, normalized on the sphere, snapped to the nearest vertex on a mesh.
    pub fn normalize_point(&self, p: &Point) -> Result<Point> {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("non-finite point".into()));
        }
        match self.kind {
            SurfaceKind::FlatTorus => Ok(Vector3::new(p.x - p.x.floor(), p.y - p.y.floor(), 0.0)),
            SurfaceKind::UnitSphere => {
                let n = p.norm();
                if n < 1e-12 {
                    return Err(Error::InvalidInput("zero vector is not on the sphere".into()));
                }
                Ok(p / n)
            }
            SurfaceKind::TriMesh => Ok(self.mesh.positions[self.nearest_vertex(p)]),
        }
    }

    pub fn nearest_vertex(&self, p: &Point) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, q) in self.mesh.positions.iter().enumerate() {
            let d = match self.kind {
                SurfaceKind::FlatTorus => torus_delta(q, p).norm_squared(),
                _ => (q - p).norm_squared(),
            };
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    pub fn geodesic_dist(&self, x: &Point, y: &Point) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus => torus_delta(x, y).norm(),
            SurfaceKind::UnitSphere => sphere_angle(&x.normalize(), &y.normalize()),
            SurfaceKind::TriMesh => {
                let (a, b) = (self.nearest_vertex(x), self.nearest_vertex(y));
                if a == b {
                    return 0.0;
                }
                self.steiner().dijkstra(a)[b]
            }
        }
    }

    /// Distances from `x` to every vertex.
    pub fn distances_from(&self, x: &Point) -> Vec<f64> {
        match self.kind {
            SurfaceKind::TriMesh => {
                let nv = self.mesh.num_vertices();
                let mut d = self.steiner().dijkstra(self.nearest_vertex(x));
                d.truncate(nv);
                d
            }
            _ => self.mesh.positions.iter().map(|p| self.geodesic_dist(x, p)).collect(),
        }
    }

    /// Orthonormal tangent frame (e1, e2, N) at an analytic point, with e2 = N × e1.
    pub fn tangent_frame(&self, x: &Point) -> (Point, Point, Point) {
        match self.kind {
            SurfaceKind::FlatTorus => (Vector3::x(), Vector3::y(), Vector3::z()),
            SurfaceKind::UnitSphere => {
                let n = x.normalize();
                let a = if n.x.abs() < 0.6 { Vector3::x() } else { Vector3::y() };
                let e1 = (a - a.dot(&n) * n).normalize();
                (e1, n.cross(&e1), n)
            }
            SurfaceKind::TriMesh => {
                let v = self.nearest_vertex(x);
                (self.frames.e1[v], self.frames.e2[v], self.frames.normals[v])
            }
        }
    }

    /// Exponential map at an analytic point.
    pub fn exp_map(&self, x: &Point, v: &Point) -> Result<Point> {
        match self.kind {
            SurfaceKind::FlatTorus => self.normalize_point(&(x + v)),
            SurfaceKind::UnitSphere => {
                let n = x.normalize();
                let t = v - v.dot(&n) * n;
                let s = t.norm();
                if s == 0.0 {
                    return Ok(n);
                }
                Ok((s.cos() * n + s.sin() * t / s).normalize())
            }
            SurfaceKind::TriMesh => Err(Error::Unsupported("exponential map on a triangle mesh".into())),
        }
    }

    /// Inverse of the exponential map (the shortest tangent vector from x to y).
    pub fn log_map(&self, x: &Point, y: &Point) -> Result<Point> {
        match self.kind {
            SurfaceKind::FlatTorus => Ok(torus_delta(x, y)),
            SurfaceKind::UnitSphere => {
                let (a, b) = (x.normalize(), y.normalize());
                let t = b - b.dot(&a) * a;
                let s = t.norm();
                if s < 1e-300 {
                    return Ok(Vector3::zeros());
                }
                Ok(sphere_angle(&a, &b) * t / s)
            }
            SurfaceKind::TriMesh => Err(Error::Unsupported("logarithm map on a triangle mesh".into())),
        }
    }

    /// Gaussian curvature at a point (mesh: curvature density of the nearest vertex).
    pub fn curvature_at(&self, x: &Point) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus => 0.0,
            SurfaceKind::UnitSphere => 1.0,
            SurfaceKind::TriMesh => {
                let v = self.nearest_vertex(x);
                self.frames.defects[v] / self.dec.star0[v]
            }
        }
    }

    pub fn max_abs_curvature(&self) -> f64 {
        match self.kind {
            SurfaceKind::FlatTorus => 0.0,
            SurfaceKind::UnitSphere => 1.0,
            SurfaceKind::TriMesh => (0..self.mesh.num_vertices())
                .map(|v| (self.frames.defects[v] / self.dec.star0[v]).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Face containing an analytic point (torus/sphere) or the face of the
    /// nearest vertex ring closest to it (mesh).
    pub fn locate_face(&self, x: &Point) -> usize {
        let v = self.nearest_vertex(x);
        let mut best = self.mesh.rings[v][0].face;
        let mut best_score = f64::NEG_INFINITY;
        for r in &self.mesh.rings[v] {
            let score = self.barycentric(r.face, x).iter().cloned().fold(f64::INFINITY, f64::min);
            if score > best_score {
                best_score = score;
                best = r.face;
            }
        }
        if best_score >= -1e-12 {
            return best;
        }
        // fall back to a scan when the nearest vertex ring does not contain x
        (0..self.mesh.num_faces())
            .max_by(|&a, &b| {
                let sa = self.barycentric(a, x).iter().cloned().fold(f64::INFINITY, f64::min);
                let sb = self.barycentric(b, x).iter().cloned().fold(f64::INFINITY, f64::min);
                sa.total_cmp(&sb)
            })
            .unwrap()
    }

    /// Barycentric coordinates of the projection of `x` onto the plane of face `f`.
    pub fn barycentric(&self, f: usize, x: &Point) -> [f64; 3] {
        let [p, q, r] = self.mesh.face_points(f);
        let xx = match self.kind {
            SurfaceKind::FlatTorus => p + torus_delta(&p, x),
            SurfaceKind::UnitSphere => {
                // central projection onto the face plane
                let n = (q - p).cross(&(r - p));
                let xs = x.normalize();
                let t = n.dot(&p) / n.dot(&xs);
                if t <= 0.0 {
                    return [-1.0, -1.0, -1.0];
                }
                t * xs
            }
            SurfaceKind::TriMesh => *x,
        };
        let n = (q - p).cross(&(r - p));
        let nn = n.norm_squared();
        let a = (q - xx).cross(&(r - xx)).dot(&n) / nn;
        let b = (r - xx).cross(&(p - xx)).dot(&n) / nn;
        [a, b, 1.0 - a - b]
    }

    /// Parallel transport of a tangent vector along a path. Vertex paths use
    /// the discrete connection on frame coefficients; analytic curves (point
    /// sequences on the torus or sphere) use minimal rotations between
    /// consecutive normals.
    pub fn connection_transport(&self, path: &TransportPath, v0: TangentVector) -> Result<TangentVector> {
        match (path, v0) {
            (TransportPath::Vertices(vs), TangentVector::Coeff(z)) => {
                for w in vs.windows(2) {
                    if self.mesh.edge_between(w[0], w[1]).is_none() {
                        return Err(Error::InvalidInput(format!(
                            "path leaves the surface: {} and {} are not adjacent",
                            w[0], w[1]
                        )));
                    }
                }
                Ok(TangentVector::Coeff(self.frames.transport(&self.mesh, vs, z)))
            }
            (TransportPath::Curve(pts), TangentVector::Ambient(v)) => {
                if pts.is_empty() {
                    return Err(Error::InvalidInput("empty path".into()));
                }
                match self.kind {
                    SurfaceKind::FlatTorus => Ok(TangentVector::Ambient(v)),
                    SurfaceKind::UnitSphere => {
                        if pts.iter().any(|p| (p.norm() - 1.0).abs() > 1e-9) {
                            return Err(Error::InvalidInput("path leaves the unit sphere".into()));
                        }
                        let mut w = v;
                        for s in pts.windows(2) {
                            w = minimal_rotation(&s[0], &s[1], &w);
                        }
                        Ok(TangentVector::Ambient(w))
                    }
                    SurfaceKind::TriMesh => Err(Error::Unsupported("analytic curves on a triangle mesh".into())),
                }
            }
            _ => Err(Error::InvalidInput("vertex paths take frame coefficients, curves take ambient vectors".into())),
        }
    }

    fn steiner(&self) -> &SteinerGraph {
        self.steiner.get_or_init(|| SteinerGraph::build(&self.mesh))
    }
}

#[derive(Clone, Debug)]
pub enum TransportPath {
    Vertices(Vec<usize>),
    Curve(Vec<Point>),
}

#[derive(Clone, Copy, Debug)]
pub enum TangentVector {
    Coeff(Complex64),
    Ambient(Point),
}

/// Minimum-image displacement from x to y on the unit torus.
pub fn torus_delta(x: &Point, y: &Point) -> Point {
    let d = y - x;
    Vector3::new(d.x - d.x.round(), d.y - d.y.round(), 0.0)
}

/// Angle between unit vectors, accurate near 0 and π.
pub fn sphere_angle(a: &Point, b: &Point) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rotation taking unit normal `a` to `b` about `a × b`, applied to `v`.
pub fn minimal_rotation(a: &Point, b: &Point, v: &Point) -> Point {
    let axis = a.cross(b);
    let s = axis.norm();
    let c = a.dot(b);
    if s < 1e-300 {
        return *v;
    }
    let k = axis / s;
    v * c + k.cross(v) * s + k * k.dot(v) * (1.0 - c)
}

// === Steiner graph for mesh geodesics ===

struct SteinerGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

impl SteinerGraph {
    /// Nodes: vertices, then one midpoint per edge; every face links its six nodes pairwise.
    fn build(mesh: &Mesh) -> SteinerGraph {
        let nv = mesh.num_vertices();
        let mut adj = vec![Vec::new(); nv + mesh.num_edges()];
        for f in 0..mesh.num_faces() {
            let p = mesh.face_points(f);
            let mut nodes: Vec<(usize, Point)> = (0..3).map(|k| (mesh.faces[f][k], p[k])).collect();
            for k in 0..3 {
                let (e, _) = mesh.face_edges[f][k];
                nodes.push((nv + e, 0.5 * (p[k] + p[(k + 1) % 3])));
            }
            for a in 0..6 {
                for b in (a + 1)..6 {
                    let w = (nodes[a].1 - nodes[b].1).norm();
                    adj[nodes[a].0].push((nodes[b].0, w));
                    adj[nodes[b].0].push((nodes[a].0, w));
                }
            }
        }
        SteinerGraph { adj }
    }

    fn dijkstra(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(w, len) in &self.adj[u] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        dist
    }
}
